//! Row normalisation and removal of linearly dependent equalities.

use std::collections::BTreeMap;

use super::Triplet;

pub(super) enum Presolved {
    /// Kept rows with their scale factors.
    Rows { kept: Vec<usize>, scales: Vec<f64> },
    /// A dependent row contradicts the ones it depends on.
    Inconsistent,
}

const PIVOT_TOL: f64 = 1e-10;

/// Scales every row to unit norm and keeps a maximal independent subset,
/// chosen by pivoted Cholesky on the Gram matrix of the scaled rows.
pub(super) fn presolve(rows: &[Vec<Triplet>], rhs: &[f64]) -> Presolved {
    let m = rows.len();
    let mut columns: BTreeMap<(usize, usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        for &(b, r, c, v) in row {
            // Off-diagonal triplets stand for two entries.
            let w = if r == c { v } else { v * std::f64::consts::SQRT_2 };
            columns.entry((b, r, c)).or_default().push((i, w));
        }
    }
    let mut gram = vec![0.0; m * m];
    for col in columns.values() {
        for &(i, a) in col {
            for &(j, c) in col {
                gram[i * m + j] += a * c;
            }
        }
    }
    let scales: Vec<f64> = (0..m)
        .map(|i| {
            let d = gram[i * m + i];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let g = |i: usize, j: usize| gram[i * m + j] * scales[i] * scales[j];
    let b: Vec<f64> = (0..m).map(|i| rhs[i] * scales[i]).collect();

    // Empty rows: consistent only with a zero right-hand side.
    for i in 0..m {
        if scales[i] == 0.0 && rhs[i].abs() > PIVOT_TOL.sqrt() {
            return Presolved::Inconsistent;
        }
    }

    let mut residual: Vec<f64> = (0..m).map(|i| if scales[i] > 0.0 { 1.0 } else { 0.0 }).collect();
    let mut chosen = vec![false; m];
    let mut pivots = Vec::new();
    let mut factor: Vec<Vec<f64>> = Vec::new();
    loop {
        let mut best = None;
        for i in 0..m {
            if !chosen[i] && residual[i] > PIVOT_TOL && best.map_or(true, |k: usize| residual[i] > residual[k]) {
                best = Some(i);
            }
        }
        let Some(p) = best else { break };
        let d = residual[p].sqrt();
        let mut col = vec![0.0; m];
        for i in 0..m {
            if chosen[i] || i == p {
                continue;
            }
            let mut v = g(i, p);
            for prev in &factor {
                v -= prev[i] * prev[p];
            }
            col[i] = v / d;
            residual[i] -= col[i] * col[i];
        }
        col[p] = d;
        chosen[p] = true;
        pivots.push(p);
        factor.push(col);
    }

    // Dependent rows must agree with the combination of pivots they follow.
    let r = pivots.len();
    let mut u = vec![0.0; r];
    for t in 0..r {
        let mut v = b[pivots[t]];
        for s in 0..t {
            v -= factor[s][pivots[t]] * u[s];
        }
        u[t] = v / factor[t][pivots[t]];
    }
    let b_scale = 1.0 + b.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for i in 0..m {
        if chosen[i] || scales[i] == 0.0 {
            continue;
        }
        let predicted: f64 = (0..r).map(|t| factor[t][i] * u[t]).sum();
        let mismatch = (b[i] - predicted).abs();
        if mismatch > 1e-8 * b_scale {
            return Presolved::Inconsistent;
        }
    }
    let mut kept = pivots;
    kept.sort_unstable();
    let scales = kept.iter().map(|&i| scales[i]).collect();
    Presolved::Rows { kept, scales }
}
