//! Infeasible-start primal-dual interior-point method with the HKM search
//! direction and a Mehrotra predictor-corrector step.
//!
//! Internally the problem is `min <C', X>` with `C' = -C`; the dual
//! multipliers are negated on the way out so that the reported `y` is
//! feasible for `min b.y, sum y_i A_i - C in the cone`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::presolve::{presolve, Presolved};
use super::{Block, BlockValue, SemidefiniteProgram, Solution, SolveStatus, SolverOptions};

/// Entry of a coefficient matrix, both triangles present.
type Entry = (usize, usize, f64);

struct Data {
    blocks: Vec<Block>,
    /// Per row, `(block, p, q, a)` with both triangles.
    rows: Vec<Vec<(usize, usize, usize, f64)>>,
    /// Per block, the rows touching it in increasing order.
    by_block: Vec<Vec<(usize, Vec<Entry>)>>,
    b: DVector<f64>,
    c: Vec<BlockValue>,
}

fn zeros(blocks: &[Block]) -> Vec<BlockValue> {
    blocks
        .iter()
        .map(|b| match *b {
            Block::Psd(n) => BlockValue::Dense(DMatrix::zeros(n, n)),
            Block::Nonneg(n) => BlockValue::Diagonal(DVector::zeros(n)),
        })
        .collect()
}

fn scaled_identity(blocks: &[Block], scale: &[f64]) -> Vec<BlockValue> {
    blocks
        .iter()
        .zip(scale)
        .map(|(b, &s)| match *b {
            Block::Psd(n) => BlockValue::Dense(DMatrix::identity(n, n) * s),
            Block::Nonneg(n) => BlockValue::Diagonal(DVector::from_element(n, s)),
        })
        .collect()
}

fn add_entry(target: &mut BlockValue, p: usize, q: usize, v: f64) {
    match target {
        BlockValue::Dense(m) => m[(p, q)] += v,
        BlockValue::Diagonal(d) => d[p] += v,
    }
}

fn dot(a: &[BlockValue], b: &[BlockValue]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (BlockValue::Dense(x), BlockValue::Dense(y)) => x.dot(y),
            (BlockValue::Diagonal(x), BlockValue::Diagonal(y)) => x.dot(y),
            _ => unreachable!("block kinds agree"),
        })
        .sum()
}

fn norm(a: &[BlockValue]) -> f64 {
    dot(a, a).sqrt()
}

/// `a + s * b`.
fn axpy(a: &[BlockValue], s: f64, b: &[BlockValue]) -> Vec<BlockValue> {
    a.iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (BlockValue::Dense(x), BlockValue::Dense(y)) => BlockValue::Dense(x + y * s),
            (BlockValue::Diagonal(x), BlockValue::Diagonal(y)) => BlockValue::Diagonal(x + y * s),
            _ => unreachable!("block kinds agree"),
        })
        .collect()
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `sym(P Q V)` blockwise.
fn sym_product(p: &[BlockValue], q: &[BlockValue], v: &[BlockValue]) -> Vec<BlockValue> {
    p.iter()
        .zip(q)
        .zip(v)
        .map(|((p, q), v)| match (p, q, v) {
            (BlockValue::Dense(p), BlockValue::Dense(q), BlockValue::Dense(v)) => {
                BlockValue::Dense(symmetrize(p * q * v))
            }
            (BlockValue::Diagonal(p), BlockValue::Diagonal(q), BlockValue::Diagonal(v)) => {
                BlockValue::Diagonal(p.component_mul(q).component_mul(v))
            }
            _ => unreachable!("block kinds agree"),
        })
        .collect()
}

/// Inverse of a positive definite block; `None` when not positive definite.
fn inverse(x: &BlockValue) -> Option<BlockValue> {
    match x {
        BlockValue::Dense(m) => {
            let ch = Cholesky::new(m.clone())?;
            Some(BlockValue::Dense(symmetrize(ch.inverse())))
        }
        BlockValue::Diagonal(d) => {
            if d.iter().all(|&v| v > 0.0) {
                Some(BlockValue::Diagonal(d.map(|v| 1.0 / v)))
            } else {
                None
            }
        }
    }
}

/// Largest `a` with `x + a dx` in the cone (infinite when `dx` is in it).
fn max_step(x: &BlockValue, dx: &BlockValue) -> f64 {
    match (x, dx) {
        (BlockValue::Dense(x), BlockValue::Dense(dx)) => {
            let Some(ch) = Cholesky::new(x.clone()) else { return 0.0 };
            let l = ch.l();
            let Some(y) = l.solve_lower_triangular(dx) else { return 0.0 };
            let Some(w) = l.solve_lower_triangular(&y.transpose()) else { return 0.0 };
            let eig = SymmetricEigen::new(symmetrize(w));
            let lmin = eig.eigenvalues.min();
            if lmin >= 0.0 {
                f64::INFINITY
            } else {
                -1.0 / lmin
            }
        }
        (BlockValue::Diagonal(x), BlockValue::Diagonal(dx)) => x
            .iter()
            .zip(dx.iter())
            .filter(|(_, &d)| d < 0.0)
            .map(|(&v, &d)| -v / d)
            .fold(f64::INFINITY, f64::min),
        _ => unreachable!("block kinds agree"),
    }
}

fn step_length(x: &[BlockValue], dx: &[BlockValue]) -> f64 {
    x.iter()
        .zip(dx)
        .map(|(x, d)| max_step(x, d))
        .fold(f64::INFINITY, f64::min)
}

impl Data {
    fn build(p: &SemidefiniteProgram, kept: &[usize], scales: &[f64]) -> Self {
        let expand = |t: &[super::Triplet], s: f64| {
            let mut out = Vec::with_capacity(2 * t.len());
            for &(b, r, c, v) in t {
                out.push((b, r, c, v * s));
                if r != c {
                    out.push((b, c, r, v * s));
                }
            }
            out
        };
        let rows: Vec<_> = kept
            .iter()
            .zip(scales)
            .map(|(&i, &s)| expand(&p.constraints[i], s))
            .collect();
        let mut by_block: Vec<Vec<(usize, Vec<Entry>)>> = vec![Vec::new(); p.blocks.len()];
        for (i, row) in rows.iter().enumerate() {
            for &(b, r, c, v) in row {
                let list = &mut by_block[b];
                if list.last().map_or(true, |(j, _)| *j != i) {
                    list.push((i, Vec::new()));
                }
                list.last_mut().expect("just pushed").1.push((r, c, v));
            }
        }
        let b = DVector::from_iterator(kept.len(), kept.iter().zip(scales).map(|(&i, &s)| p.rhs[i] * s));
        let mut c = zeros(&p.blocks);
        for (blk, r, col, v) in expand(&p.objective, -1.0) {
            add_entry(&mut c[blk], r, col, v);
        }
        Self {
            blocks: p.blocks.clone(),
            rows,
            by_block,
            b,
            c,
        }
    }

    fn apply(&self, x: &[BlockValue]) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|row| {
                row.iter()
                    .map(|&(b, p, q, a)| {
                        a * match &x[b] {
                            BlockValue::Dense(m) => m[(p, q)],
                            BlockValue::Diagonal(d) => d[p],
                        }
                    })
                    .sum::<f64>()
            }),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> Vec<BlockValue> {
        let mut out = zeros(&self.blocks);
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            for &(b, p, q, a) in row {
                add_entry(&mut out[b], p, q, a * yi);
            }
        }
        out
    }

    /// `M_ij = Tr(A_i X A_j Z^-1)`.
    fn schur(&self, x: &[BlockValue], zinv: &[BlockValue]) -> DMatrix<f64> {
        let m = self.rows.len();
        let mut out = DMatrix::zeros(m, m);
        for (blk, list) in self.by_block.iter().enumerate() {
            match (&x[blk], &zinv[blk]) {
                (BlockValue::Dense(xm), BlockValue::Dense(v)) => {
                    let n = xm.nrows();
                    let mut g = DMatrix::zeros(n, n);
                    for (ii, (i, ei)) in list.iter().enumerate() {
                        // g = V A_i X
                        g.fill(0.0);
                        for &(p, q, a) in ei {
                            for r in 0..n {
                                let t = a * xm[(q, r)];
                                if t != 0.0 {
                                    for s in 0..n {
                                        g[(s, r)] += v[(s, p)] * t;
                                    }
                                }
                            }
                        }
                        for (j, ej) in &list[ii..] {
                            let val: f64 = ej.iter().map(|&(r, s, a)| a * g[(s, r)]).sum();
                            out[(*i, *j)] += val;
                            if i != j {
                                out[(*j, *i)] += val;
                            }
                        }
                    }
                }
                (BlockValue::Diagonal(xv), BlockValue::Diagonal(zi)) => {
                    let mut g = vec![0.0; xv.len()];
                    for (ii, (i, ei)) in list.iter().enumerate() {
                        for &(p, _, a) in ei {
                            g[p] += a * xv[p] * zi[p];
                        }
                        for (j, ej) in &list[ii..] {
                            let val: f64 = ej.iter().map(|&(p, _, a)| a * g[p]).sum();
                            out[(*i, *j)] += val;
                            if i != j {
                                out[(*j, *i)] += val;
                            }
                        }
                        for &(p, _, _) in ei {
                            g[p] = 0.0;
                        }
                    }
                }
                _ => unreachable!("block kinds agree"),
            }
        }
        out
    }

    /// Starting scales for `X` and `Z` per block.
    fn initial_scales(&self) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        for (blk, list) in self.by_block.iter().enumerate() {
            let n = self.blocks[blk].order() as f64;
            let mut xi = 10f64.max(n.sqrt());
            let mut eta = xi;
            for (i, e) in list {
                let na = e.iter().map(|&(_, _, a)| a * a).sum::<f64>().sqrt();
                xi = xi.max(n * (1.0 + self.b[*i].abs()) / (1.0 + na));
                eta = eta.max(1.0 + na);
            }
            eta = eta.max(1.0 + norm(std::slice::from_ref(&self.c[blk])));
            xs.push(xi);
            zs.push(eta);
        }
        (xs, zs)
    }
}

const REFINEMENT_STEPS: usize = 3;

fn factor_schur(m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let scale = m.diagonal().iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..6 {
        let mut mm = m.clone();
        for i in 0..mm.nrows() {
            mm[(i, i)] += reg * scale;
        }
        if let Some(ch) = Cholesky::new(mm) {
            return Some(ch);
        }
        reg = if reg == 0.0 { 1e-14 } else { reg * 100.0 };
    }
    None
}

struct Iterate {
    x: Vec<BlockValue>,
    y: DVector<f64>,
    z: Vec<BlockValue>,
}

#[derive(Clone, Copy)]
struct Measures {
    pobj: f64,
    dobj: f64,
    relp: f64,
    reld: f64,
}

impl Measures {
    fn merit(&self) -> f64 {
        self.relp.max(self.reld).max((self.pobj - self.dobj).abs())
    }
}

pub fn solve(p: &SemidefiniteProgram, options: &SolverOptions) -> Solution {
    let (kept, scales) = match presolve(&p.constraints, &p.rhs) {
        Presolved::Rows { kept, scales } => (kept, scales),
        Presolved::Inconsistent => {
            return Solution {
                status: SolveStatus::Infeasible,
                primal_value: f64::NAN,
                dual_value: f64::NAN,
                gap: f64::NAN,
                primal_infeasibility: f64::INFINITY,
                dual_infeasibility: f64::NAN,
                iterations: 0,
                x: zeros(&p.blocks),
                y: vec![0.0; p.rhs.len()],
                z: zeros(&p.blocks),
            };
        }
    };
    let data = Data::build(p, &kept, &scales);
    let (status, it, meas, iterations) = run(&data, options);
    let mut y = vec![0.0; p.rhs.len()];
    for ((&i, &s), &v) in kept.iter().zip(&scales).zip(it.y.iter()) {
        y[i] = -v * s;
    }
    let primal_value = -meas.pobj;
    let dual_value = -meas.dobj;
    Solution {
        status,
        primal_value,
        dual_value,
        gap: (primal_value - dual_value).abs(),
        primal_infeasibility: meas.relp,
        dual_infeasibility: meas.reld,
        iterations,
        x: it.x,
        y,
        z: it.z,
    }
}

fn run(d: &Data, options: &SolverOptions) -> (SolveStatus, Iterate, Measures, usize) {
    let tol = options.tolerance;
    let nu: f64 = d.blocks.iter().map(|b| b.order() as f64).sum();
    let (xs, zs) = d.initial_scales();
    let mut it = Iterate {
        x: scaled_identity(&d.blocks, &xs),
        y: DVector::zeros(d.b.len()),
        z: scaled_identity(&d.blocks, &zs),
    };
    let norm_b = d.b.norm();
    let norm_c = norm(&d.c);
    let mut best: Option<(Iterate, Measures)> = None;
    let mut status = SolveStatus::NumericalLimit;
    let mut iterations = 0;

    for iter in 0..=options.max_iterations {
        iterations = iter;
        let rp = &d.b - d.apply(&it.x);
        let aty = d.adjoint(&it.y);
        let rd = axpy(&axpy(&d.c, -1.0, &it.z), -1.0, &aty);
        let meas = Measures {
            pobj: dot(&d.c, &it.x),
            dobj: d.b.dot(&it.y),
            relp: rp.norm() / (1.0 + norm_b),
            reld: norm(&rd) / (1.0 + norm_c),
        };
        if best.as_ref().map_or(true, |(_, m)| meas.merit() <= m.merit()) {
            best = Some((
                Iterate {
                    x: it.x.clone(),
                    y: it.y.clone(),
                    z: it.z.clone(),
                },
                meas,
            ));
        }
        if meas.relp <= tol && meas.reld <= tol && (meas.pobj - meas.dobj).abs() <= tol {
            status = SolveStatus::Optimal;
            best = Some((it, meas));
            break;
        }
        // Farkas-type certificates: a diverging dual objective with a
        // vanishing residual, or a diverging primal objective likewise.
        if meas.dobj > 0.0 && (norm(&rd) + norm_c) < 1e-8 * meas.dobj {
            status = SolveStatus::Infeasible;
            best = Some((it, meas));
            break;
        }
        if -meas.pobj > 0.0 && (rp.norm() + norm_b) < 1e-8 * -meas.pobj {
            status = SolveStatus::Infeasible;
            best = Some((it, meas));
            break;
        }
        if iter == options.max_iterations {
            break;
        }

        let mu = dot(&it.x, &it.z) / nu;
        let Some(zinv) = it.z.iter().map(inverse).collect::<Option<Vec<_>>>() else { break };
        let Some(chol) = factor_schur(d.schur(&it.x, &zinv)) else { break };
        let base = d.apply(&sym_product(&it.x, &rd, &zinv));

        let direction = |rc: &[BlockValue]| {
            let rhs = &rp - d.apply(rc) + &base;
            let mut dy = chol.solve(&rhs);
            let mut dz = axpy(&rd, -1.0, &d.adjoint(&dy));
            let mut dx = axpy(rc, -1.0, &sym_product(&it.x, &dz, &zinv));
            // The Schur matrix loses accuracy as X approaches the boundary;
            // refinement restores A dx = rp.
            for _ in 0..REFINEMENT_STEPS {
                let res = &rp - d.apply(&dx);
                if res.norm() <= 1e-15 * (1.0 + rp.norm()) {
                    break;
                }
                dy += chol.solve(&res);
                dz = axpy(&rd, -1.0, &d.adjoint(&dy));
                dx = axpy(rc, -1.0, &sym_product(&it.x, &dz, &zinv));
            }
            (dx, dy, dz)
        };

        let neg_x = axpy(&zeros(&d.blocks), -1.0, &it.x);
        let (dxp, _, dzp) = direction(&neg_x);
        let ap = step_length(&it.x, &dxp).min(1.0);
        let ad = step_length(&it.z, &dzp).min(1.0);
        let mu_aff = dot(&axpy(&it.x, ap, &dxp), &axpy(&it.z, ad, &dzp)) / nu;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let mut rc = axpy(&neg_x, sigma * mu, &zinv);
        rc = axpy(&rc, -1.0, &sym_product(&dxp, &dzp, &zinv));
        let (dx, dy, dz) = direction(&rc);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap = (gamma * step_length(&it.x, &dx)).min(1.0);
        let ad = (gamma * step_length(&it.z, &dz)).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            break;
        }
        let next = Iterate {
            x: axpy(&it.x, ap, &dx),
            y: &it.y + &dy * ad,
            z: axpy(&it.z, ad, &dz),
        };
        if !next.y.iter().all(|v| v.is_finite()) {
            break;
        }
        it = next;
    }
    let (it, meas) = best.expect("at least one iterate is measured");
    (status, it, meas, iterations)
}
