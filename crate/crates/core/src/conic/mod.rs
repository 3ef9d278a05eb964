//! Linear and semidefinite programs in a block-diagonal standard form.
//!
//! ```text
//! maximise   sum_b <C_b, X_b>
//! subject to sum_b <A_ib, X_b> = b_i      for every row i
//!            X_b PSD (semidefinite blocks) or X_b >= 0 (nonnegative blocks)
//! ```
//!
//! The dual is `minimise b.y subject to sum_i y_i A_i - C = Z, Z in the cone`,
//! so every dual feasible `y` gives the upper bound `b.y`. Coefficient
//! matrices are symmetric and given as sparse upper-triangle triplets.

mod ipm;
mod presolve;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ipm::solve;

/// Default LP tolerance.
pub const LP_TOLERANCE: f64 = 1e-9;
/// Default SDP tolerance.
pub const SDP_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// Symmetric positive semidefinite block of the given order.
    Psd(usize),
    /// Nonnegative orthant of the given dimension (diagonal entries only).
    Nonneg(usize),
}

impl Block {
    pub fn order(&self) -> usize {
        match *self {
            Block::Psd(n) | Block::Nonneg(n) => n,
        }
    }
}

/// Entry `(block, row, col, value)` of a symmetric block-diagonal matrix
/// with `row <= col`; off-diagonal entries stand for both positions.
pub type Triplet = (usize, usize, usize, f64);

/// Problem in the standard form above. JSON layout:
/// `{"blocks": [{"psd": n} | {"nonneg": n}], "objective": [[b, r, c, v]],
/// "constraints": [[[b, r, c, v], ...], ...], "rhs": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemidefiniteProgram {
    pub blocks: Vec<Block>,
    pub objective: Vec<Triplet>,
    pub constraints: Vec<Vec<Triplet>>,
    pub rhs: Vec<f64>,
}

impl SemidefiniteProgram {
    pub fn new(blocks: Vec<Block>) -> Self {
        Self {
            blocks,
            objective: Vec::new(),
            constraints: Vec::new(),
            rhs: Vec::new(),
        }
    }

    /// Appends the row `sum entries = rhs` and returns its index.
    pub fn add_constraint(&mut self, entries: Vec<Triplet>, rhs: f64) -> usize {
        self.constraints.push(entries);
        self.rhs.push(rhs);
        self.constraints.len() - 1
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.constraints.len() != self.rhs.len() {
            return Err(Error::ShapeMismatch("constraint and rhs counts differ".into()));
        }
        if self.blocks.iter().any(|b| b.order() == 0) {
            return Err(Error::ShapeMismatch("empty block".into()));
        }
        let check = |t: &Triplet| -> Result<()> {
            let (b, r, c, v) = *t;
            let block = self
                .blocks
                .get(b)
                .ok_or_else(|| Error::ShapeMismatch(format!("block {b} does not exist")))?;
            if r > c || c >= block.order() {
                return Err(Error::ShapeMismatch(format!(
                    "entry ({r}, {c}) is not in the upper triangle of block {b}"
                )));
            }
            if matches!(block, Block::Nonneg(_)) && r != c {
                return Err(Error::ShapeMismatch(format!("off-diagonal entry in nonnegative block {b}")));
            }
            if !v.is_finite() {
                return Err(Error::Invalid("non-finite coefficient".into()));
            }
            Ok(())
        };
        self.objective.iter().try_for_each(check)?;
        self.constraints.iter().flatten().try_for_each(check)?;
        if self.rhs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("non-finite right-hand side".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let p: Self = serde_json::from_value(value.clone()).map_err(|e| Error::Invalid(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

/// `maximise c.x subject to A x = b`, with each variable either nonnegative
/// or free.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub nonnegative: Vec<bool>,
    /// Sparse rows as `(variable, coefficient)` lists.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
}

impl LinearProgram {
    /// Program with `n` nonnegative variables and a zero objective.
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![0.0; n],
            nonnegative: vec![true; n],
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn n_variables(&self) -> usize {
        self.objective.len()
    }

    pub fn add_variable(&mut self, objective: f64, nonnegative: bool) -> usize {
        self.objective.push(objective);
        self.nonnegative.push(nonnegative);
        self.objective.len() - 1
    }

    pub fn add_equality(&mut self, row: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.rows.push(row);
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    /// Adds `row . x <= rhs` through a fresh nonnegative slack.
    pub fn add_less_equal(&mut self, mut row: Vec<(usize, f64)>, rhs: f64) -> usize {
        let slack = self.add_variable(0.0, true);
        row.push((slack, 1.0));
        self.add_equality(row, rhs)
    }

    /// Standard-form equivalent: one nonnegative block holding the
    /// nonnegative variables followed by the positive and negative parts of
    /// the free ones. Returns the map from variables to `(plus, minus)`
    /// positions.
    fn to_conic(&self) -> Result<(SemidefiniteProgram, Vec<(usize, Option<usize>)>)> {
        let n = self.n_variables();
        if self.nonnegative.len() != n || self.rows.len() != self.rhs.len() {
            return Err(Error::ShapeMismatch("linear program dimensions disagree".into()));
        }
        let mut map = Vec::with_capacity(n);
        let mut next = 0;
        for j in 0..n {
            if self.nonnegative[j] {
                map.push((next, None));
                next += 1;
            } else {
                map.push((next, Some(next + 1)));
                next += 2;
            }
        }
        let expand = |entries: &mut Vec<Triplet>, j: usize, v: f64| {
            let (p, m) = map[j];
            entries.push((0, p, p, v));
            if let Some(m) = m {
                entries.push((0, m, m, -v));
            }
        };
        let mut sdp = SemidefiniteProgram::new(vec![Block::Nonneg(next.max(1))]);
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                expand(&mut sdp.objective, j, c);
            }
        }
        for (row, &b) in self.rows.iter().zip(&self.rhs) {
            let mut entries = Vec::with_capacity(row.len());
            for &(j, v) in row {
                if j >= n {
                    return Err(Error::ShapeMismatch(format!("variable {j} out of range")));
                }
                expand(&mut entries, j, v);
            }
            sdp.add_constraint(merge_duplicates(entries), b);
        }
        Ok((sdp, map))
    }
}

fn merge_duplicates(mut entries: Vec<Triplet>) -> Vec<Triplet> {
    entries.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let mut out: Vec<Triplet> = Vec::with_capacity(entries.len());
    for e in entries {
        match out.last_mut() {
            Some(last) if (last.0, last.1, last.2) == (e.0, e.1, e.2) => last.3 += e.3,
            _ => out.push(e),
        }
    }
    out.retain(|e| e.3 != 0.0);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::NumericalLimit => "numerical_limit",
        })
    }
}

/// Primal value of one block.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockValue {
    Dense(DMatrix<f64>),
    Diagonal(DVector<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// `<C, X>` at the returned primal iterate.
    pub primal_value: f64,
    /// `b.y` at the returned dual iterate.
    pub dual_value: f64,
    /// `|primal_value - dual_value|`.
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
    pub x: Vec<BlockValue>,
    pub y: Vec<f64>,
    pub z: Vec<BlockValue>,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solution of a [`LinearProgram`] in its own variables.
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Bound on the absolute duality gap and on the relative primal and dual
    /// residuals.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl SolverOptions {
    pub fn lp() -> Self {
        Self {
            tolerance: LP_TOLERANCE,
            max_iterations: 200,
        }
    }

    pub fn sdp() -> Self {
        Self {
            tolerance: SDP_TOLERANCE,
            max_iterations: 200,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

pub fn solve_sdp(p: &SemidefiniteProgram, options: &SolverOptions) -> Result<Solution> {
    if !(options.tolerance > 0.0) {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    p.validate()?;
    Ok(solve(p, options))
}

pub fn solve_lp(p: &LinearProgram, options: &SolverOptions) -> Result<LpSolution> {
    if !(options.tolerance > 0.0) {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let (sdp, map) = p.to_conic()?;
    sdp.validate()?;
    let s = solve(&sdp, options);
    let BlockValue::Diagonal(v) = &s.x[0] else {
        unreachable!("linear programs map to one nonnegative block")
    };
    let x = map
        .iter()
        .map(|&(pl, mi)| v[pl] - mi.map_or(0.0, |m| v[m]))
        .collect();
    Ok(LpSolution {
        status: s.status,
        primal_value: s.primal_value,
        dual_value: s.dual_value,
        gap: s.gap,
        x,
        y: s.y,
        iterations: s.iterations,
    })
}
