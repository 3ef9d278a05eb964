//! Guessing-probability relaxations: one moment matrix per outcome of Eve,
//! sharing the pinned Bell values.
//!
//! Eve's guess `e` of the bits of the guessed observables splits the state
//! into subnormalised pieces. Each piece gets its own real moment matrix
//! `Gamma_e`, the traces `Gamma_e[1, 1]` sum to one, and every pinned Bell
//! expression is matched by the sum over `e`. The guessing probability is
//! `sum_e <prod_i (1 + s_i X_i) / 2>_e` with `s_i` the sign Eve guesses for
//! `X_i`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{LevelSpec, Monomial, PartyObservable, Polynomial};
use crate::conic::{solve_sdp, Block, BlockValue, SemidefiniteProgram, SolveStatus, SolverOptions, Triplet};
use crate::error::{Error, Result};

/// Index set of a moment matrix and the canonical moment of every entry.
#[derive(Clone, Debug)]
pub struct MomentStructure {
    n_parties: usize,
    monomials: Vec<Monomial>,
    /// `keys[u][v]` indexes `moments`.
    keys: Vec<Vec<usize>>,
    /// Distinct moments, by first occurrence in row-major upper-triangle order.
    moments: Vec<Monomial>,
    first: Vec<(usize, usize)>,
    lookup: BTreeMap<Monomial, usize>,
}

/// Builds the moment structure of a level with two settings per party.
pub fn build_moment_structure(level: &LevelSpec, n_parties: usize) -> Result<MomentStructure> {
    let monomials = level.enumerate_monomials(n_parties, 2)?;
    let n = monomials.len();
    let mut keys = vec![vec![0; n]; n];
    let mut moments = Vec::new();
    let mut first = Vec::new();
    let mut lookup = BTreeMap::new();
    for u in 0..n {
        let adj = monomials[u].adjoint();
        for v in u..n {
            let key = adj.multiply(&monomials[v])?.symmetric_key();
            let id = *lookup.entry(key.clone()).or_insert_with(|| {
                moments.push(key);
                first.push((u, v));
                moments.len() - 1
            });
            keys[u][v] = id;
            keys[v][u] = id;
        }
    }
    Ok(MomentStructure {
        n_parties,
        monomials,
        keys,
        moments,
        first,
        lookup,
    })
}

impl MomentStructure {
    pub fn size(&self) -> usize {
        self.monomials.len()
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn moments(&self) -> &[Monomial] {
        &self.moments
    }

    /// Canonical moment at entry `(u, v)`.
    pub fn key(&self, u: usize, v: usize) -> &Monomial {
        &self.moments[self.keys[u][v]]
    }

    pub fn row_of(&self, m: &Monomial) -> Option<usize> {
        self.monomials.iter().position(|x| x == m)
    }

    /// First entry holding the moment of `m`, if any entry does.
    pub fn position(&self, m: &Monomial) -> Option<(usize, usize)> {
        self.lookup.get(&m.symmetric_key()).map(|&i| self.first[i])
    }

    fn require(&self, m: &Monomial) -> Result<(usize, usize)> {
        self.position(m).ok_or_else(|| Error::MissingMonomial(m.to_string()))
    }

    /// Entries `(u, v)`, `u <= v`, that repeat an earlier moment, paired
    /// with that first occurrence.
    pub fn shared_entries(&self) -> Vec<((usize, usize), (usize, usize))> {
        let n = self.size();
        let mut out = Vec::new();
        for u in 0..n {
            for v in u..n {
                let f = self.first[self.keys[u][v]];
                if f != (u, v) {
                    out.push(((u, v), f));
                }
            }
        }
        out
    }
}

/// Which observables Eve guesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuessingScenario {
    n_parties: usize,
    guessed: Vec<PartyObservable>,
}

impl GuessingScenario {
    /// `guessed` lists `(party, setting)` pairs, settings counted from 0.
    pub fn new(n_parties: usize, guessed: &[(usize, usize)]) -> Result<Self> {
        if guessed.is_empty() {
            return Err(Error::Invalid("no guessed observable".into()));
        }
        let mut parties = Vec::new();
        for &(p, s) in guessed {
            if p >= n_parties {
                return Err(Error::PartyOutOfRange { party: p, n_parties });
            }
            if s >= 2 {
                return Err(Error::SettingOutOfRange {
                    setting: s,
                    n_settings: 2,
                });
            }
            if parties.contains(&p) {
                return Err(Error::Invalid(format!("party {p} guessed twice")));
            }
            parties.push(p);
        }
        Ok(Self {
            n_parties,
            guessed: guessed
                .iter()
                .map(|&(p, s)| PartyObservable::new(p as u8, s as u8))
                .collect(),
        })
    }

    /// Eve guesses `A1`.
    pub fn a1() -> Self {
        Self::new(3, &[(0, 0)]).expect("valid")
    }

    pub fn a1b1() -> Self {
        Self::new(3, &[(0, 0), (1, 0)]).expect("valid")
    }

    pub fn a1b1c1() -> Self {
        Self::new(3, &[(0, 0), (1, 0), (2, 0)]).expect("valid")
    }

    pub fn a2b2c2() -> Self {
        Self::new(3, &[(0, 1), (1, 1), (2, 1)]).expect("valid")
    }

    /// Eve guesses `A1` in the two-party CHSH scenario.
    pub fn chsh_a1() -> Self {
        Self::new(2, &[(0, 0)]).expect("valid")
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn guessed(&self) -> &[PartyObservable] {
        &self.guessed
    }

    pub fn n_outcomes(&self) -> usize {
        1 << self.guessed.len()
    }

    /// Guessed signs for Eve's outcome `e`: bit `k` of `e`, counted from the
    /// most significant, set means `-1` for the `k`-th guessed observable.
    pub fn signs(&self, e: usize) -> Vec<i8> {
        let k = self.guessed.len();
        (0..k)
            .map(|i| if (e >> (k - 1 - i)) & 1 == 0 { 1 } else { -1 })
            .collect()
    }

    /// Expansion of `prod_i (1 + s_i X_i) / 2` for outcome `e`.
    pub fn projector(&self, e: usize) -> Result<Vec<(f64, Monomial)>> {
        let k = self.guessed.len();
        let signs = self.signs(e);
        let weight = 1.0 / (1u64 << k) as f64;
        let mut out = Vec::with_capacity(1 << k);
        for subset in 0..(1usize << k) {
            let mut sign = 1.0;
            let mut word = Vec::new();
            for i in 0..k {
                if subset >> i & 1 == 1 {
                    sign *= signs[i] as f64;
                    word.push(self.guessed[i]);
                }
            }
            out.push((weight * sign, Monomial::canonicalize(&word, self.n_parties)?));
        }
        Ok(out)
    }
}

impl fmt::Display for GuessingScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.guessed {
            write!(f, "{}{}", (b'a' + g.party) as char, g.setting + 1)?;
        }
        Ok(())
    }
}

impl FromStr for GuessingScenario {
    type Err = Error;

    /// Parses names such as `a1`, `a1b1` or `a2b2c2` for three parties and
    /// `chsh_a1` for the two-party case.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (n_parties, body) = match lower.strip_prefix("chsh_") {
            Some(rest) => (2, rest.to_string()),
            None => (3, lower.clone()),
        };
        let bytes = body.as_bytes();
        if bytes.is_empty() || bytes.len() % 2 != 0 {
            return Err(Error::Invalid(format!("unknown scenario `{s}`")));
        }
        let mut guessed = Vec::new();
        for pair in bytes.chunks(2) {
            let party = pair[0].wrapping_sub(b'a') as usize;
            let setting = pair[1].wrapping_sub(b'1') as usize;
            if party >= n_parties || setting >= 2 {
                return Err(Error::Invalid(format!("unknown scenario `{s}`")));
            }
            guessed.push((party, setting));
        }
        Self::new(n_parties, &guessed)
    }
}

/// A Bell expression pinned to a value.
pub type Pin = (Polynomial<f64>, f64);

/// Pins closer than this to the extreme value of their expression over the
/// level are treated as extreme and trigger facial reduction.
pub const EXTREME_TOLERANCE: f64 = 1e-7;

const FACE_NOISE: f64 = 1e-7;

/// Linear functional `sum coef * Gamma[u, v]` on one block.
type Functional = Vec<((usize, usize), f64)>;

/// Turns a functional into upper-triangle triplets, in the coordinates of
/// the face `Gamma = V U V^T` when one is given.
fn triplets(block: usize, f: &Functional, face: Option<&DMatrix<f64>>) -> Vec<Triplet> {
    match face {
        None => {
            let mut t: Vec<Triplet> = f
                .iter()
                .map(|&((u, v), c)| {
                    let (r, col) = if u <= v { (u, v) } else { (v, u) };
                    (block, r, col, if r == col { c } else { c / 2.0 })
                })
                .collect();
            t.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
            let mut out: Vec<Triplet> = Vec::with_capacity(t.len());
            for e in t {
                match out.last_mut() {
                    Some(l) if (l.0, l.1, l.2) == (e.0, e.1, e.2) => l.3 += e.3,
                    _ => out.push(e),
                }
            }
            out.retain(|e| e.3 != 0.0);
            out
        }
        Some(v) => {
            let r = v.ncols();
            let mut s = DMatrix::<f64>::zeros(r, r);
            for &((a, b), c) in f {
                let ra = v.row(a);
                let rb = v.row(b);
                s += (ra.transpose() * rb + rb.transpose() * ra) * (c / 2.0);
            }
            // The face basis is accurate to roughly the extreme solve's
            // tolerance, so rows vanishing on the face come back as noise.
            let scale = s.amax();
            let mut out = Vec::new();
            if scale < FACE_NOISE {
                return out;
            }
            for i in 0..r {
                for j in i..r {
                    if s[(i, j)].abs() > 1e-14 * scale {
                        out.push((block, i, j, s[(i, j)]));
                    }
                }
            }
            out
        }
    }
}

/// Rows shared by every formulation: moment consistency per block and the
/// total normalisation.
fn structure_rows(ms: &MomentStructure, blocks: usize, face: Option<&DMatrix<f64>>, p: &mut SemidefiniteProgram) {
    let shared = ms.shared_entries();
    for e in 0..blocks {
        for &(at, first) in &shared {
            let row = triplets(e, &vec![(at, 1.0), (first, -1.0)], face);
            if !row.is_empty() {
                p.add_constraint(row, 0.0);
            }
        }
    }
    let norm: Vec<Triplet> = (0..blocks).flat_map(|e| triplets(e, &vec![((0, 0), 1.0)], face)).collect();
    p.add_constraint(norm, 1.0);
}

fn expression_functional(ms: &MomentStructure, expr: &Polynomial<f64>) -> Result<Functional> {
    expr.terms()
        .iter()
        .map(|(m, &c)| Ok((ms.require(m)?, c)))
        .collect()
}

fn check_pins(sc: &GuessingScenario, pins: &[Pin]) -> Result<()> {
    for (expr, value) in pins {
        if expr.n_parties() != sc.n_parties() {
            return Err(Error::PartyCountMismatch {
                left: expr.n_parties(),
                right: sc.n_parties(),
            });
        }
        if !value.is_finite() {
            return Err(Error::Invalid("non-finite pinned value".into()));
        }
    }
    Ok(())
}

/// Builds the relaxation at `level` with the given pins.
pub fn build_guessing_relaxation(sc: &GuessingScenario, level: &LevelSpec, pins: &[Pin]) -> Result<SemidefiniteProgram> {
    let ms = build_moment_structure(level, sc.n_parties())?;
    build_with_structure(sc, &ms, pins, None)
}

fn build_with_structure(
    sc: &GuessingScenario,
    ms: &MomentStructure,
    pins: &[Pin],
    face: Option<&DMatrix<f64>>,
) -> Result<SemidefiniteProgram> {
    check_pins(sc, pins)?;
    let blocks = sc.n_outcomes();
    let order = face.map_or(ms.size(), |v| v.ncols());
    let mut p = SemidefiniteProgram::new(vec![Block::Psd(order); blocks]);
    structure_rows(ms, blocks, face, &mut p);
    for (expr, value) in pins {
        let f = expression_functional(ms, expr)?;
        let row: Vec<Triplet> = (0..blocks).flat_map(|e| triplets(e, &f, face)).collect();
        p.add_constraint(row, *value);
    }
    for e in 0..blocks {
        let f: Functional = sc
            .projector(e)?
            .into_iter()
            .map(|(c, m)| Ok((ms.require(&m)?, c)))
            .collect::<Result<_>>()?;
        p.objective.extend(triplets(e, &f, face));
    }
    Ok(p)
}

/// Face of the moment cone containing every feasible block, found by
/// checking each pin against the extreme values of its expression over the
/// level. `None` when no pin is extreme.
fn pinned_face(ms: &MomentStructure, pins: &[Pin]) -> Result<Option<DMatrix<f64>>> {
    let n = ms.size();
    let mut face = DMatrix::<f64>::identity(n, n);
    let mut reduced = false;
    let options = SolverOptions::sdp().with_tolerance(1e-9);
    let candidates = extreme_candidates(pins)?;
    loop {
        let mut changed = false;
        for (expr, value) in &candidates {
            let f = expression_functional(ms, expr)?;
            for sign in [1.0, -1.0] {
                let mut p = SemidefiniteProgram::new(vec![Block::Psd(face.ncols())]);
                structure_rows(ms, 1, Some(&face), &mut p);
                let signed: Functional = f.iter().map(|&(at, c)| (at, sign * c)).collect();
                p.objective = triplets(0, &signed, Some(&face));
                let s = solve_sdp(&p, &options)?;
                if s.status == SolveStatus::Infeasible {
                    return Err(Error::Infeasible("no moment matrix on the pinned face".into()));
                }
                let extreme = s.dual_value;
                let target = sign * value;
                if target > extreme + EXTREME_TOLERANCE * (1.0 + value.abs()) {
                    return Err(Error::Infeasible(format!(
                        "pinned value {value} lies beyond the level range of the expression"
                    )));
                }
                if (target - extreme).abs() > EXTREME_TOLERANCE * (1.0 + value.abs()) {
                    continue;
                }
                let (BlockValue::Dense(x), BlockValue::Dense(w)) = (&s.x[0], &s.z[0]) else {
                    unreachable!("one semidefinite block")
                };
                let kernel = primal_range(x, small_eigenvectors(w).ncols());
                if kernel.ncols() < face.ncols() {
                    face = &face * kernel;
                    changed = true;
                    reduced = true;
                }
            }
        }
        if !changed || face.ncols() == 0 {
            break;
        }
    }
    if face.ncols() == 0 {
        return Err(Error::Infeasible("pins force a zero moment matrix".into()));
    }
    Ok(reduced.then_some(face))
}

/// Each pin, plus the pins combined along the direction of their values.
/// The combination is extreme when the pinned point lies on a round part of
/// the joint range, where no single pin is.
fn extreme_candidates(pins: &[Pin]) -> Result<Vec<Pin>> {
    let mut out = pins.to_vec();
    let norm = pins.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt();
    if pins.len() > 1 && norm > 0.0 {
        let mut combined = Polynomial::zero(pins[0].0.n_parties());
        for (expr, value) in pins {
            combined = combined.try_add(&expr.scale(value / norm))?;
        }
        out.push((combined, norm));
    }
    Ok(out)
}

fn small_eigenvectors(w: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(w.clone());
    let top = eig.eigenvalues.amax().max(1.0);
    let kernel: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] <= 1e-5 * top)
        .collect();
    DMatrix::from_fn(w.nrows(), kernel.len(), |i, j| eig.eigenvectors[(i, kernel[j])])
}

/// Range of the extreme primal optimum, spanned by its `k` leading
/// eigenvectors where `k` is the kernel dimension of the dual slack. The
/// central-path `X` fixes this subspace to the solver tolerance, while the
/// kernel of `W` is only determined to about its square root.
fn primal_range(x: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = x.nrows();
    let eig = SymmetricEigen::new(x.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    DMatrix::from_fn(n, k.min(n), |i, j| eig.eigenvectors[(i, order[j])])
}

/// Outcome of one relaxation solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NpaBound {
    /// Dual objective, the reported upper bound.
    pub bound: f64,
    pub primal: f64,
    pub status: SolveStatus,
    pub gap: f64,
    pub iterations: usize,
    /// Order of the blocks after facial reduction, when a pin was extreme.
    pub face_order: Option<usize>,
}

/// Solves the relaxation and returns the bound with solver diagnostics.
/// Pins at the extreme value of their expression over the level leave no
/// strictly feasible point; the blocks are then restricted to the face
/// exposed by the optimal dual slack of that extreme problem.
pub fn solve_guessing(
    sc: &GuessingScenario,
    level: &LevelSpec,
    pins: &[Pin],
    options: &SolverOptions,
) -> Result<NpaBound> {
    let ms = build_moment_structure(level, sc.n_parties())?;
    solve_with_structure(sc, &ms, pins, options)
}

fn solve_with_structure(
    sc: &GuessingScenario,
    ms: &MomentStructure,
    pins: &[Pin],
    options: &SolverOptions,
) -> Result<NpaBound> {
    check_pins(sc, pins)?;
    let face = match pinned_face(ms, pins) {
        Ok(face) => face,
        Err(Error::Infeasible(_)) => {
            return Ok(NpaBound {
                bound: f64::NAN,
                primal: f64::NAN,
                status: SolveStatus::Infeasible,
                gap: f64::NAN,
                iterations: 0,
                face_order: None,
            })
        }
        Err(e) => return Err(e),
    };
    let p = build_with_structure(sc, ms, pins, face.as_ref())?;
    let s = solve_sdp(&p, options)?;
    Ok(NpaBound {
        bound: s.dual_value,
        primal: s.primal_value,
        status: s.status,
        gap: s.gap,
        iterations: s.iterations,
        face_order: face.map(|f| f.ncols()),
    })
}

/// Upper bound on the guessing probability. Errors unless the solver
/// reports an optimal pair.
pub fn gp_upper_bound(sc: &GuessingScenario, level: &LevelSpec, pins: &[Pin]) -> Result<f64> {
    let r = solve_guessing(sc, level, pins, &SolverOptions::sdp())?;
    match r.status {
        SolveStatus::Optimal => Ok(r.bound),
        SolveStatus::Infeasible => Err(Error::Infeasible("pinned values admit no moment matrices".into())),
        SolveStatus::NumericalLimit => Err(Error::Solver(format!(
            "gap {:e} after {} iterations (bound {})",
            r.gap, r.iterations, r.bound
        ))),
    }
}

/// One row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub violation: f64,
    pub bound: Option<f64>,
    pub status: Option<SolveStatus>,
    pub gap: Option<f64>,
    pub error: Option<String>,
}

impl SweepPoint {
    pub fn csv_header() -> &'static str {
        "violation,bound,status,gap"
    }

    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.10}"));
        let status = match (&self.status, &self.error) {
            (Some(s), _) => s.to_string(),
            (None, Some(_)) => "error".to_string(),
            (None, None) => String::new(),
        };
        format!("{},{},{},{}", self.violation, opt(self.bound), status, opt(self.gap))
    }
}

/// Pins every expression in `exprs` to each grid value (plus the fixed
/// pins) and solves the points in parallel. Results keep grid order; a
/// failed point is reported in its row and the sweep continues.
pub fn sweep_curve(
    sc: &GuessingScenario,
    level: &LevelSpec,
    exprs: &[Polynomial<f64>],
    fixed: &[Pin],
    grid: &[f64],
    options: &SolverOptions,
) -> Result<Vec<SweepPoint>> {
    let ms = build_moment_structure(level, sc.n_parties())?;
    Ok(grid
        .par_iter()
        .map(|&v| {
            let mut pins: Vec<Pin> = exprs.iter().map(|e| (e.clone(), v)).collect();
            pins.extend(fixed.iter().cloned());
            match solve_with_structure(sc, &ms, &pins, options) {
                Ok(r) => SweepPoint {
                    violation: v,
                    bound: Some(r.bound),
                    status: Some(r.status),
                    gap: Some(r.gap),
                    error: None,
                },
                Err(e) => SweepPoint {
                    violation: v,
                    bound: None,
                    status: None,
                    gap: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}
