//! No-signalling and local-polytope linear programs, and the constructions
//! behind the insider attack on GHZ-based secret sharing.
//!
//! Eve's no-signalling guessing LP mirrors the quantum relaxation in
//! [`crate::npa`]: one subnormalised table per guess, each no-signalling,
//! total weight one, pinned Bell values matched by the sum over guesses.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::{Monomial, Polynomial};
use crate::behavior::{tuples, Behavior, BipartiteBehavior, Violation, NS_TOLERANCE};
use crate::conic::{solve_lp, LinearProgram, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::npa::{GuessingScenario, Pin};
use crate::quantum::ghz;

/// Reconstruction accuracy required of a locality certificate.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-9;

/// Positivity, normalisation and marginal-consistency failures of `b`.
pub fn check_no_signalling(b: &Behavior) -> Vec<Violation> {
    b.violations(NS_TOLERANCE)
}

/// Convex decomposition `sum_k weights[k] components[k]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NsDecomposition {
    pub weights: Vec<f64>,
    pub components: Vec<Behavior>,
}

impl NsDecomposition {
    pub fn new(weights: Vec<f64>, components: Vec<Behavior>) -> Result<Self> {
        let d = Self { weights, components };
        d.mixture()?;
        if let Some(k) = d.components.iter().position(|c| !check_no_signalling(c).is_empty()) {
            return Err(Error::Invalid(format!("component {k} is not a valid no-signalling behavior")));
        }
        Ok(d)
    }

    pub fn mixture(&self) -> Result<Behavior> {
        Behavior::mix(&self.components, &self.weights)
    }
}

/// Coefficients of `<m>` on the table entries of one block starting at
/// `offset`. Parties absent from `m` are read at their first setting.
fn correlator_row(template: &Behavior, m: &Monomial, scale: f64, offset: usize, row: &mut Vec<(usize, f64)>) -> Result<()> {
    let settings = m
        .correlator_settings()
        .ok_or_else(|| Error::NotACorrelator(m.to_string()))?;
    let x: Vec<usize> = settings.iter().map(|s| s.unwrap_or(0)).collect();
    for a in tuples(template.outcomes()) {
        let odd = a.iter().zip(&settings).filter(|(&o, s)| s.is_some() && o == 1).count() % 2 == 1;
        let sign = if odd { -scale } else { scale };
        row.push((offset + template.index(&x, &a), sign));
    }
    Ok(())
}

/// Marginal-consistency equalities of one block at `offset`. The total
/// weight of the block is left free.
fn no_signalling_rows(template: &Behavior, offset: usize, lp: &mut LinearProgram) {
    let settings = template.settings();
    let outcomes = template.outcomes();
    for party in 0..template.n_parties() {
        for x in tuples(settings).filter(|x| x[party] == 0) {
            for alt in 1..settings[party] {
                let mut x_alt = x.clone();
                x_alt[party] = alt;
                for a in tuples(outcomes).filter(|a| a[party] == 0) {
                    let mut a = a.clone();
                    let mut row = Vec::with_capacity(2 * outcomes[party]);
                    for o in 0..outcomes[party] {
                        a[party] = o;
                        row.push((offset + template.index(&x, &a), 1.0));
                        row.push((offset + template.index(&x_alt, &a), -1.0));
                    }
                    lp.add_equality(row, 0.0);
                }
            }
        }
    }
}

/// Result of the no-signalling guessing LP.
#[derive(Clone, Debug, PartialEq)]
pub struct NsBound {
    pub bound: f64,
    pub status: SolveStatus,
    pub gap: f64,
    /// Eve's guesses with their probabilities and normalised conditional
    /// behaviors; guesses of zero weight carry a uniform table.
    pub decomposition: Option<NsDecomposition>,
}

/// Builds the guessing LP over `2^k` subnormalised blocks.
pub fn build_ns_guessing(sc: &GuessingScenario, pins: &[Pin]) -> Result<LinearProgram> {
    let n = sc.n_parties();
    for (expr, _) in pins {
        if expr.n_parties() != n {
            return Err(Error::PartyCountMismatch {
                left: expr.n_parties(),
                right: n,
            });
        }
    }
    let template = Behavior::uniform(n);
    let size = template.table().len();
    let blocks = sc.n_outcomes();
    let mut lp = LinearProgram::new(size * blocks);
    let mut norm = Vec::with_capacity(blocks << n);
    for e in 0..blocks {
        let offset = e * size;
        no_signalling_rows(&template, offset, &mut lp);
        let zero = vec![0; n];
        for a in tuples(template.outcomes()) {
            norm.push((offset + template.index(&zero, &a), 1.0));
        }
        let mut x = vec![0; n];
        for g in sc.guessed() {
            x[g.party as usize] = g.setting as usize;
        }
        let signs = sc.signs(e);
        for a in tuples(template.outcomes()) {
            let hit = sc
                .guessed()
                .iter()
                .zip(&signs)
                .all(|(g, &s)| a[g.party as usize] == usize::from(s < 0));
            if hit {
                lp.objective[offset + template.index(&x, &a)] = 1.0;
            }
        }
    }
    lp.add_equality(norm, 1.0);
    for (expr, value) in pins {
        let mut row = Vec::new();
        for e in 0..blocks {
            for (m, &c) in expr.terms() {
                correlator_row(&template, m, c, e * size, &mut row)?;
            }
        }
        lp.add_equality(row, *value);
    }
    Ok(lp)
}

pub fn solve_ns_guessing(sc: &GuessingScenario, pins: &[Pin], options: &SolverOptions) -> Result<NsBound> {
    let lp = build_ns_guessing(sc, pins)?;
    let s = solve_lp(&lp, options)?;
    let decomposition = (s.status == SolveStatus::Optimal).then(|| {
        let n = sc.n_parties();
        let size = 1 << (2 * n);
        let mut weights = Vec::new();
        let mut components = Vec::new();
        for e in 0..sc.n_outcomes() {
            let block: Vec<f64> = s.x[e * size..(e + 1) * size].iter().map(|v| v.max(0.0)).collect();
            // Weight read at the first setting tuple; no-signalling makes it
            // the same for all.
            let w: f64 = block[..1 << n].iter().sum();
            let component = if w > 1e-12 {
                Behavior::new(vec![2; n], vec![2; n], block.iter().map(|v| v / w).collect()).ok()
            } else {
                None
            };
            weights.push(w);
            components.push(component.unwrap_or_else(|| Behavior::uniform(n)));
        }
        NsDecomposition { weights, components }
    });
    Ok(NsBound {
        bound: s.dual_value,
        status: s.status,
        gap: s.gap,
        decomposition,
    })
}

/// Largest guessing probability over no-signalling behaviors with the
/// pinned Bell values.
pub fn gp_ns_bound(sc: &GuessingScenario, pins: &[Pin]) -> Result<f64> {
    let r = solve_ns_guessing(sc, pins, &SolverOptions::lp())?;
    match r.status {
        SolveStatus::Optimal => Ok(r.bound),
        SolveStatus::Infeasible => Err(Error::Infeasible("no no-signalling behavior has the pinned values".into())),
        SolveStatus::NumericalLimit => Err(Error::Solver(format!("gap {:e}", r.gap))),
    }
}

/// `P(ab..|xy..; c z)` for the last party's outcome `c` at setting `z`.
pub fn conditional_bipartite(b: &Behavior, c: usize, z: usize) -> Result<BipartiteBehavior> {
    let n = b.n_parties();
    if n < 2 {
        return Err(Error::ShapeMismatch("need at least two parties".into()));
    }
    let last = n - 1;
    if z >= b.settings()[last] {
        return Err(Error::SettingOutOfRange {
            setting: z,
            n_settings: b.settings()[last],
        });
    }
    if c >= b.outcomes()[last] {
        return Err(Error::Invalid(format!("outcome {c} out of range")));
    }
    let mut x0 = vec![0; n];
    x0[last] = z;
    let p_c: f64 = tuples(b.outcomes())
        .filter(|a| a[last] == c)
        .map(|a| b.prob(&x0, &a))
        .sum();
    if !(p_c > 1e-14) {
        return Err(Error::ZeroProbability);
    }
    Behavior::from_fn_shaped(b.settings()[..last].to_vec(), b.outcomes()[..last].to_vec(), |x, a| {
        let mut xs = x.to_vec();
        xs.push(z);
        let mut as_ = a.to_vec();
        as_.push(c);
        b.prob(&xs, &as_) / p_c
    })
}

/// Outcome of the local-polytope membership test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalityCertificate {
    pub local: bool,
    /// Largest `v` with `v b + (1 - v) u` local, `u` the uniform table.
    pub visibility: f64,
    /// Weight of every deterministic vertex, in the order of
    /// [`deterministic_vertices`].
    pub weights: Vec<f64>,
    /// `response[party][setting]` of each vertex.
    pub vertices: Vec<Vec<Vec<usize>>>,
    pub reconstruction_error: f64,
}

/// All deterministic response functions of a behavior's shape.
pub fn deterministic_vertices(b: &Behavior) -> Result<Vec<(Vec<Vec<usize>>, Behavior)>> {
    let n = b.n_parties();
    let radix: Vec<usize> = (0..n)
        .flat_map(|p| std::iter::repeat(b.outcomes()[p]).take(b.settings()[p]))
        .collect();
    tuples(&radix)
        .map(|digits| {
            let mut response = Vec::with_capacity(n);
            let mut k = 0;
            for p in 0..n {
                response.push(digits[k..k + b.settings()[p]].to_vec());
                k += b.settings()[p];
            }
            let outcomes = b.outcomes().to_vec();
            let d = Behavior::from_fn_shaped(b.settings().to_vec(), outcomes, |x, a| {
                f64::from(u8::from((0..n).all(|p| response[p][x[p]] == a[p])))
            })?;
            Ok((response, d))
        })
        .collect()
}

/// Least-squares weights on the support of an interior-point solution, so
/// that the reconstruction is exact to rounding when the support is right.
fn polish_weights(vertices: &[Behavior], target: &Behavior, weights: &[f64]) -> Option<Vec<f64>> {
    let top = weights.iter().copied().fold(0.0, f64::max);
    let support: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] > 1e-6 * top).collect();
    let rows = target.table().len() + 1;
    let a = DMatrix::from_fn(rows, support.len(), |i, j| {
        if i < target.table().len() {
            vertices[support[j]].table()[i]
        } else {
            1.0
        }
    });
    let mut rhs = target.table().to_vec();
    rhs.push(1.0);
    let q = a.svd(true, true).solve(&DVector::from_vec(rhs), 1e-12).ok()?;
    if q.iter().any(|&v| v < 0.0) {
        return None;
    }
    let mut out = vec![0.0; weights.len()];
    for (j, &k) in support.iter().enumerate() {
        out[k] = q[j];
    }
    Some(out)
}

/// Membership of `b` in the local polytope via a visibility LP over the
/// deterministic vertices.
pub fn is_local_bipartite(b: &BipartiteBehavior) -> Result<LocalityCertificate> {
    let vertices = deterministic_vertices(b)?;
    let m = vertices.len();
    let entries = b.table().len();
    let uniform_entry = 1.0 / b.n_outcome_tuples() as f64;
    // Variables: vertex weights, then v <= 1.
    let mut lp = LinearProgram::new(m + 1);
    lp.objective[m] = 1.0;
    for i in 0..entries {
        let mut row: Vec<(usize, f64)> = vertices
            .iter()
            .enumerate()
            .filter(|(_, (_, d))| d.table()[i] != 0.0)
            .map(|(k, (_, d))| (k, d.table()[i]))
            .collect();
        row.push((m, uniform_entry - b.table()[i]));
        lp.add_equality(row, uniform_entry);
    }
    lp.add_less_equal(vec![(m, 1.0)], 1.0);
    let s = solve_lp(&lp, &SolverOptions::lp())?;
    if s.status != SolveStatus::Optimal {
        return Err(Error::Solver(format!("visibility LP ended with status {}", s.status)));
    }
    let visibility = s.x[m].min(1.0);
    let behaviors: Vec<Behavior> = vertices.iter().map(|(_, d)| d.clone()).collect();
    let raw: Vec<f64> = s.x[..m].iter().map(|v| v.max(0.0)).collect();
    let mut weights = raw.clone();
    if visibility > 1.0 - 1e-7 {
        if let Some(q) = polish_weights(&behaviors, b, &raw) {
            weights = q;
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let rebuilt = Behavior::mix(&behaviors, &weights)?;
    let reconstruction_error = rebuilt.max_abs_difference(b)?;
    Ok(LocalityCertificate {
        local: reconstruction_error <= RECONSTRUCTION_TOLERANCE,
        visibility,
        weights,
        vertices: vertices.into_iter().map(|(r, _)| r).collect(),
        reconstruction_error,
    })
}

/// Extends the last party by one setting. At the new setting its outcome
/// `c` announces which component of `d` the other parties hold.
pub fn steering_extension(b: &Behavior, d: &NsDecomposition) -> Result<Behavior> {
    let n = b.n_parties();
    let last = n - 1;
    let keep: Vec<usize> = (0..last).collect();
    let marginal = b.marginal(&keep)?;
    if d.components.len() > b.outcomes()[last] {
        return Err(Error::ShapeMismatch(format!(
            "{} components but only {} outcomes to announce them",
            d.components.len(),
            b.outcomes()[last]
        )));
    }
    if d.components.iter().any(|c| !c.same_shape(&marginal)) {
        return Err(Error::ShapeMismatch("components differ in shape from the marginal".into()));
    }
    let deviation = d.mixture()?.max_abs_difference(&marginal)?;
    if deviation > NS_TOLERANCE {
        return Err(Error::MarginalMismatch(deviation));
    }
    let mut settings = b.settings().to_vec();
    let bottom = settings[last];
    settings[last] += 1;
    Behavior::from_fn_shaped(settings, b.outcomes().to_vec(), |x, a| {
        if x[last] < bottom {
            b.prob(x, a)
        } else {
            let c = a[last];
            match d.components.get(c) {
                Some(comp) => d.weights[c] * comp.prob(&x[..last], &a[..last]),
                None => 0.0,
            }
        }
    })
}

/// Local model of one conditional distribution of the GHZ behavior.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalCertificate {
    pub outcome: usize,
    pub setting: usize,
    pub probability: f64,
    pub conditional: Behavior,
    pub certificate: LocalityCertificate,
}

/// Hidden-variable model `P(abc|xyz) = sum_l p(l|z) D_l(ab|xy) [c = c_l]`
/// assembled from the conditional local models.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HiddenVariableModel {
    /// `(c_l, response of the other parties)` for each `l`.
    pub labels: Vec<(usize, Vec<Vec<usize>>)>,
    /// `p(l|z)`, one row per setting `z`.
    pub weights: Vec<Vec<f64>>,
    pub reconstruction_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackReport {
    pub behavior: Behavior,
    pub conditionals: Vec<ConditionalCertificate>,
    pub hidden_variable_model: HiddenVariableModel,
    pub marginal: LocalityCertificate,
    pub steering: SteeringReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteeringReport {
    pub decomposition: NsDecomposition,
    pub extended: Behavior,
    pub violations: usize,
}

fn assemble_model(b: &Behavior, conditionals: &[ConditionalCertificate]) -> Result<HiddenVariableModel> {
    let n = b.n_parties();
    let last = n - 1;
    let mut labels = Vec::new();
    let mut weights = vec![Vec::new(); b.settings()[last]];
    for c in 0..b.outcomes()[last] {
        for cert in conditionals.iter().filter(|cc| cc.outcome == c) {
            for (k, v) in cert.certificate.vertices.iter().enumerate() {
                let label = (c, v.clone());
                let l = match labels.iter().position(|x| *x == label) {
                    Some(l) => l,
                    None => {
                        labels.push(label);
                        weights.iter_mut().for_each(|w| w.push(0.0));
                        labels.len() - 1
                    }
                };
                weights[cert.setting][l] += cert.probability * cert.certificate.weights[k];
            }
        }
    }
    let mut reconstruction_error: f64 = 0.0;
    for x in tuples(b.settings()) {
        for a in tuples(b.outcomes()) {
            let z = x[last];
            let p: f64 = labels
                .iter()
                .enumerate()
                .filter(|(_, (c, r))| *c == a[last] && (0..last).all(|q| r[q][x[q]] == a[q]))
                .map(|(l, _)| weights[z][l])
                .sum();
            reconstruction_error = reconstruction_error.max((p - b.prob(&x, &a)).abs());
        }
    }
    Ok(HiddenVariableModel {
        labels,
        weights,
        reconstruction_error,
    })
}

/// Local models for every conditional distribution of `b` given the last
/// party's outcome and setting, their reassembly into a hidden-variable
/// model, the marginal of the other parties, and a steering extension that
/// lets the last party prepare the components of that marginal.
pub fn attack_report(b: &Behavior) -> Result<AttackReport> {
    let n = b.n_parties();
    let last = n - 1;
    let mut conditionals = Vec::new();
    for z in 0..b.settings()[last] {
        for c in 0..b.outcomes()[last] {
            let conditional = match conditional_bipartite(b, c, z) {
                Ok(cb) => cb,
                Err(Error::ZeroProbability) => continue,
                Err(e) => return Err(e),
            };
            let mut x0 = vec![0; n];
            x0[last] = z;
            let probability = tuples(b.outcomes()).filter(|a| a[last] == c).map(|a| b.prob(&x0, &a)).sum();
            let certificate = is_local_bipartite(&conditional)?;
            conditionals.push(ConditionalCertificate {
                outcome: c,
                setting: z,
                probability,
                conditional,
                certificate,
            });
        }
    }
    let hidden_variable_model = assemble_model(b, &conditionals)?;
    let keep: Vec<usize> = (0..last).collect();
    let marginal = is_local_bipartite(&b.marginal(&keep)?)?;
    let at_first: Vec<&ConditionalCertificate> = conditionals.iter().filter(|c| c.setting == 0).collect();
    let decomposition = NsDecomposition::new(
        at_first.iter().map(|c| c.probability).collect(),
        at_first.iter().map(|c| c.conditional.clone()).collect(),
    )?;
    let extended = steering_extension(b, &decomposition)?;
    let violations = check_no_signalling(&extended).len();
    Ok(AttackReport {
        behavior: b.clone(),
        conditionals,
        hidden_variable_model,
        marginal,
        steering: SteeringReport {
            decomposition,
            extended,
            violations,
        },
    })
}

/// [`attack_report`] for the GHZ behavior.
pub fn hbb_attack_report() -> Result<AttackReport> {
    attack_report(&ghz::<f64>()?.behavior())
}

/// Pins `expr` to `value` for [`gp_ns_bound`].
pub fn pin(expr: &Polynomial<f64>, value: f64) -> Pin {
    (expr.clone(), value)
}
