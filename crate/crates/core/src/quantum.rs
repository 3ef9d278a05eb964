//! Dense pure-state simulation of qubit strategies.
//!
//! Party 0 is the most significant qubit. The computational basis is
//! `|0>, |1>` and `|+->` denote the eigenvectors of `sigma_x`.

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use serde::{Deserialize, Serialize};

use crate::algebra::{Monomial, Polynomial};
use crate::behavior::Behavior;
use crate::bounds::NPartyParams;
use crate::error::{Error, Result};
use crate::MAX_PARTIES;

type Matrix<T> = [[Complex<T>; 2]; 2];

fn c<T: Float>(x: f64) -> T {
    T::from(x).expect("constant representable")
}

fn tolerance<T: Float>() -> T {
    c::<T>(1e-12).max(T::epsilon() * c(64.0))
}

fn re<T: Float>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// A Hermitian involution on one qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitObservable<T> {
    matrix: Matrix<T>,
}

impl<T: Float + FloatConst> QubitObservable<T> {
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        let tol = tolerance::<T>() * c(10.0);
        let herm = (0..2).all(|i| (0..2).all(|j| (matrix[i][j] - matrix[j][i].conj()).norm() <= tol));
        if !herm {
            return Err(Error::Invalid("observable is not Hermitian".into()));
        }
        let sq = mat_mul(&matrix, &matrix);
        let invol = (0..2).all(|i| {
            (0..2).all(|j| {
                let id = if i == j { T::one() } else { T::zero() };
                (sq[i][j] - re(id)).norm() <= tol
            })
        });
        if !invol {
            return Err(Error::Invalid("observable does not square to the identity".into()));
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self::real_combination(T::zero(), T::zero(), T::one())
    }

    pub fn sigma_x() -> Self {
        Self::real_combination(T::one(), T::zero(), T::zero())
    }

    pub fn sigma_y() -> Self {
        Self::real_combination(T::zero(), T::one(), T::zero())
    }

    pub fn sigma_z() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            matrix: [[re(o), re(z)], [re(z), re(-o)]],
        }
    }

    /// `x sigma_x + y sigma_y + i_coef I` without validation.
    fn real_combination(x: T, y: T, i_coef: T) -> Self {
        Self {
            matrix: [
                [re(i_coef), Complex::new(x, -y)],
                [Complex::new(x, y), re(i_coef)],
            ],
        }
    }

    /// `cos(phi) sigma_x + sin(phi) sigma_y`.
    pub fn equatorial(phi: T) -> Self {
        Self::real_combination(phi.cos(), phi.sin(), T::zero())
    }

    pub fn negated(&self) -> Self {
        let mut m = self.matrix;
        for row in &mut m {
            for x in row {
                *x = -*x;
            }
        }
        Self { matrix: m }
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }
}

fn mat_mul<T: Float>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let mut out = [[Complex::new(T::zero(), T::zero()); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Pure state with two observables per party.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumStrategy<T> {
    n: usize,
    state: Vec<Complex<T>>,
    observables: Vec<[QubitObservable<T>; 2]>,
}

impl<T: Float + FloatConst> QuantumStrategy<T> {
    pub fn new(state: Vec<Complex<T>>, observables: Vec<[QubitObservable<T>; 2]>) -> Result<Self> {
        let n = observables.len();
        if n == 0 || n > MAX_PARTIES {
            return Err(Error::TooManyParties(n));
        }
        if state.len() != 1 << n {
            return Err(Error::ShapeMismatch(format!(
                "state has {} amplitudes, expected {}",
                state.len(),
                1 << n
            )));
        }
        let norm = state.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr());
        if (norm - T::one()).abs() > tolerance::<T>() * c(100.0) {
            return Err(Error::Invalid(format!(
                "state norm squared is {}",
                norm.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(Self { n, state, observables })
    }

    /// Normalises the state before validation.
    pub fn normalized(mut state: Vec<Complex<T>>, observables: Vec<[QubitObservable<T>; 2]>) -> Result<Self> {
        let norm = state.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()).sqrt();
        if !(norm > T::zero()) {
            return Err(Error::Invalid("zero state vector".into()));
        }
        for a in &mut state {
            *a = *a / norm;
        }
        Self::new(state, observables)
    }

    pub fn n_parties(&self) -> usize {
        self.n
    }

    pub fn state(&self) -> &[Complex<T>] {
        &self.state
    }

    pub fn observable(&self, party: usize, setting: usize) -> &QubitObservable<T> {
        &self.observables[party][setting]
    }

    fn apply(&self, op: &Matrix<T>, party: usize, v: &mut [Complex<T>]) {
        let bit = 1usize << (self.n - 1 - party);
        for i in 0..v.len() {
            if i & bit == 0 {
                let (a0, a1) = (v[i], v[i | bit]);
                v[i] = op[0][0] * a0 + op[0][1] * a1;
                v[i | bit] = op[1][0] * a0 + op[1][1] * a1;
            }
        }
    }

    fn inner(&self, v: &[Complex<T>]) -> Complex<T> {
        self.state
            .iter()
            .zip(v)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
    }

    /// Real part of `<psi| m |psi>`, with the operator word applied as
    /// written (rightmost letter first).
    pub fn expectation_monomial(&self, m: &Monomial) -> Result<T> {
        if m.n_parties() != self.n {
            return Err(Error::PartyCountMismatch {
                left: m.n_parties(),
                right: self.n,
            });
        }
        let mut v = self.state.clone();
        for letter in m.letters().iter().rev() {
            let (p, s) = (letter.party as usize, letter.setting as usize);
            if p >= self.n {
                return Err(Error::PartyOutOfRange {
                    party: p,
                    n_parties: self.n,
                });
            }
            if s >= 2 {
                return Err(Error::SettingOutOfRange { setting: s, n_settings: 2 });
            }
            self.apply(&self.observables[p][s].matrix, p, &mut v);
        }
        Ok(self.inner(&v).re)
    }

    pub fn expectation(&self, expr: &Polynomial<f64>) -> Result<T> {
        let mut total = T::zero();
        for (m, &coef) in expr.terms() {
            total = total + c::<T>(coef) * self.expectation_monomial(m)?;
        }
        Ok(total)
    }

    /// Probability of the joint event `(party, setting, outcome)` for the
    /// listed parties; the others are traced out.
    pub fn event_probability(&self, events: &[(usize, usize, usize)]) -> Result<T> {
        let mut v = self.state.clone();
        for &(p, s, o) in events {
            if p >= self.n {
                return Err(Error::PartyOutOfRange {
                    party: p,
                    n_parties: self.n,
                });
            }
            let proj = self.projector(p, s, o);
            self.apply(&proj, p, &mut v);
        }
        Ok(v.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()))
    }

    /// `(1 + (-1)^outcome O) / 2`.
    fn projector(&self, party: usize, setting: usize, outcome: usize) -> Matrix<T> {
        let sign = if outcome == 0 { T::one() } else { -T::one() };
        let o = &self.observables[party][setting].matrix;
        let half = c::<T>(0.5);
        let mut out = *o;
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { T::one() } else { T::zero() };
                out[i][j] = (re(id) + o[i][j] * sign) * half;
            }
        }
        out
    }

    /// Full table of outcome probabilities.
    pub fn behavior(&self) -> Behavior {
        let n = self.n;
        let mut table = Vec::with_capacity(1 << (2 * n));
        for x in 0..1usize << n {
            let settings: Vec<usize> = (0..n).map(|p| (x >> (n - 1 - p)) & 1).collect();
            let mut branches = vec![self.state.clone()];
            for (p, &s) in settings.iter().enumerate() {
                let mut next = Vec::with_capacity(branches.len() * 2);
                for v in &branches {
                    for o in 0..2 {
                        let mut w = v.clone();
                        self.apply(&self.projector(p, s, o), p, &mut w);
                        next.push(w);
                    }
                }
                branches = next;
            }
            table.extend(
                branches
                    .iter()
                    .map(|w| w.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()).to_f64().unwrap_or(f64::NAN)),
            );
        }
        Behavior::new(vec![2; n], vec![2; n], table).expect("shape fixed by construction")
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pair = |z: &Complex<T>| [z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN)];
        let mat = |m: &Matrix<T>| [[pair(&m[0][0]), pair(&m[0][1])], [pair(&m[1][0]), pair(&m[1][1])]];
        let doc = StrategyDocument {
            n: self.n,
            state: self.state.iter().map(pair).collect(),
            observables: self
                .observables
                .iter()
                .map(|[a, b]| [mat(&a.matrix), mat(&b.matrix)])
                .collect(),
        };
        serde_json::to_value(doc).expect("plain data")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let doc: StrategyDocument =
            serde_json::from_value(value.clone()).map_err(|e| Error::Invalid(e.to_string()))?;
        let z = |p: [f64; 2]| Complex::new(c::<T>(p[0]), c::<T>(p[1]));
        let mat = |m: [[[f64; 2]; 2]; 2]| -> Matrix<T> { [[z(m[0][0]), z(m[0][1])], [z(m[1][0]), z(m[1][1])]] };
        let observables = doc
            .observables
            .into_iter()
            .map(|[a, b]| Ok([QubitObservable::new(mat(a))?, QubitObservable::new(mat(b))?]))
            .collect::<Result<Vec<_>>>()?;
        if observables.len() != doc.n {
            return Err(Error::ShapeMismatch("observable list length differs from n".into()));
        }
        Self::new(doc.state.into_iter().map(z).collect(), observables)
    }
}

/// JSON layout: amplitudes as `[re, im]` pairs, observables as 2x2 matrices
/// of such pairs, two per party.
#[derive(Serialize, Deserialize)]
struct StrategyDocument {
    n: usize,
    state: Vec<[f64; 2]>,
    observables: Vec<[[[[f64; 2]; 2]; 2]; 2]>,
}

/// Named strategy families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StrategyKind<T> {
    Ghz,
    LocalTangent { theta: T, phi: T },
    LinearisationViolator { phi: T },
    TwoParty { lambda: T, mu: T },
    NParty { n: usize, lambda: T, mu: T },
    /// Product strategy with `M = 2` and `P(++|11) = 1`.
    DeterministicMermin,
    /// Product strategy with `M_n = L_n` and the first `n - 1` setting-1
    /// outcomes fixed to `+`.
    DeterministicNParty { n: usize },
}

pub fn make_strategy<T: Float + FloatConst>(kind: StrategyKind<T>) -> Result<QuantumStrategy<T>> {
    match kind {
        StrategyKind::Ghz => ghz(),
        StrategyKind::LocalTangent { theta, phi } => local_tangent(theta, phi),
        StrategyKind::LinearisationViolator { phi } => linearisation_violator(phi),
        StrategyKind::TwoParty { lambda, mu } => two_party(lambda, mu),
        StrategyKind::NParty { n, lambda, mu } => nparty(n, lambda, mu),
        StrategyKind::DeterministicMermin => deterministic(&[[1, 1], [1, 1], [1, -1]]),
        StrategyKind::DeterministicNParty { n } => deterministic_nparty(n),
    }
}

/// Amplitudes of `sum_k w_k |s_k>` where each `s_k` is a string of `sigma_x`
/// eigenstates (`false` for `+`, `true` for `-`).
fn sign_basis_state<T: Float + FloatConst>(n: usize, terms: &[(Vec<bool>, T)]) -> Vec<Complex<T>> {
    let scale = T::FRAC_1_SQRT_2().powi(n as i32);
    (0..1usize << n)
        .map(|i| {
            let mut amp = T::zero();
            for (signs, w) in terms {
                // <i|s> = prod_p (+-1)^{bit_p} / sqrt 2
                let minus = (0..n).filter(|&p| signs[p] && (i >> (n - 1 - p)) & 1 == 1).count();
                let sign = if minus % 2 == 0 { T::one() } else { -T::one() };
                amp = amp + sign * *w;
            }
            re(amp * scale)
        })
        .collect()
}

fn xy_pair<T: Float + FloatConst>() -> [QubitObservable<T>; 2] {
    [QubitObservable::sigma_x(), QubitObservable::sigma_y()]
}

fn rotated_pair<T: Float + FloatConst>(phi: T) -> [QubitObservable<T>; 2] {
    // cos(phi) X - sin(phi) Y and sin(phi) X + cos(phi) Y
    [
        QubitObservable::equatorial(-phi),
        QubitObservable::equatorial(T::FRAC_PI_2() - phi),
    ]
}

/// `(|000> + |111>) / sqrt 2` with `sigma_x`, `sigma_y` everywhere.
pub fn ghz<T: Float + FloatConst>() -> Result<QuantumStrategy<T>> {
    let mut state = vec![re(T::zero()); 8];
    state[0] = re(T::FRAC_1_SQRT_2());
    state[7] = re(T::FRAC_1_SQRT_2());
    QuantumStrategy::new(state, vec![xy_pair(), xy_pair(), xy_pair()])
}

/// Attains the local linearisation with equality for `pi/4 <= theta <= pi/2`.
pub fn local_tangent<T: Float + FloatConst>(theta: T, phi: T) -> Result<QuantumStrategy<T>> {
    let slack = c::<T>(1e-12);
    if !(theta >= T::FRAC_PI_4() - slack && theta <= T::FRAC_PI_2() + slack) {
        return Err(Error::OutOfDomain {
            name: "theta",
            value: theta.to_f64().unwrap_or(f64::NAN),
            domain: "[pi/4, pi/2]".into(),
        });
    }
    let half = theta / c(2.0);
    let (a, b) = (half.cos() * T::FRAC_1_SQRT_2(), half.sin() * T::FRAC_1_SQRT_2());
    let s = |t: &str| t.chars().map(|ch| ch == '-').collect::<Vec<bool>>();
    let state = sign_basis_state(3, &[(s("+++"), a), (s("+--"), a), (s("-+-"), b), (s("--+"), b)]);
    QuantumStrategy::new(state, vec![xy_pair(), xy_pair(), rotated_pair(phi)])
}

/// Deterministic `A1 = 1` strategy violating the linearisation below
/// `theta = pi/4`.
pub fn linearisation_violator<T: Float + FloatConst>(phi: T) -> Result<QuantumStrategy<T>> {
    let plus = [re(T::FRAC_1_SQRT_2()), re(T::FRAC_1_SQRT_2())];
    let eighth = T::FRAC_PI_8();
    let h = T::FRAC_1_SQRT_2();
    let bc = [
        Complex::from_polar(h, -eighth),
        re(T::zero()),
        re(T::zero()),
        Complex::from_polar(h, eighth),
    ];
    let state = plus.iter().flat_map(|a| bc.iter().map(move |b| *a * *b)).collect();
    let alice = [QubitObservable::identity(), QubitObservable::identity().negated()];
    QuantumStrategy::new(state, vec![alice, xy_pair(), rotated_pair(phi)])
}

fn check_weights<T: Float>(lambda: T, mu: T) -> Result<()> {
    if !(lambda >= T::zero() && mu >= T::zero() && lambda + mu > T::zero()) {
        return Err(Error::OutOfDomain {
            name: "lambda",
            value: lambda.to_f64().unwrap_or(f64::NAN),
            domain: "lambda, mu >= 0, not both zero".into(),
        });
    }
    Ok(())
}

/// `lambda |+++> + mu (|+--> + |-+-> + |--+>)`, normalised.
pub fn two_party<T: Float + FloatConst>(lambda: T, mu: T) -> Result<QuantumStrategy<T>> {
    nparty(3, lambda, mu)
}

/// `lambda |+>^n + mu sum_s |s>` over sign strings with a nonzero even number
/// of minuses, normalised.
pub fn nparty<T: Float + FloatConst>(n: usize, lambda: T, mu: T) -> Result<QuantumStrategy<T>> {
    NPartyParams::<T>::new(n)?;
    check_weights(lambda, mu)?;
    let mut terms = vec![(vec![false; n], lambda)];
    for mask in 1usize..1 << n {
        if mask.count_ones() % 2 == 0 {
            terms.push(((0..n).map(|p| (mask >> (n - 1 - p)) & 1 == 1).collect(), mu));
        }
    }
    QuantumStrategy::normalized(sign_basis_state(n, &terms), vec![xy_pair(); n])
}

/// Product strategy on `|+>^n` where party `p` outputs `values[p][s]` (each
/// `+1` or `-1`) for setting `s`.
pub fn deterministic<T: Float + FloatConst>(values: &[[i8; 2]]) -> Result<QuantumStrategy<T>> {
    let n = values.len();
    if n == 0 || n > MAX_PARTIES {
        return Err(Error::TooManyParties(n));
    }
    let pick = |v: i8| -> Result<QubitObservable<T>> {
        match v {
            1 => Ok(QubitObservable::sigma_x()),
            -1 => Ok(QubitObservable::sigma_x().negated()),
            _ => Err(Error::Invalid(format!("deterministic value {v} is not +-1"))),
        }
    };
    let observables = values
        .iter()
        .map(|&[a, b]| Ok([pick(a)?, pick(b)?]))
        .collect::<Result<Vec<_>>>()?;
    let state = sign_basis_state(n, &[(vec![false; n], T::one())]);
    QuantumStrategy::new(state, observables)
}

/// Search over product responses with the first `n - 1` setting-1 values
/// fixed to `+1`, maximising `M_n`; the maximum is `L_n`.
pub fn deterministic_nparty<T: Float + FloatConst>(n: usize) -> Result<QuantumStrategy<T>> {
    NPartyParams::<T>::new(n)?;
    let mut best: Option<(i64, Vec<[i8; 2]>)> = None;
    // bits 0..n select setting-2 values, bit n the last party's setting-1 value
    for mask in 0u32..1 << (n + 1) {
        let values: Vec<[i8; 2]> = (0..n)
            .map(|p| {
                let a = if p == n - 1 && (mask >> n) & 1 == 1 { -1 } else { 1 };
                let b = if (mask >> p) & 1 == 1 { -1 } else { 1 };
                [a, b]
            })
            .collect();
        let value = deterministic_mermin_value(&values);
        if best.as_ref().map_or(true, |(v, _)| value > *v) {
            best = Some((value, values));
        }
    }
    deterministic(&best.expect("nonempty search").1)
}

/// Real part of `prod_p (a_p + i b_p)` in exact integer arithmetic.
fn deterministic_mermin_value(values: &[[i8; 2]]) -> i64 {
    let (mut r, mut i) = (1i64, 0i64);
    for &[a, b] in values {
        let (a, b) = (i64::from(a), i64::from(b));
        (r, i) = (r * a - i * b, r * b + i * a);
    }
    r
}

/// A guessing probability reached by a strategy or a two-strategy mixture.
/// Eve knows which member of the mixture was prepared, so probabilities and
/// Bell values mix with the same weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Attained {
    /// Bell value of the mixture, from simulation.
    pub value: f64,
    pub probability: f64,
    /// `(weight, strategy)` pairs.
    pub members: Vec<(f64, serde_json::Value)>,
}

fn single(strategy: &QuantumStrategy<f64>, value: f64, probability: f64) -> Attained {
    Attained {
        value,
        probability,
        members: vec![(1.0, strategy.to_json())],
    }
}

/// Mixes `lo` and `hi` (given as strategy, Bell value, probability) to hit
/// the Bell value `target`.
fn mixture(lo: (&QuantumStrategy<f64>, f64, f64), hi: (&QuantumStrategy<f64>, f64, f64), target: f64) -> Attained {
    let t = ((target - lo.1) / (hi.1 - lo.1)).clamp(0.0, 1.0);
    Attained {
        value: (1.0 - t) * lo.1 + t * hi.1,
        probability: (1.0 - t) * lo.2 + t * hi.2,
        members: vec![(1.0 - t, lo.0.to_json()), (t, hi.0.to_json())],
    }
}

fn out_of_range(name: &'static str, value: f64, domain: &str) -> Error {
    Error::OutOfDomain {
        name,
        value,
        domain: domain.into(),
    }
}

/// Largest `P(A1 = +)` reached at `cos(phi) M + sin(phi) M' = x`, for `x` in
/// `[2 sqrt 2, 4]`: the tangent family above `2 + sqrt 2`, mixed with the
/// violator below.
pub fn attain_local(x: f64, phi: f64) -> Result<Attained> {
    use std::f64::consts::{FRAC_PI_4, SQRT_2};
    let slack = 1e-12;
    if !(x >= 2.0 * SQRT_2 - slack && x <= 4.0 + slack) {
        return Err(out_of_range("x", x, "[2 sqrt 2, 4]"));
    }
    let combined = crate::algebra::StandardExpression::Mermin
        .build::<f64>()?
        .scale(phi.cos())
        .try_add(&crate::algebra::StandardExpression::MerminPrime.build::<f64>()?.scale(phi.sin()))?;
    let eval = |s: &QuantumStrategy<f64>| -> Result<(f64, f64)> {
        Ok((s.expectation(&combined)?, s.event_probability(&[(0, 0, 0)])?))
    };
    if x >= 2.0 + SQRT_2 {
        let theta = (x / 2.0 - 1.0).clamp(-1.0, 1.0).asin().max(FRAC_PI_4);
        let s = local_tangent(theta, phi)?;
        let (v, p) = eval(&s)?;
        return Ok(single(&s, v, p));
    }
    let lo = linearisation_violator(phi)?;
    let hi = local_tangent(FRAC_PI_4, phi)?;
    let (vl, pl) = eval(&lo)?;
    let (vh, ph) = eval(&hi)?;
    Ok(mixture((&lo, vl, pl), (&hi, vh, ph), x))
}

/// `(lambda, mu)` of the n-party family with `M_n = m`, taking the root with
/// the larger `lambda`.
pub fn nparty_weights(n: usize, m: f64) -> Result<(f64, f64)> {
    let params = NPartyParams::<f64>::new(n)?;
    let k = params.quantum - 1.0;
    let s = m.max(0.0).sqrt();
    let disc = s * s * k * k - (k * k + k) * (s * s - 1.0);
    if disc < -1e-12 {
        return Err(out_of_range("M_n", m, "[0, 2^(n-1)]"));
    }
    let mu = (s * k - disc.max(0.0).sqrt()) / (k * k + k);
    Ok((s - k * mu, mu))
}

/// Largest probability of `+` on the first `n - 1` parties at their first
/// setting with `M_n = m`: the pure family above the threshold, mixed with
/// the best deterministic strategy below it.
pub fn attain_nparty(n: usize, m: f64) -> Result<Attained> {
    let params = NPartyParams::<f64>::new(n)?;
    let slack = 1e-12;
    if !(m >= params.local - slack && m <= params.quantum + slack) {
        return Err(out_of_range("M_n", m, "[L_n, Q_n]"));
    }
    let expr = crate::algebra::StandardExpression::MerminN(n).build::<f64>()?;
    let events: Vec<(usize, usize, usize)> = (0..n - 1).map(|p| (p, 0, 0)).collect();
    let eval = |s: &QuantumStrategy<f64>| -> Result<(f64, f64)> { Ok((s.expectation(&expr)?, s.event_probability(&events)?)) };
    let pure = |m: f64| -> Result<QuantumStrategy<f64>> {
        let (lambda, mu) = nparty_weights(n, m)?;
        nparty(n, lambda, mu)
    };
    if m >= params.threshold {
        let s = pure(m.min(params.quantum))?;
        let (v, p) = eval(&s)?;
        return Ok(single(&s, v, p));
    }
    let lo = deterministic_nparty::<f64>(n)?;
    let hi = pure(params.threshold)?;
    let (vl, pl) = eval(&lo)?;
    let (vh, ph) = eval(&hi)?;
    Ok(mixture((&lo, vl, pl), (&hi, vh, ph), m))
}

/// [`attain_nparty`] for three parties: `P(A1 = B1 = +)` at Mermin value `m`.
pub fn attain_two_party(m: f64) -> Result<Attained> {
    attain_nparty(3, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{standard_expression, StandardExpression};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn mermin(s: &QuantumStrategy<f64>) -> (f64, f64) {
        (
            s.expectation(&standard_expression("mermin").unwrap()).unwrap(),
            s.expectation(&standard_expression("mermin_prime").unwrap()).unwrap(),
        )
    }

    #[test]
    fn ghz_values() {
        let s = ghz::<f64>().unwrap();
        let (m, mp) = mermin(&s);
        assert!((m - 4.0).abs() < 1e-12);
        assert!(mp.abs() < 1e-12);
        assert!((s.expectation_monomial(&Monomial::identity(3)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn local_tangent_contract() {
        for i in 0..=10 {
            let theta = FRAC_PI_4 + (FRAC_PI_2 - FRAC_PI_4) * i as f64 / 10.0;
            for phi in [0.0, 0.7, 2.5, 5.9] {
                let s = local_tangent(theta, phi).unwrap();
                let a1 = s.expectation_monomial(&Monomial::generator(3, 0, 0).unwrap()).unwrap();
                let (m, mp) = mermin(&s);
                assert!((a1 - theta.cos()).abs() < 1e-10);
                assert!((phi.cos() * m + phi.sin() * mp - 2.0 * (1.0 + theta.sin())).abs() < 1e-10);
            }
        }
        let s = local_tangent(FRAC_PI_2, 0.0).unwrap();
        assert!((mermin(&s).0 - 4.0).abs() < 1e-12);
        assert!(local_tangent(0.5, 0.0).is_err());
    }

    #[test]
    fn violator_contract() {
        for phi in [0.0, 0.3, 1.9, 4.4] {
            let s = linearisation_violator(phi).unwrap();
            let a1 = s.expectation_monomial(&Monomial::generator(3, 0, 0).unwrap()).unwrap();
            let (m, mp) = mermin(&s);
            assert!((a1 - 1.0).abs() < 1e-12);
            assert!((phi.cos() * m + phi.sin() * mp - 2.0 * SQRT_2).abs() < 1e-10, "{phi}");
        }
    }

    #[test]
    fn two_party_contract() {
        let s = two_party(0.5, 0.5).unwrap();
        assert!((mermin(&s).0 - 4.0).abs() < 1e-12);
        assert!((s.event_probability(&[(0, 0, 0), (1, 0, 0)]).unwrap() - 0.25).abs() < 1e-12);
        let s = two_party(3f64.sqrt() / 2.0, 1.0 / 12f64.sqrt()).unwrap();
        assert!((mermin(&s).0 - 3.0).abs() < 1e-12);
        assert!((s.event_probability(&[(0, 0, 0), (1, 0, 0)]).unwrap() - 0.75).abs() < 1e-12);
        let all = s.event_probability(&[(0, 0, 0), (1, 0, 0), (2, 0, 0)]).unwrap();
        assert!((all - 0.75).abs() < 1e-12);
    }

    #[test]
    fn nparty_contract() {
        for n in 3..=5 {
            let q = (1 << (n - 1)) as f64;
            let expr = StandardExpression::MerminN(n).build::<f64>().unwrap();
            for (l, m) in [(0.9, 0.1), (0.5, 0.3), (0.2, 0.2)] {
                let s = nparty(n, l, m).unwrap();
                let norm = (l * l + (q - 1.0) * m * m).sqrt();
                let (l, m) = (l / norm, m / norm);
                let events: Vec<_> = (0..n - 1).map(|p| (p, 0, 0)).collect();
                assert!((s.event_probability(&events).unwrap() - l * l).abs() < 1e-12);
                let mn = s.expectation(&expr).unwrap();
                assert!((mn - (l + (q - 1.0) * m).powi(2)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn deterministic_endpoints() {
        let s = make_strategy::<f64>(StrategyKind::DeterministicMermin).unwrap();
        assert!((mermin(&s).0 - 2.0).abs() < 1e-12);
        assert!((s.event_probability(&[(0, 0, 0), (1, 0, 0)]).unwrap() - 1.0).abs() < 1e-12);
        for n in 3..=6 {
            let s = deterministic_nparty::<f64>(n).unwrap();
            let l = NPartyParams::<f64>::new(n).unwrap().local;
            let mn = s.expectation(&StandardExpression::MerminN(n).build().unwrap()).unwrap();
            assert!((mn - l).abs() < 1e-12);
            let events: Vec<_> = (0..n - 1).map(|p| (p, 0, 0)).collect();
            assert!((s.event_probability(&events).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn behavior_of_product_state() {
        let s = deterministic::<f64>(&[[1, 1], [1, 1], [1, 1]]).unwrap();
        let b = s.behavior();
        assert!((b.prob(&[0, 0, 0], &[0, 0, 0]) - 1.0).abs() < 1e-12);
        assert!(b.violations(1e-12).is_empty());
    }

    #[test]
    fn single_precision() {
        let s = ghz::<f32>().unwrap();
        let m = s.expectation(&standard_expression("mermin").unwrap()).unwrap();
        assert!((m - 4.0).abs() < 1e-5);
    }

    #[test]
    fn json_round_trip() {
        let s = local_tangent(1.1, 0.4).unwrap();
        let back = QuantumStrategy::<f64>::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn rejects_bad_observable() {
        let z = Complex::new(0.0, 0.0);
        let two = Complex::new(2.0, 0.0);
        assert!(QubitObservable::new([[two, z], [z, two]]).is_err());
    }

    #[test]
    fn attained_matches_closed_forms() {
        use crate::bounds::{f_curve, nparty_bound, two_party_gp_bound};
        for k in 0..=10 {
            let x = 2.0 * SQRT_2 + (4.0 - 2.0 * SQRT_2) * f64::from(k) / 10.0;
            let a = attain_local(x, 0.3).unwrap();
            assert!((a.value - x).abs() < 1e-10);
            assert!((a.probability - f_curve(x).unwrap()).abs() < 1e-10, "{x}");
            let m = 2.0 + 2.0 * f64::from(k) / 10.0;
            let a = attain_two_party(m).unwrap();
            assert!((a.value - m).abs() < 1e-10);
            assert!((a.probability - two_party_gp_bound(m).unwrap().raw).abs() < 1e-10, "{m}");
            let m = 4.0 + 4.0 * f64::from(k) / 10.0;
            let a = attain_nparty(4, m).unwrap();
            assert!((a.probability - nparty_bound(4, m).unwrap().raw).abs() < 1e-10, "{m}");
        }
    }
}
