//! Tangent Bell operators and their sum-of-squares certificates.
//!
//! Every family is generic over the coefficient ring. Floating point
//! parameters come from `numeric` constructors; exact [`QuadSurd`]
//! parameters exist at the points where all coefficients lie in `Q(sqrt 2)`.

use std::collections::BTreeMap;

use num_traits::{Float, FloatConst};

use crate::algebra::{Monomial, PartyObservable, Polynomial, StandardExpression};
use crate::error::{Error, Result};
use crate::scalar::{Coefficient, QuadSurd};

/// Operator polynomial with coefficients in `S`.
pub type OperatorPolynomial<S> = Polynomial<S>;

const PARTIES: usize = 3;

fn gen<S: Coefficient>(party: usize, setting: usize) -> Polynomial<S> {
    Polynomial::generator(PARTIES, party, setting).expect("three parties")
}

fn one<S: Coefficient>() -> Polynomial<S> {
    Polynomial::identity(PARTIES)
}

fn mul<S: Coefficient>(a: &Polynomial<S>, b: &Polynomial<S>) -> Polynomial<S> {
    a * b
}

/// Clamps a radicand that is negative only by rounding.
fn radicand<T: Float>(x: T) -> Result<T> {
    let slack = T::from(1e-13).expect("representable");
    if x < -slack {
        return Err(Error::NegativeRadicand(as_f64(x)));
    }
    Ok(x.max(T::zero()))
}

fn as_f64<T: Float>(x: T) -> f64 {
    num_traits::ToPrimitive::to_f64(&x).unwrap_or(f64::NAN)
}

fn sqrt_checked<T: Float>(x: T) -> Result<T> {
    Ok(radicand(x)?.sqrt())
}

/// Which family a certificate belongs to, with its parameter point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CertificateParams {
    Local { theta: f64, phi: f64 },
    TwoParty { lambda: f64, mu: f64 },
}

/// A claimed decomposition `target = sum_i P_i^dagger P_i`.
#[derive(Clone, PartialEq)]
pub struct SosCertificate<S> {
    pub params: CertificateParams,
    pub squares: Vec<(&'static str, Polynomial<S>)>,
}

impl<S: Coefficient> std::fmt::Debug for SosCertificate<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SosCertificate")
            .field("params", &self.params)
            .field("squares", &self.squares)
            .finish()
    }
}

/// Result of comparing an expanded certificate with its target.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub residual: f64,
    pub worst_monomial: Option<Monomial>,
}

/// `sum_i P_i^dagger P_i`, with every contribution to a monomial merged in
/// one compensated sum.
pub fn expand_square_sum<S: Coefficient>(squares: &[Polynomial<S>]) -> Result<Polynomial<S>> {
    let Some(first) = squares.first() else {
        return Err(Error::Invalid("certificate has no squares".into()));
    };
    let n = first.n_parties();
    let mut buckets: BTreeMap<Monomial, Vec<S>> = BTreeMap::new();
    for p in squares {
        if p.n_parties() != n {
            return Err(Error::PartyCountMismatch {
                left: n,
                right: p.n_parties(),
            });
        }
        let adj = p.adjoint();
        for (m1, c1) in adj.terms() {
            for (m2, c2) in p.terms() {
                buckets
                    .entry(m1.multiply(m2)?)
                    .or_default()
                    .push(c1.clone() * c2.clone());
            }
        }
    }
    Ok(Polynomial::from_buckets(n, buckets))
}

impl<S: Coefficient> SosCertificate<S> {
    pub fn polynomials(&self) -> Vec<Polynomial<S>> {
        self.squares.iter().map(|(_, p)| p.clone()).collect()
    }

    pub fn expand(&self) -> Result<Polynomial<S>> {
        expand_square_sum(&self.polynomials())
    }

    /// Largest coefficient of `expand() - target`.
    pub fn verify(&self, target: &Polynomial<S>) -> Result<Verification> {
        let (residual, worst_monomial) = self.expand()?.max_abs_difference(target);
        Ok(Verification {
            residual,
            worst_monomial,
        })
    }

    /// Exact equality of the expansion with the target.
    pub fn verify_exact(&self, target: &Polynomial<S>) -> Result<bool> {
        Ok(self.expand()? == *target)
    }
}

pub fn verify<S: Coefficient>(c: &SosCertificate<S>, target: &Polynomial<S>) -> Result<Verification> {
    c.verify(target)
}

/// Relabelling `B <-> C` with unit signs.
pub fn tau_swap_bc(l: PartyObservable) -> (PartyObservable, i8) {
    swap_parties(l, 1, 2)
}

/// Relabelling `A <-> B` with unit signs.
pub fn tau_swap_ab(l: PartyObservable) -> (PartyObservable, i8) {
    swap_parties(l, 0, 1)
}

/// Sign flip of every second-setting generator.
pub fn tau_flip_second(l: PartyObservable) -> (PartyObservable, i8) {
    (l, if l.setting == 1 { -1 } else { 1 })
}

fn swap_parties(l: PartyObservable, p: u8, q: u8) -> (PartyObservable, i8) {
    let party = match l.party {
        x if x == p => q,
        x if x == q => p,
        x => x,
    };
    (PartyObservable::new(party, l.setting), 1)
}

/// Parameters of the local family: the trigonometric data of `(theta, phi)`
/// and the square coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalParameters<S> {
    pub theta: f64,
    pub phi: f64,
    pub cos_theta: S,
    pub sin_theta: S,
    pub cos_phi: S,
    pub sin_phi: S,
    pub alpha: S,
    pub beta: S,
    pub gamma: S,
    pub delta: S,
}

fn check_theta(theta: f64) -> Result<()> {
    let (lo, hi) = (std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2);
    if !(theta >= lo - 1e-12 && theta <= hi + 1e-12) {
        return Err(Error::OutOfDomain {
            name: "theta",
            value: theta,
            domain: "[pi/4, pi/2]".into(),
        });
    }
    Ok(())
}

impl<T: Float + FloatConst + Coefficient> LocalParameters<T> {
    /// Floating point coefficients at `(theta, phi)`.
    pub fn numeric(theta: T, phi: T) -> Result<Self> {
        let theta_f = as_f64(theta);
        check_theta(theta_f)?;
        let two = T::one() + T::one();
        let four = two * two;
        let (ct, st) = (theta.cos(), theta.sin());
        let (cp, sp) = (phi.cos(), phi.sin());
        let root = sqrt_checked(-(two * theta).cos())?;
        let half_cos = (theta / two).cos();
        let alpha = (phi / two).sin() / (four * half_cos);
        let beta = (phi / two).cos() / (four * half_cos);
        let gamma = sqrt_checked(st + ct * cp - sp * root)? / four;
        let sign_arg = ct * sp + cp * root;
        // sign(0) is taken as +1
        let s = if sign_arg >= T::zero() { -T::one() } else { T::one() };
        let delta = s * sqrt_checked(st - ct * cp + sp * root)? / four;
        Ok(Self {
            theta: theta_f,
            phi: as_f64(phi),
            cos_theta: ct,
            sin_theta: st,
            cos_phi: cp,
            sin_phi: sp,
            alpha,
            beta,
            gamma,
            delta,
        })
    }
}

impl LocalParameters<QuadSurd> {
    /// Exact coefficients at `theta = pi/2`, `phi = k pi/2`.
    pub fn exact_half_pi(quarter_turns: u8) -> Self {
        let q = QuadSurd::ratio;
        let r2 = QuadSurd::sqrt2_ratio;
        let k = quarter_turns % 4;
        let (cp, sp) = [(1, 0), (0, 1), (-1, 0), (0, -1)][k as usize];
        // (alpha, beta, gamma, delta)
        let (alpha, beta, gamma, delta) = match k {
            0 => (q(0, 1), r2(1, 4), q(1, 4), q(-1, 4)),
            1 => (q(1, 4), q(1, 4), q(0, 1), r2(-1, 4)),
            2 => (r2(1, 4), q(0, 1), q(1, 4), q(1, 4)),
            _ => (q(1, 4), q(-1, 4), r2(1, 4), q(0, 1)),
        };
        Self {
            theta: std::f64::consts::FRAC_PI_2,
            phi: f64::from(k) * std::f64::consts::FRAC_PI_2,
            cos_theta: q(0, 1),
            sin_theta: q(1, 1),
            cos_phi: q(cp, 1),
            sin_phi: q(sp, 1),
            alpha,
            beta,
            gamma,
            delta,
        }
    }
}

impl<S: Coefficient> LocalParameters<S> {
    /// Residuals of the two conditions fixing `gamma` and `delta`:
    /// `8 g^2 + 8 d^2 - sin(theta)` and
    /// `8 cos(phi) g^2 - 16 sin(phi) g d - 8 cos(phi) d^2 - cos(theta)`.
    pub fn gamma_delta_residuals(&self) -> (S, S) {
        let k = |n: i64| S::from_ratio(n, 1);
        let (g, d) = (self.gamma.clone(), self.delta.clone());
        let r1 = k(8) * g.clone() * g.clone() + k(8) * d.clone() * d.clone() - self.sin_theta.clone();
        let r2 = k(8) * self.cos_phi.clone() * g.clone() * g.clone()
            - k(16) * self.sin_phi.clone() * g * d.clone()
            - k(8) * self.cos_phi.clone() * d.clone() * d
            - self.cos_theta.clone();
        (r1, r2)
    }

    /// `(1 + sin t) 1 - cos t A1 - (sin t / 2)(cos p M + sin p M')`.
    pub fn target(&self) -> Polynomial<S> {
        let half = S::from_ratio(1, 2);
        let m: Polynomial<S> = StandardExpression::Mermin.build().expect("fixed expression");
        let mp: Polynomial<S> = StandardExpression::MerminPrime.build().expect("fixed expression");
        let bell = &m.scale(self.cos_phi.clone()) + &mp.scale(self.sin_phi.clone());
        let mut t = one::<S>().scale(S::one() + self.sin_theta.clone());
        t = &t - &gen(0, 0).scale(self.cos_theta.clone());
        &t - &bell.scale(half * self.sin_theta.clone())
    }

    /// The operators `R^+_1..4` (`sign = 1`) or `R^-_1..4` (`sign = -1`).
    fn r_operators(&self, sign: i64) -> [Polynomial<S>; 4] {
        let sg = S::from_ratio(sign, 1);
        let (a1, a2) = (gen::<S>(0, 0), gen::<S>(0, 1));
        let x1 = &gen::<S>(1, 0) + &gen::<S>(2, 0).scale(sg.clone());
        let x2 = &gen::<S>(1, 1) + &gen::<S>(2, 1).scale(sg.clone());
        // the A1 terms flip sign with the group in R_1 and R_3 only
        let a1s = a1.scale(-sg);
        let (ct, st, cp, sp) = (
            self.cos_theta.clone(),
            self.sin_theta.clone(),
            self.cos_phi.clone(),
            self.sin_phi.clone(),
        );
        let r1 = &(&x1.scale(cp.clone()) + &x2.scale(sp.clone())) + &mul(&a1s, &x1);
        let r2 = &(&x2.scale(ct.clone()) - &mul(&a1, &x2)) + &mul(&a2, &x1).scale(st.clone());
        let r3 = &(&x1.scale(sp) - &x2.scale(cp)) + &mul(&a1s, &x2);
        let r4 = &(&x1.scale(ct) - &mul(&a1, &x1)) - &mul(&a2, &x2).scale(st);
        [r1, r2, r3, r4]
    }

    pub fn certificate(&self) -> SosCertificate<S> {
        let (a, b, g, d) = (
            self.alpha.clone(),
            self.beta.clone(),
            self.gamma.clone(),
            self.delta.clone(),
        );
        let [p1, p2, p3, p4] = self.r_operators(1);
        let [m1, m2, m3, m4] = self.r_operators(-1);
        let lin = |terms: &[(S, &Polynomial<S>)]| {
            terms
                .iter()
                .fold(Polynomial::zero(PARTIES), |acc, (c, r)| &acc + &r.scale(c.clone()))
        };
        let squares = vec![
            (
                "P+1",
                lin(&[(a.clone(), &p1), (b.clone(), &p2), (-b.clone(), &p3), (-a.clone(), &p4)]),
            ),
            ("P+2", lin(&[(g.clone(), &p1), (-d.clone(), &p3)])),
            ("P-1", lin(&[(b.clone(), &m1), (a.clone(), &m2), (a, &m3), (b, &m4)])),
            ("P-2", lin(&[(d, &m1), (g, &m3)])),
        ];
        SosCertificate {
            params: CertificateParams::Local {
                theta: self.theta,
                phi: self.phi,
            },
            squares,
        }
    }
}

pub fn local_tangent_target(theta: f64, phi: f64) -> Result<Polynomial<f64>> {
    Ok(LocalParameters::numeric(theta, phi)?.target())
}

pub fn local_sos_certificate(theta: f64, phi: f64) -> Result<SosCertificate<f64>> {
    let params = LocalParameters::numeric(theta, phi)?;
    let (r1, r2) = params.gamma_delta_residuals();
    if r1.abs() > 1e-12 || r2.abs() > 1e-12 {
        return Err(Error::Invalid(format!(
            "gamma/delta conditions fail with residuals {r1:e}, {r2:e}"
        )));
    }
    Ok(params.certificate())
}

/// Parameters of the two-party family: `(lambda, mu)` and the nine square
/// prefactors.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPartyParameters<S> {
    pub lambda_f: f64,
    pub mu_f: f64,
    pub lambda: S,
    pub mu: S,
    /// Prefactors of `P++1..4, P+-2, P-+1..2, P--1, P--3` in that order.
    pub prefactors: [S; 9],
}

pub const TWO_PARTY_LABELS: [&str; 9] = [
    "P++1", "P++2", "P++3", "P++4", "P+-2", "P-+1", "P-+2", "P--1", "P--3",
];

fn check_cone(lambda: f64, mu: f64) -> Result<()> {
    let slack = 1e-12 * (lambda.abs() + mu.abs());
    if !(mu > 0.0 && lambda >= mu - slack && lambda <= 3.0 * mu + slack) {
        return Err(Error::OutOfDomain {
            name: "lambda",
            value: lambda,
            domain: format!("[mu, 3 mu] with mu = {mu} > 0"),
        });
    }
    Ok(())
}

impl<T: Float + Coefficient> TwoPartyParameters<T> {
    /// Floating point prefactors; `(lambda, mu)` is rescaled so that
    /// `lambda^2 + 3 mu^2 = 1`.
    pub fn numeric(lambda: T, mu: T) -> Result<Self> {
        let lf = as_f64(lambda);
        let mf = as_f64(mu);
        check_cone(lf, mf)?;
        let k = |x: f64| T::from(x).expect("representable");
        let norm = (lambda * lambda + k(3.0) * mu * mu).sqrt();
        let (l, m) = (lambda / norm, mu / norm);
        let sq = sqrt_checked::<T>;
        let lm = radicand(l - m)?;
        let tm = radicand(k(3.0) * m - l)?;
        let prefactors = [
            (l + m).sqrt() / (k(4.0) * m.sqrt()) * tm,
            sq((l * l - m * m).max(T::zero()) * tm)? / (k(4.0) * m.sqrt()),
            tm.sqrt() / (k(2.0) * m.sqrt() * (l + m)),
            T::one() / (k(2.0) * (l * m).sqrt() * (l + m)),
            k(0.5) * (l * lm).sqrt(),
            k(0.5) * l.sqrt() / (k(2.0) * m).sqrt() * (lm * lm + k(4.0) * m * m).sqrt(),
            k(0.5) * sq(l * tm / (m * (l + m)))?,
            (l * lm / k(2.0)).sqrt(),
            (l * lm).sqrt() / (k(2.0) * (l + m)),
        ];
        Ok(Self {
            lambda_f: as_f64(l),
            mu_f: as_f64(m),
            lambda: l,
            mu: m,
            prefactors,
        })
    }
}

impl TwoPartyParameters<QuadSurd> {
    /// Exact prefactors at `lambda = mu = 1/2`.
    pub fn exact_equal() -> Self {
        let q = QuadSurd::ratio;
        let r2 = QuadSurd::sqrt2_ratio;
        Self {
            lambda_f: 0.5,
            mu_f: 0.5,
            lambda: q(1, 2),
            mu: q(1, 2),
            prefactors: [
                r2(1, 4),
                q(0, 1),
                r2(1, 2),
                q(1, 1),
                q(0, 1),
                r2(1, 4),
                q(1, 2),
                q(0, 1),
                q(0, 1),
            ],
        }
    }
}

impl<S: Coefficient> TwoPartyParameters<S> {
    /// `(beta, alpha, gamma)` of the linearisation.
    pub fn linear_coefficients(&self) -> (S, S, S) {
        let (l, m) = (self.lambda.clone(), self.mu.clone());
        let k = |n: i64| S::from_ratio(n, 1);
        let beta = (l.clone() - m.clone()) * (l.clone() + k(3) * m.clone());
        let alpha = k(4) * l.clone() * m.clone();
        let gamma = (k(3) * l.clone() + m.clone()) * (l + k(3) * m);
        (beta, alpha, gamma)
    }

    /// `gamma 1 - beta (A1 + B1 + A1 B1) - alpha M`.
    pub fn target(&self) -> Polynomial<S> {
        let (beta, alpha, gamma) = self.linear_coefficients();
        let (a1, b1) = (gen::<S>(0, 0), gen::<S>(1, 0));
        let marg = &(&a1 + &b1) + &mul(&a1, &b1);
        let m: Polynomial<S> = StandardExpression::Mermin.build().expect("fixed expression");
        &(&one::<S>().scale(gamma) - &marg.scale(beta)) - &m.scale(alpha)
    }

    pub fn certificate(&self) -> SosCertificate<S> {
        let (l, m) = (self.lambda.clone(), self.mu.clone());
        let k = |n: i64| S::from_ratio(n, 1);
        let id = one::<S>();
        let (a1, a2) = (gen::<S>(0, 0), gen::<S>(0, 1));
        let (b1, b2) = (gen::<S>(1, 0), gen::<S>(1, 1));
        let (c1, c2) = (gen::<S>(2, 0), gen::<S>(2, 1));
        let lmm = l.clone() - m.clone();
        let lpm = l.clone() + m.clone();
        let lsq = l.clone() * l.clone() - m.clone() * m.clone();
        let lm4 = k(4) * l.clone() * m.clone();
        let sa1 = &a1 + &b1;
        let sa2 = &a2 + &b2;
        let da1 = &a1 - &b1;
        let da2 = &a2 - &b2;

        let rpp1 = mul(&sa1, &(&id - &c1));
        let rpp2 = &c1 - &mul(&a1, &b1);
        let rpp3 = &(&(&id.scale(lmm.clone() * lmm.clone()) + &c1.scale(lpm.clone() * lpm.clone()))
            - &sa1.scale(lsq.clone()))
            + &mul(&a2, &b2).scale(lm4.clone());
        let rpp4 = &(&(&id.scale(lmm.clone() * lmm.clone()) + &sa1.scale(m.clone() * lpm.clone()))
            - &c1.scale(lsq))
            + &mul(&sa2, &c2).scale(k(2) * l.clone() * m.clone());
        let rpm2 = &(&(&sa2 - &c2.scale(k(2))) - &(&mul(&a1, &b2) + &mul(&a2, &b1))) + &mul(&sa1, &c2);
        let rmp1 = mul(&da1, &(&id + &c1));
        let rmp2 = &da1.scale(lpm.clone()) - &mul(&da2, &c2).scale(k(2) * m.clone());
        let rmm1 = mul(&da2, &(&id - &c1));
        let rmm2 = &da2.scale(k(2) * m) - &mul(&da1, &c2).scale(lpm.clone());
        let rmm3 = &da2.scale(lmm.clone()) + &(&mul(&a1, &b2) - &mul(&a2, &b1)).scale(lpm.clone());

        // P++4 is stored as (l - m) R++3 + (l + m) R++4 with the factor
        // 1 / (l + m) moved into its prefactor.
        let p4 = &rpp3.scale(lmm) + &rpp4.scale(lpm);
        let operators = [
            rpp1.clone(),
            &rpp1 + &rpp2.scale(k(2)),
            rpp3,
            p4,
            rpm2,
            rmp1,
            rmp2,
            rmm1,
            &rmm2 + &rmm3,
        ];
        let squares = TWO_PARTY_LABELS
            .iter()
            .zip(operators)
            .zip(self.prefactors.iter())
            .map(|((label, r), c)| (*label, r.scale(c.clone())))
            .collect();
        SosCertificate {
            params: CertificateParams::TwoParty {
                lambda: self.lambda_f,
                mu: self.mu_f,
            },
            squares,
        }
    }
}

pub fn two_party_target(lambda: f64, mu: f64) -> Result<Polynomial<f64>> {
    Ok(TwoPartyParameters::numeric(lambda, mu)?.target())
}

pub fn two_party_sos_certificate(lambda: f64, mu: f64) -> Result<SosCertificate<f64>> {
    Ok(TwoPartyParameters::numeric(lambda, mu)?.certificate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_monomial;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn coeff(p: &Polynomial<f64>, m: &str) -> f64 {
        p.coefficient(&parse_monomial(m, 3).unwrap())
    }

    #[test]
    fn local_target_values() {
        let t = local_tangent_target(FRAC_PI_2, 0.0).unwrap();
        assert!(coeff(&t, "A1").abs() < 1e-15);
        assert!((coeff(&t, "A1B1C1") + 0.5).abs() < 1e-15);
        let t = local_tangent_target(FRAC_PI_4, 0.0).unwrap();
        assert!((coeff(&t, "1") - (1.0 + 1.0 / 2f64.sqrt())).abs() < 1e-15);
        assert!(local_tangent_target(0.5, 0.0).is_err());
    }

    #[test]
    fn local_coefficients_at_half_pi() {
        let p = LocalParameters::numeric(FRAC_PI_2, 0.0).unwrap();
        assert!(p.alpha.abs() < 1e-15);
        assert!((p.beta - 0.35355339059327373).abs() < 1e-15);
        assert!((p.gamma - 0.25).abs() < 1e-15);
        assert!((p.delta + 0.25).abs() < 1e-15);
    }

    #[test]
    fn exact_parameters_match_numeric() {
        for k in 0..4u8 {
            let e = LocalParameters::exact_half_pi(k);
            let n = LocalParameters::numeric(FRAC_PI_2, f64::from(k) * FRAC_PI_2).unwrap();
            for (x, y) in [(e.alpha, n.alpha), (e.beta, n.beta), (e.gamma, n.gamma), (e.delta, n.delta)] {
                assert!((x.to_f64() - y).abs() < 1e-12, "k = {k}");
            }
            let (r1, r2) = e.gamma_delta_residuals();
            assert_eq!((r1, r2), (QuadSurd::ratio(0, 1), QuadSurd::ratio(0, 1)));
        }
        let e = TwoPartyParameters::exact_equal();
        let n = TwoPartyParameters::numeric(0.5, 0.5).unwrap();
        for (x, y) in e.prefactors.iter().zip(n.prefactors) {
            assert!((x.to_f64() - y).abs() < 1e-12);
        }
    }

    #[test]
    fn local_identity_sampled() {
        for (theta, phi) in [(FRAC_PI_3, PI / 5.0), (FRAC_PI_4, 1.0), (1.2, 4.0), (FRAC_PI_2, 2.2)] {
            let p = LocalParameters::numeric(theta, phi).unwrap();
            let (r1, r2) = p.gamma_delta_residuals();
            assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12);
            let v = p.certificate().verify(&p.target()).unwrap();
            assert!(v.residual < 1e-12, "{theta} {phi}: {v:?}");
        }
    }

    #[test]
    fn local_identity_exact() {
        for k in 0..4u8 {
            let p = LocalParameters::exact_half_pi(k);
            assert!(p.certificate().verify_exact(&p.target()).unwrap(), "k = {k}");
        }
    }

    #[test]
    fn two_party_identity() {
        for (l, m) in [(1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (0.8, 0.34641016151377546), (0.75, 0.4)] {
            let p = TwoPartyParameters::numeric(l, m).unwrap();
            let v = p.certificate().verify(&p.target()).unwrap();
            assert!(v.residual < 1e-12, "{l} {m}: {v:?}");
        }
        let e = TwoPartyParameters::exact_equal();
        assert!(e.certificate().verify_exact(&e.target()).unwrap());
    }

    #[test]
    fn boundary_squares_vanish() {
        let c = two_party_sos_certificate(1.0, 1.0).unwrap();
        for label in ["P+-2", "P--1", "P--3"] {
            let p = &c.squares.iter().find(|(l, _)| *l == label).unwrap().1;
            assert!(p.terms().values().all(|x| x.abs() < 1e-12), "{label}");
        }
        let c = two_party_sos_certificate(3.0, 1.0).unwrap();
        assert!(c.squares[0].1.terms().values().all(|x| x.abs() < 1e-12));
        assert_eq!(c.squares.len(), 9);
        let c = two_party_sos_certificate(0.8, 0.34641016151377546).unwrap();
        assert!(c.squares.iter().all(|(_, p)| p.terms().values().any(|x| x.abs() > 1e-6)));
    }

    #[test]
    fn two_party_target_extremes() {
        let t = two_party_target(1.0, 1.0).unwrap();
        assert!(coeff(&t, "A1").abs() < 1e-15);
        // lambda = 3 mu: proportional to 6 - M - 4 P(++|11) = 6 - M - (1 + A1 + B1 + A1B1)
        let t = two_party_target(3.0, 1.0).unwrap();
        let scale = coeff(&t, "A1B1C1") / -1.0;
        assert!((coeff(&t, "1") / scale - 5.0).abs() < 1e-12);
        assert!((coeff(&t, "A1") / scale + 1.0).abs() < 1e-12);
        assert!((coeff(&t, "A1B1") / scale + 1.0).abs() < 1e-12);
    }

    #[test]
    fn corrupted_target_detected() {
        let c = local_sos_certificate(1.0, 0.5).unwrap();
        let mut t = local_tangent_target(1.0, 0.5).unwrap();
        t.add_term(parse_monomial("A1B1C1", 3).unwrap(), 1e-3);
        assert!(c.verify(&t).unwrap().residual >= 9e-4);
    }

    #[test]
    fn single_square_expansion() {
        let p = &gen::<f64>(0, 0) + &gen::<f64>(1, 0);
        let e = expand_square_sum(&[p]).unwrap();
        assert_eq!(coeff(&e, "1"), 2.0);
        assert_eq!(coeff(&e, "A1B1"), 2.0);
        assert_eq!(e.len(), 2);
        assert_eq!(expand_square_sum(&[one::<f64>()]).unwrap(), one());
    }

    #[test]
    fn symmetries() {
        let p = LocalParameters::numeric(1.1, 0.9).unwrap();
        let t = p.target();
        assert!(t.relabel(tau_swap_bc).unwrap().max_abs_difference(&t).0 < 1e-15);
        let e = p.certificate().expand().unwrap();
        assert!(e.relabel(tau_swap_bc).unwrap().max_abs_difference(&e).0 < 1e-12);
        let t2 = two_party_target(0.75, 0.4).unwrap();
        assert!(t2.relabel(tau_swap_ab).unwrap().max_abs_difference(&t2).0 < 1e-15);
        assert!(t2.relabel(tau_flip_second).unwrap().max_abs_difference(&t2).0 < 1e-15);
    }

    #[test]
    fn squares_are_hermitian() {
        let c = local_sos_certificate(1.3, 2.0).unwrap();
        assert!(c.squares.iter().all(|(_, p)| p.is_hermitian()));
        let c = two_party_sos_certificate(0.75, 0.4).unwrap();
        assert!(c.squares.iter().all(|(_, p)| p.is_hermitian()));
    }
}
