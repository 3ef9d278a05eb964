//! Closed-form guessing-probability bounds.
//!
//! Quantum bounds are functions of the Mermin values; no-signalling bounds
//! are piecewise linear. All evaluators are generic over the floating point
//! type and reject arguments outside their domain instead of clamping them.

mod global222;

pub use global222::{global222_conjecture, global222_objective, Global222Config, Global222Point};

use num_traits::{Float, FloatConst};

use crate::error::{Error, Result};

/// Relative slack accepted at domain edges to absorb rounding in callers.
const EDGE_SLACK: f64 = 1e-12;

fn c<T: Float>(x: f64) -> T {
    T::from(x).expect("constant representable")
}

/// Raw formula value together with its value clamped to `[floor, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundValue<T> {
    pub raw: T,
    pub clamped: T,
}

impl<T: Float> BoundValue<T> {
    /// Clamps `raw` at one and at the trivial floor `2^-bits` of a
    /// `bits`-bit guess.
    pub fn new(raw: T, bits: u32) -> Self {
        let floor = T::one() / c::<T>(f64::from(1u32 << bits));
        Self {
            raw,
            clamped: raw.min(T::one()).max(floor),
        }
    }
}

fn check_range<T: Float>(name: &'static str, x: T, lo: T, hi: T) -> Result<T> {
    let slack = c::<T>(EDGE_SLACK) * (T::one() + hi.abs());
    if !(x >= lo - slack && x <= hi + slack) {
        return Err(Error::OutOfDomain {
            name,
            value: x.to_f64().unwrap_or(f64::NAN),
            domain: format!(
                "[{}, {}]",
                lo.to_f64().unwrap_or(f64::NAN),
                hi.to_f64().unwrap_or(f64::NAN)
            ),
        });
    }
    Ok(x.max(lo).min(hi))
}

/// `f(x)` on `[2 sqrt 2, 4]`: linear below `2 + sqrt 2`, square-root branch
/// above.
pub fn f_curve<T: Float + FloatConst>(x: T) -> Result<T> {
    let two = c::<T>(2.0);
    let x = check_range("x", x, two * T::SQRT_2(), c(4.0))?;
    Ok(f_unchecked(x))
}

fn f_unchecked<T: Float + FloatConst>(x: T) -> T {
    let half = c::<T>(0.5);
    if x >= c::<T>(2.0) + T::SQRT_2() {
        half + half * (x * (T::one() - x / c(4.0))).max(T::zero()).sqrt()
    } else {
        T::one() + T::FRAC_1_SQRT_2() - x / c(4.0)
    }
}

/// Bound on `P_g(A1|E)` from both Mermin values; vacuous (raw 1) when the
/// radius is below `2 sqrt 2`.
pub fn local_gp_bound<T: Float + FloatConst>(m: T, m_prime: T) -> Result<BoundValue<T>> {
    let radius = m.hypot(m_prime);
    let radius = check_range("sqrt(M^2 + M'^2)", radius, T::zero(), c(4.0))?;
    let raw = if radius < c::<T>(2.0) * T::SQRT_2() {
        T::one()
    } else {
        f_unchecked(radius)
    };
    Ok(BoundValue::new(raw, 1))
}

/// Bound on `P_g(A1B1|E)` (and `P_g(A1B1C1|E)`) from the Mermin value.
pub fn two_party_gp_bound<T: Float + FloatConst>(m: T) -> Result<BoundValue<T>> {
    let m = check_range("M", m, c(2.0), c(4.0))?;
    Ok(BoundValue::new(two_party_unchecked(m), 2))
}

fn two_party_unchecked<T: Float + FloatConst>(m: T) -> T {
    let eighth = m / c(8.0);
    if m >= c(3.0) {
        c::<T>(0.75) - eighth + c::<T>(3.0).sqrt() * (eighth * (c::<T>(0.5) - eighth)).max(T::zero()).sqrt()
    } else {
        c::<T>(1.5) - m / c(4.0)
    }
}

/// Bound on `P_g(A1|E)` from the Svetlichny value `M + M'`.
pub fn svetlichny_local_bound<T: Float + FloatConst>(m_plus: T) -> Result<BoundValue<T>> {
    let four = c::<T>(4.0);
    let m_plus = check_range("M+", m_plus, four, four * T::SQRT_2())?;
    Ok(BoundValue::new(f_unchecked(m_plus / T::SQRT_2()), 1))
}

fn check_ns<T: Float>(m: T, m_prime: T) -> Result<(T, T)> {
    let four = c::<T>(4.0);
    let m = check_range("M", m, -four, four)?;
    let m_prime = check_range("M'", m_prime, -four, four)?;
    Ok((m.abs(), m_prime.abs()))
}

/// No-signalling bound on `P_g(A1|E)`.
pub fn ns_local_bound<T: Float>(m: T, m_prime: T) -> Result<BoundValue<T>> {
    let (m, mp) = check_ns(m, m_prime)?;
    let eighth = c::<T>(0.125);
    Ok(BoundValue::new(c::<T>(1.5) - eighth * m - eighth * mp, 1))
}

/// No-signalling bound on `P_g(A1B1|E)`: the minimum of the two tight
/// bounds and their images under `M <-> M'`.
pub fn ns_two_party_bound<T: Float>(m: T, m_prime: T) -> Result<BoundValue<T>> {
    let (m, mp) = check_ns(m, m_prime)?;
    let q = c::<T>(0.25);
    let e = c::<T>(0.125);
    let candidates = [
        c::<T>(1.5) - q * m,
        c::<T>(1.75) - q * m - e * mp,
        c::<T>(1.5) - q * mp,
        c::<T>(1.75) - q * mp - e * m,
    ];
    let raw = candidates.iter().copied().fold(T::infinity(), T::min);
    Ok(BoundValue::new(raw, 2))
}

/// The three listed global bounds, without the ones inherited from the
/// two-party guess.
pub fn ns_global_listed_bound<T: Float>(m: T, m_prime: T, swapped: bool) -> Result<BoundValue<T>> {
    let (m, mp) = check_ns(m, m_prime)?;
    let (m, mp) = if swapped { (mp, m) } else { (m, mp) };
    let candidates = [
        c::<T>(1.5) - m / c(4.0),
        c::<T>(1.75) - m / c(4.0) - mp / c(8.0),
        c::<T>(1.75) - m / c(16.0) - c::<T>(5.0) * mp / c(16.0),
    ];
    let raw = candidates.iter().copied().fold(T::infinity(), T::min);
    Ok(BoundValue::new(raw, 3))
}

/// No-signalling bound on the three-party guessing probability. Unswapped
/// applies to `A1B1C1` (and the other `M`-type setting triples); `swapped`
/// exchanges `M` and `M'` for `A2B2C2` and the `M'`-type triples.
///
/// Guessing three bits is no easier than guessing two of them, so the
/// two-party bounds with `M` and `M'` exchanged apply as well; without them
/// the minimum overshoots the LP optimum near `M = 0`, `|M'| > 2`.
pub fn ns_global_bound<T: Float>(m: T, m_prime: T, swapped: bool) -> Result<BoundValue<T>> {
    let listed = ns_global_listed_bound(m, m_prime, swapped)?;
    let (m, mp) = check_ns(m, m_prime)?;
    let (m, mp) = if swapped { (mp, m) } else { (m, mp) };
    let inherited = (c::<T>(1.5) - mp / c(4.0)).min(c::<T>(1.75) - mp / c(4.0) - m / c(8.0));
    Ok(BoundValue::new(listed.raw.min(inherited), 3))
}

/// Parameters of the n-party Mermin scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NPartyParams<T> {
    pub n: usize,
    /// Local bound.
    pub local: T,
    /// Quantum bound `2^(n-1)`.
    pub quantum: T,
    /// Point where the linear interpolation touches the curve.
    pub threshold: T,
}

impl<T: Float> NPartyParams<T> {
    pub fn new(n: usize) -> Result<Self> {
        if !(3..=crate::MAX_PARTIES).contains(&n) {
            return Err(Error::OutOfDomain {
                name: "n",
                value: n as f64,
                domain: format!("3..={}", crate::MAX_PARTIES),
            });
        }
        let two = c::<T>(2.0);
        let local = if n % 2 == 1 {
            two.powi(((n - 1) / 2) as i32)
        } else {
            two.powi((n / 2) as i32)
        };
        let quantum = two.powi(n as i32 - 1);
        let threshold = local * local * (quantum - T::one()) / (local * local - two * local + quantum);
        Ok(Self {
            n,
            local,
            quantum,
            threshold,
        })
    }

    /// Value of the bound at the threshold.
    pub fn threshold_value(&self) -> T {
        let l = self.local;
        (self.quantum - T::one()) / (l * l - c::<T>(2.0) * l + self.quantum)
    }

    /// Curve traced by the pure strategy family.
    pub fn curve(&self, m: T) -> T {
        let q = self.quantum;
        T::one() - T::one() / q - (q - c(2.0)) / (q * q) * m
            + c::<T>(2.0) * (q - T::one()).sqrt() / (q * q) * (m * (q - m)).max(T::zero()).sqrt()
    }

    /// Linear interpolation between the deterministic point and the curve.
    pub fn interpolation(&self, m: T) -> T {
        let (l, q) = (self.local, self.quantum);
        (l * (q - T::one()) - (l - T::one()) * m) / (l * (q - l))
    }
}

/// Conjectured bound on the guessing probability of the first `n - 1`
/// parties' first-setting outcomes in terms of the n-party Mermin value.
pub fn nparty_bound<T: Float>(n: usize, m: T) -> Result<BoundValue<T>> {
    let params = NPartyParams::<T>::new(n)?;
    let m = check_range("M_n", m, params.local, params.quantum)?;
    let raw = if m >= params.threshold {
        params.curve(m)
    } else {
        params.interpolation(m)
    };
    Ok(BoundValue::new(raw, (n - 1) as u32))
}

/// The CHSH reference curve `1/2 + 1/2 sqrt(2 - S^2/4)` for `S` in
/// `[2, 2 sqrt 2]`.
pub fn chsh_local_bound<T: Float + FloatConst>(s: T) -> Result<BoundValue<T>> {
    let two = c::<T>(2.0);
    let s = check_range("S", s, two, two * T::SQRT_2())?;
    let half = c::<T>(0.5);
    Ok(BoundValue::new(half + half * (two - s * s / c(4.0)).max(T::zero()).sqrt(), 1))
}
