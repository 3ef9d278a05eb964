//! Coefficient rings used by the operator algebra.
//!
//! Polynomials over the dichotomic generators only need ring arithmetic, so
//! the algebra is generic over [`Coefficient`]. Floating point types use
//! compensated summation when many cancelling contributions are merged;
//! [`QuadSurd`] gives exact arithmetic in `Q(sqrt 2)` for certificate checks
//! at special parameter points.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Ring of coefficients for [`crate::algebra::Polynomial`].
pub trait Coefficient:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// Nearest double, used for residual reporting.
    fn to_f64(&self) -> f64;

    /// The rational number `num / den`.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Sum of a sequence of contributions.
    fn sum_all<I: IntoIterator<Item = Self>>(items: I) -> Self {
        items.into_iter().fold(Self::zero(), |acc, x| acc + x)
    }
}

/// Neumaier's variant of Kahan summation.
fn neumaier<T: num_traits::Float, I: IntoIterator<Item = T>>(items: I) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for x in items {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp = comp + ((sum - t) + x);
        } else {
            comp = comp + ((x - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

impl Coefficient for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn sum_all<I: IntoIterator<Item = Self>>(items: I) -> Self {
        neumaier(items)
    }
}

impl Coefficient for f32 {
    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn sum_all<I: IntoIterator<Item = Self>>(items: I) -> Self {
        neumaier(items)
    }
}

impl Coefficient for Rational64 {
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational64::new(num, den)
    }
}

/// Exact element `rational + surd * sqrt(2)` of the field `Q(sqrt 2)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadSurd {
    pub rational: Rational64,
    pub surd: Rational64,
}

impl QuadSurd {
    pub const fn new(rational: Rational64, surd: Rational64) -> Self {
        Self { rational, surd }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::new(Rational64::from_integer(n), Rational64::zero())
    }

    /// `num / den` as a pure rational.
    pub fn ratio(num: i64, den: i64) -> Self {
        Self::new(Rational64::new(num, den), Rational64::zero())
    }

    /// `(num / den) * sqrt(2)`.
    pub fn sqrt2_ratio(num: i64, den: i64) -> Self {
        Self::new(Rational64::zero(), Rational64::new(num, den))
    }

    pub fn sqrt2() -> Self {
        Self::sqrt2_ratio(1, 1)
    }

    /// Conjugate under `sqrt 2 -> -sqrt 2`.
    pub fn conjugate(self) -> Self {
        Self::new(self.rational, -self.surd)
    }

    /// Field norm `a^2 - 2 b^2`.
    pub fn norm(self) -> Rational64 {
        self.rational * self.rational - Rational64::from_integer(2) * self.surd * self.surd
    }

    /// Sign of the real number represented, computed exactly.
    pub fn signum(self) -> i32 {
        let a = self.rational;
        let b = self.surd;
        let sa = sign_of(a);
        let sb = sign_of(b);
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return if sa == 0 { sb } else { sa };
        }
        // Opposite signs: compare a^2 with 2 b^2.
        let lhs = a * a;
        let rhs = Rational64::from_integer(2) * b * b;
        if lhs > rhs {
            sa
        } else if lhs < rhs {
            sb
        } else {
            0
        }
    }

    pub fn abs(self) -> Self {
        if self.signum() < 0 {
            -self
        } else {
            self
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(self) -> Option<Self> {
        let n = self.norm();
        if n.is_zero() {
            return None;
        }
        let c = self.conjugate();
        Some(Self::new(c.rational / n, c.surd / n))
    }
}

fn sign_of(r: Rational64) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl fmt::Debug for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rational.is_zero(), self.surd.is_zero()) {
            (_, true) => write!(f, "{}", self.rational),
            (true, false) => write!(f, "{}*sqrt2", self.surd),
            (false, false) => write!(f, "{} + {}*sqrt2", self.rational, self.surd),
        }
    }
}

impl Add for QuadSurd {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.rational + rhs.rational, self.surd + rhs.surd)
    }
}

impl Sub for QuadSurd {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.rational - rhs.rational, self.surd - rhs.surd)
    }
}

impl Mul for QuadSurd {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let two = Rational64::from_integer(2);
        Self::new(
            self.rational * rhs.rational + two * self.surd * rhs.surd,
            self.rational * rhs.surd + self.surd * rhs.rational,
        )
    }
}

impl Div for QuadSurd {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip().expect("division by zero in Q(sqrt 2)")
    }
}

impl Neg for QuadSurd {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.rational, -self.surd)
    }
}

impl Zero for QuadSurd {
    fn zero() -> Self {
        Self::new(Rational64::zero(), Rational64::zero())
    }
    fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.surd.is_zero()
    }
}

impl One for QuadSurd {
    fn one() -> Self {
        Self::from_integer(1)
    }
}

impl Coefficient for QuadSurd {
    fn to_f64(&self) -> f64 {
        Coefficient::to_f64(&self.rational) + Coefficient::to_f64(&self.surd) * std::f64::consts::SQRT_2
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::ratio(num, den)
    }
}
