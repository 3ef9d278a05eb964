use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::monomial::{parse_monomial, Monomial, PartyObservable};
use crate::error::{Error, Result};
use crate::scalar::Coefficient;

/// Finitely supported linear combination of monomials.
///
/// Zero coefficients are never stored, so two polynomials are equal exactly
/// when their term maps are equal.
#[derive(Clone, PartialEq)]
pub struct Polynomial<S> {
    n_parties: usize,
    terms: BTreeMap<Monomial, S>,
}

impl<S: Coefficient> Polynomial<S> {
    pub fn zero(n_parties: usize) -> Self {
        Self {
            n_parties,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_parties: usize, value: S) -> Self {
        let mut p = Self::zero(n_parties);
        p.add_term(Monomial::identity(n_parties), value);
        p
    }

    pub fn identity(n_parties: usize) -> Self {
        Self::constant(n_parties, S::one())
    }

    pub fn from_monomial(m: Monomial, coefficient: S) -> Self {
        let mut p = Self::zero(m.n_parties());
        p.add_term(m, coefficient);
        p
    }

    /// The generator `X_setting` of `party` with unit coefficient.
    pub fn generator(n_parties: usize, party: usize, setting: usize) -> Result<Self> {
        Ok(Self::from_monomial(
            Monomial::generator(n_parties, party, setting)?,
            S::one(),
        ))
    }

    /// Builds a polynomial from `(coefficient, monomial)` pairs.
    pub fn from_terms<I>(n_parties: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Monomial)>,
    {
        let mut p = Self::zero(n_parties);
        for (c, m) in terms {
            if m.n_parties() != n_parties {
                return Err(Error::PartyCountMismatch {
                    left: n_parties,
                    right: m.n_parties(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, S> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> S {
        self.terms.get(m).cloned().unwrap_or_else(S::zero)
    }

    /// Adds `c * m`, dropping the entry if it cancels.
    pub fn add_term(&mut self, m: Monomial, c: S) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&m) {
            Some(old) => old + c,
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(m, sum);
        }
    }

    pub fn scale(&self, factor: S) -> Self {
        let mut out = Self::zero(self.n_parties);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone() * factor.clone());
        }
        out
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_parties(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    /// Product, with all contributions to a monomial merged by
    /// [`Coefficient::sum_all`].
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_parties(other)?;
        let mut buckets: BTreeMap<Monomial, Vec<S>> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m = m1.multiply(m2)?;
                buckets.entry(m).or_default().push(c1.clone() * c2.clone());
            }
        }
        Ok(Self::from_buckets(self.n_parties, buckets))
    }

    pub(crate) fn from_buckets(n_parties: usize, buckets: BTreeMap<Monomial, Vec<S>>) -> Self {
        let mut out = Self::zero(n_parties);
        for (m, parts) in buckets {
            let c = S::sum_all(parts);
            if !c.is_zero() {
                out.terms.insert(m, c);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.n_parties);
        for (m, c) in &self.terms {
            out.add_term(m.adjoint(), c.clone());
        }
        out
    }

    /// `p^dagger p`.
    pub fn hermitian_square(&self) -> Self {
        self.adjoint()
            .try_mul(self)
            .expect("party counts agree with themselves")
    }

    pub fn is_hermitian(&self) -> bool {
        self.adjoint() == *self
    }

    /// Applies a relabelling of generators with signs.
    pub fn relabel<F>(&self, map: F) -> Result<Self>
    where
        F: Fn(PartyObservable) -> (PartyObservable, i8),
    {
        let mut out = Self::zero(self.n_parties);
        for (m, c) in &self.terms {
            let (image, sign) = m.relabel(&map)?;
            let c = if sign < 0 { -c.clone() } else { c.clone() };
            out.add_term(image, c);
        }
        Ok(out)
    }

    /// Largest absolute coefficient of `self - other`, with the monomial
    /// where it occurs.
    pub fn max_abs_difference(&self, other: &Self) -> (f64, Option<Monomial>) {
        let mut worst = (0.0f64, None);
        let keys = self.terms.keys().chain(other.terms.keys());
        for m in keys {
            let d = (self.coefficient(m) - other.coefficient(m)).to_f64().abs();
            if d > worst.0 || (worst.1.is_none() && d > 0.0) {
                worst = (d, Some(m.clone()));
            }
        }
        worst
    }

    /// Converts coefficients to doubles.
    pub fn to_f64(&self) -> Polynomial<f64> {
        let mut out = Polynomial::zero(self.n_parties);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.to_f64());
        }
        out
    }

    fn check_parties(&self, other: &Self) -> Result<()> {
        if self.n_parties != other.n_parties {
            return Err(Error::PartyCountMismatch {
                left: self.n_parties,
                right: other.n_parties,
            });
        }
        Ok(())
    }
}

impl Polynomial<f64> {
    /// JSON object `{ "A1*B2*C2": coefficient, ... }`.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .terms
            .iter()
            .map(|(m, c)| (m.to_string(), serde_json::Value::from(*c)))
            .collect();
        serde_json::Value::Object(map)
    }

    pub fn from_json(value: &serde_json::Value, n_parties: usize) -> Result<Self> {
        let map = value
            .as_object()
            .ok_or_else(|| Error::Invalid("expression JSON must be an object".into()))?;
        let mut p = Self::zero(n_parties);
        for (k, v) in map {
            let c = v
                .as_f64()
                .ok_or_else(|| Error::Invalid(format!("coefficient of {k} is not a number")))?;
            p.add_term(parse_monomial(k, n_parties)?, c);
        }
        Ok(p)
    }
}

impl<S: Coefficient> Add for &Polynomial<S> {
    type Output = Polynomial<S>;
    fn add(self, rhs: Self) -> Polynomial<S> {
        self.try_add(rhs).expect("party count mismatch in polynomial sum")
    }
}

impl<S: Coefficient> Add for Polynomial<S> {
    type Output = Polynomial<S>;
    fn add(self, rhs: Self) -> Polynomial<S> {
        &self + &rhs
    }
}

impl<S: Coefficient> Sub for &Polynomial<S> {
    type Output = Polynomial<S>;
    fn sub(self, rhs: Self) -> Polynomial<S> {
        self + &(-rhs)
    }
}

impl<S: Coefficient> Sub for Polynomial<S> {
    type Output = Polynomial<S>;
    fn sub(self, rhs: Self) -> Polynomial<S> {
        &self - &rhs
    }
}

impl<S: Coefficient> Mul for &Polynomial<S> {
    type Output = Polynomial<S>;
    fn mul(self, rhs: Self) -> Polynomial<S> {
        self.try_mul(rhs).expect("party count mismatch in polynomial product")
    }
}

impl<S: Coefficient> Mul for Polynomial<S> {
    type Output = Polynomial<S>;
    fn mul(self, rhs: Self) -> Polynomial<S> {
        &self * &rhs
    }
}

impl<S: Coefficient> Neg for &Polynomial<S> {
    type Output = Polynomial<S>;
    fn neg(self) -> Polynomial<S> {
        self.scale(-S::one())
    }
}

impl<S: Coefficient> Neg for Polynomial<S> {
    type Output = Polynomial<S>;
    fn neg(self) -> Polynomial<S> {
        -&self
    }
}

impl<S: Coefficient> fmt::Debug for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c:?})*{m}")?;
        }
        Ok(())
    }
}
