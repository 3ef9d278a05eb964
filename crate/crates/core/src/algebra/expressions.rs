//! Standard Bell expressions and their evaluation on behaviors.

use std::fmt;
use std::str::FromStr;


use super::monomial::Monomial;
use super::polynomial::Polynomial;
use crate::behavior::Behavior;
use crate::error::{Error, Result};
use crate::scalar::Coefficient;
use crate::MAX_PARTIES;

/// Named expressions used throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StandardExpression {
    /// Real part of `<(A1 + iA2)(B1 + iB2)(C1 + iC2)>`.
    Mermin,
    /// Imaginary part of the same product.
    MerminPrime,
    /// `Mermin + MerminPrime`.
    Svetlichny,
    /// `A1B1 + A1B2 + A2B1 - A2B2`.
    Chsh,
    /// Real part of the n-fold product.
    MerminN(usize),
}

impl StandardExpression {
    pub fn n_parties(&self) -> usize {
        match self {
            Self::Chsh => 2,
            Self::MerminN(n) => *n,
            _ => 3,
        }
    }

    pub fn build<S: Coefficient>(&self) -> Result<Polynomial<S>> {
        match *self {
            Self::Mermin => product_expansion(3, 0),
            Self::MerminPrime => product_expansion(3, 1),
            Self::Svetlichny => {
                Ok(&product_expansion::<S>(3, 0)? + &product_expansion::<S>(3, 1)?)
            }
            Self::Chsh => {
                let one = S::one();
                Polynomial::from_terms(
                    2,
                    [
                        (one.clone(), Monomial::product_of(2, &[(0, 0), (1, 0)])?),
                        (one.clone(), Monomial::product_of(2, &[(0, 0), (1, 1)])?),
                        (one.clone(), Monomial::product_of(2, &[(0, 1), (1, 0)])?),
                        (-one, Monomial::product_of(2, &[(0, 1), (1, 1)])?),
                    ],
                )
            }
            Self::MerminN(n) => {
                if n < 2 {
                    return Err(Error::OutOfDomain {
                        name: "n",
                        value: n as f64,
                        domain: "n >= 2".into(),
                    });
                }
                if n > MAX_PARTIES {
                    return Err(Error::TooManyParties(n));
                }
                product_expansion(n, 0)
            }
        }
    }
}

/// Real (`part = 0`) or imaginary (`part = 1`) part of
/// `prod_p (X_1^(p) + i X_2^(p))`.
fn product_expansion<S: Coefficient>(n: usize, part: usize) -> Result<Polynomial<S>> {
    let mut p = Polynomial::zero(n);
    for mask in 0u32..(1 << n) {
        let k = mask.count_ones() as usize;
        // i^k split into real/imaginary parts.
        let coefficient = match (k % 4, part) {
            (0, 0) => S::one(),
            (2, 0) => -S::one(),
            (1, 1) => S::one(),
            (3, 1) => -S::one(),
            _ => S::zero(),
        };
        if coefficient.is_zero() {
            continue;
        }
        let factors: Vec<(usize, usize)> = (0..n)
            .map(|party| (party, ((mask >> party) & 1) as usize))
            .collect();
        p.add_term(Monomial::product_of(n, &factors)?, coefficient);
    }
    Ok(p)
}

impl fmt::Display for StandardExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mermin => write!(f, "mermin"),
            Self::MerminPrime => write!(f, "mermin_prime"),
            Self::Svetlichny => write!(f, "svetlichny"),
            Self::Chsh => write!(f, "chsh"),
            Self::MerminN(n) => write!(f, "mermin_n({n})"),
        }
    }
}

impl FromStr for StandardExpression {
    type Err = Error;

    /// Accepts `mermin`, `mermin_prime`, `svetlichny`, `chsh` and
    /// `mermin_n(N)` (also `mermin_n:N`).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "mermin" | "m" => return Ok(Self::Mermin),
            "mermin_prime" | "mermin'" | "m'" => return Ok(Self::MerminPrime),
            "svetlichny" | "m+" => return Ok(Self::Svetlichny),
            "chsh" => return Ok(Self::Chsh),
            _ => {}
        }
        let arg = t
            .strip_prefix("mermin_n")
            .map(|rest| rest.trim_start_matches([':', '(']).trim_end_matches(')'));
        match arg.and_then(|a| a.parse::<usize>().ok()) {
            Some(n) => Ok(Self::MerminN(n)),
            None => Err(Error::UnknownExpression(s.to_string())),
        }
    }
}

/// Builds a standard expression by name with double coefficients.
pub fn standard_expression(name: &str) -> Result<Polynomial<f64>> {
    name.parse::<StandardExpression>()?.build()
}

/// Value of an expression on a behavior, reading every monomial as a
/// correlator (the expectation of the product of outcomes).
pub fn evaluate_on_behavior(expr: &Polynomial<f64>, behavior: &Behavior) -> Result<f64> {
    if expr.n_parties() != behavior.n_parties() {
        return Err(Error::PartyCountMismatch {
            left: expr.n_parties(),
            right: behavior.n_parties(),
        });
    }
    let mut total = Vec::with_capacity(expr.len());
    for (m, c) in expr.terms() {
        let settings = m
            .correlator_settings()
            .ok_or_else(|| Error::NotACorrelator(m.to_string()))?;
        total.push(c * behavior.correlator(&settings)?);
    }
    Ok(f64::sum_all(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::monomial::parse_monomial;

    fn coeff(p: &Polynomial<f64>, m: &str) -> f64 {
        p.coefficient(&parse_monomial(m, p.n_parties()).unwrap())
    }

    #[test]
    fn mermin_coefficients() {
        let m = standard_expression("mermin").unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(coeff(&m, "A1B1C1"), 1.0);
        assert_eq!(coeff(&m, "A1B2C2"), -1.0);
        assert_eq!(coeff(&m, "A2B1C2"), -1.0);
        assert_eq!(coeff(&m, "A2B2C1"), -1.0);
    }

    #[test]
    fn mermin_prime_coefficients() {
        let m = standard_expression("mermin_prime").unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(coeff(&m, "A2B2C2"), -1.0);
        assert_eq!(coeff(&m, "A1B1C2"), 1.0);
        assert_eq!(coeff(&m, "A1B2C1"), 1.0);
        assert_eq!(coeff(&m, "A2B1C1"), 1.0);
    }

    #[test]
    fn n_party_generalisation() {
        let m3 = standard_expression("mermin_n(3)").unwrap();
        assert_eq!(m3, standard_expression("mermin").unwrap());
        for n in 2..=6 {
            let m = StandardExpression::MerminN(n).build::<f64>().unwrap();
            assert_eq!(m.len(), 1 << (n - 1));
            assert!(m.terms().values().all(|c| c.abs() == 1.0));
        }
    }

    #[test]
    fn svetlichny_is_sum() {
        let s = standard_expression("svetlichny").unwrap();
        let sum = &standard_expression("mermin").unwrap() + &standard_expression("mermin_prime").unwrap();
        assert_eq!(s, sum);
        assert_eq!(s.len(), 8);
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(standard_expression("bogus"), Err(Error::UnknownExpression(_))));
        assert!(standard_expression("mermin_n(1)").is_err());
    }
}
