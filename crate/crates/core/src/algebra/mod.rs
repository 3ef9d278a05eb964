//! Noncommutative algebra of party-local dichotomic observables.
//!
//! Generators `X_s^(p)` are Hermitian involutions; generators of different
//! parties commute. Words in this algebra are kept in a canonical form
//! ([`Monomial`]) and linear combinations of words ([`Polynomial`]) carry
//! Bell expressions, target operators and sum-of-squares certificates.

mod expressions;
mod level;
mod monomial;
mod polynomial;

pub use expressions::{evaluate_on_behavior, standard_expression, StandardExpression};
pub use level::{parse_level_spec, LevelSpec, Pattern};
pub use monomial::{parse_monomial, Monomial, PartyObservable, PARTY_LETTERS};
pub use polynomial::Polynomial;

use crate::error::Result;

/// Bell expression with real coefficients.
pub type BellExpression = Polynomial<f64>;

pub fn canonicalize(word: &[PartyObservable], n_parties: usize) -> Result<Monomial> {
    Monomial::canonicalize(word, n_parties)
}

pub fn multiply(m1: &Monomial, m2: &Monomial) -> Result<Monomial> {
    m1.multiply(m2)
}

pub fn enumerate_monomials(level: &LevelSpec, n_parties: usize, n_settings: usize) -> Result<Vec<Monomial>> {
    level.enumerate_monomials(n_parties, n_settings)
}
