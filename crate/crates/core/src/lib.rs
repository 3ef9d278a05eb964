//! Device-independent randomness bounds for the tripartite Mermin scenario.

pub mod algebra;
pub mod behavior;
pub mod bounds;
pub mod conic;
pub mod error;
pub mod nosignalling;
pub mod npa;
pub mod quantum;
pub mod scalar;
pub mod sos;

pub use error::{Error, Result};

/// Largest supported party count.
pub const MAX_PARTIES: usize = 8;

/// Operator polynomial with exact coefficients in `Q(sqrt 2)`.
pub type ExactPolynomial = algebra::Polynomial<scalar::QuadSurd>;
/// Sum-of-squares certificate checked in exact arithmetic.
pub type ExactCertificate = sos::SosCertificate<scalar::QuadSurd>;
/// Operator polynomial with rational coefficients.
pub type RationalPolynomial = algebra::Polynomial<num_rational::Rational64>;
/// Closed-form bound evaluated in double precision.
pub type Bound = bounds::BoundValue<f64>;
/// Qubit strategy simulated in double precision.
pub type Strategy = quantum::QuantumStrategy<f64>;
