use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("party index {party} out of range for {n_parties} parties")]
    PartyOutOfRange { party: usize, n_parties: usize },

    #[error("setting index {setting} out of range for {n_settings} settings")]
    SettingOutOfRange { setting: usize, n_settings: usize },

    #[error("party count mismatch: {left} vs {right}")]
    PartyCountMismatch { left: usize, right: usize },

    #[error("party count {0} exceeds the supported maximum of {max}", max = crate::MAX_PARTIES)]
    TooManyParties(usize),

    #[error("unknown expression name `{0}`")]
    UnknownExpression(String),

    #[error("invalid level specification `{text}`: {reason}")]
    InvalidLevel { text: String, reason: String },

    #[error("invalid monomial `{0}`")]
    InvalidMonomial(String),

    #[error("monomial {0} has within-party degree above one and has no correlator value")]
    NotACorrelator(String),

    #[error("{name} = {value} lies outside the domain {domain}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        domain: String,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("conditioning on an event of probability zero")]
    ZeroProbability,

    #[error("decomposition does not reproduce the marginal (max deviation {0:e})")]
    MarginalMismatch(f64),

    #[error("monomial {0} is not representable at this level")]
    MissingMonomial(String),

    #[error("constraint values are infeasible: {0}")]
    Infeasible(String),

    #[error("solver stopped without reaching tolerance: {0}")]
    Solver(String),

    #[error("negative radicand {0:e} while building a certificate")]
    NegativeRadicand(f64),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
