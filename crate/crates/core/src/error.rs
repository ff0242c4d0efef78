use thiserror::Error;

/// Errors produced anywhere in the estimation and simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,

    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteValue { row: usize, column: usize },

    #[error("dimension mismatch at row {row}: expected {expected}, found {found}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("too few points: have {n}, need at least {required}")]
    TooFewPoints { n: usize, required: usize },

    #[error("right nearest neighbors require univariate covariates, got d = {d}")]
    NotUnivariate { d: usize },

    #[error("tied covariate value {value} (rows {first} and {second})")]
    DuplicateX {
        value: f64,
        first: usize,
        second: usize,
    },

    #[error("neighbor table does not match sample: {0}")]
    TableMismatch(String),

    #[error("argument out of domain: {0}")]
    OutOfDomain(String),

    #[error("variance estimate {0} is negative; clamp it before inference")]
    NegativeVariance(f64),

    #[error("kappa must be < 1, got {0}")]
    InvalidKappa(f64),

    #[error("invalid model parameter: {0}")]
    InvalidModelParam(String),

    #[error("model cannot evaluate the conditional survival function")]
    ModelLacksConditional,

    #[error("model is degenerate (Y is a function of X): {0}")]
    DegenerateModel(String),

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("need at least {required} values, got {n}")]
    TooFewValues { n: usize, required: usize },

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
