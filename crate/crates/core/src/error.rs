use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Wishart score needs n >= T + 2 (n = {n}, T = {t})")]
    DegreesOfFreedom { n: usize, t: usize },

    #[error("zero denominator: {0}")]
    ZeroDenominator(&'static str),

    #[error("objective returned a non-finite value at {at}")]
    NonFinite { at: f64 },

    #[error("optimizer did not converge within {evaluations} evaluations")]
    NotConverged { evaluations: usize },

    #[error("singular information: |K| = {k:e}")]
    SingularInformation { k: f64 },

    #[error("estimator {0} requires a known innovation variance")]
    MissingSigma2(&'static str),

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("grid point {lambda}: {failures} of {replicates} replicates failed")]
    ExperimentFailed {
        lambda: f64,
        failures: usize,
        replicates: usize,
    },
}
