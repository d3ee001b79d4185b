use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {what} (value {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("series did not converge after {terms} terms (partial sum {partial})")]
    Convergence { partial: f64, terms: usize },

    #[error("degree {n} exceeds the factorial table cap {cap}")]
    HermiteCap { n: u32, cap: u32 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("stencil leaves the domain along axis {axis} at {point:?}")]
    Stencil { point: Vec<f64>, axis: usize },

    #[error("non-finite value at {point:?}, t = {t}")]
    NonFinite { point: Vec<f64>, t: f64 },

    #[error("operator coefficient vanishes on the integration path near {at}")]
    SingularPath { at: f64 },

    #[error("unsupported check: {0}")]
    UnsupportedCheck(String),

    #[error("logarithm argument {value} too close to zero or negative at {point:?}, t = {t}")]
    LogDomain { point: Vec<f64>, t: f64, value: f64 },

    #[error("quadrature tolerance {requested} not met (estimate {estimate})")]
    Accuracy { estimate: f64, requested: f64 },

    #[error("metric degenerate at {point:?}")]
    SingularMetric { point: Vec<f64> },

    #[error("expected {expected} coefficients, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("coefficient pole at t = {at}")]
    Pole { at: f64 },

    #[error("integration blew up at t = {t}")]
    BlowUp { t: f64 },

    #[error("unsupported constraint: {0}")]
    UnsupportedConstraint(String),

    #[error("{excluded} of {total} grid points excluded (limit 5%)")]
    Exclusions { excluded: usize, total: usize },

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
}
