use thiserror::Error;

/// Errors produced by the model, scheme and experiment routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("marginal law at t = 0 is a point mass at x0")]
    DegenerateTime,

    #[error("invalid time {0}: must be finite and nonnegative")]
    InvalidTime(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("truncation level C = {level} must exceed max(b, 1) = {required}")]
    TruncationTooLow { level: f64, required: f64 },

    #[error(
        "quadrature did not reach tolerance on [{lower}, {upper}] (error estimate {estimate:e})"
    )]
    QuadratureFailure {
        lower: f64,
        upper: f64,
        estimate: f64,
    },

    #[error("scale function domain: x = {0} is too close to zero")]
    DomainTooSmall(f64),

    #[error("ordering violated: need 0 < alpha ({alpha}) < x0 ({x0}) < beta ({beta})")]
    OrderingViolation { alpha: f64, x0: f64, beta: f64 },

    #[error("Feller condition 2b >= sigma^2 fails (2b = {two_b}, sigma^2 = {sigma_sq})")]
    FellerViolated { two_b: f64, sigma_sq: f64 },

    #[error(
        "positivity not guaranteed: need 2b >= sigma^2 and n > 2T (discriminant {discriminant})"
    )]
    PositivityNotGuaranteed { discriminant: f64 },

    #[error("negative state {value} reached before step {step}")]
    NegativeStateEncountered { step: usize, value: f64 },

    #[error("noise value {value} at index {index} is not +/- sqrt(T/n)")]
    InvalidNoise { index: usize, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time {t} outside [0, {horizon}]")]
    OutOfDomain { t: f64, horizon: f64 },

    #[error("factor 1 + Q_{step} = {factor} is not positive")]
    NonPositiveFactor { step: usize, factor: f64 },

    #[error("noncentral chi-square series did not converge (df = {df}, noncentrality = {noncentrality})")]
    SeriesNotConverged { df: f64, noncentrality: f64 },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("i/o failure: {0}")]
    IoFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
