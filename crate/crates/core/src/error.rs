use thiserror::Error;

/// Failures raised by the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("momentum must be non-negative, got {0}")]
    NegativeMomentum(f64),

    #[error("grid is malformed: {0}")]
    MalformedGrid(String),

    #[error("quadrature sum for the bound-state condition is non-positive ({0})")]
    NonPositiveCoupling(f64),

    #[error("symmetric eigen-solver did not converge for a {0}x{0} matrix")]
    EigenNonConvergence(usize),

    #[error("mass-squared eigenvalue {0} is not positive (tachyonic discretization)")]
    Tachyonic(f64),

    #[error("z = {re} + {im}i lies on the cut [{threshold}, inf) and no limit was requested")]
    OnCut { re: f64, im: f64, threshold: f64 },

    #[error("|1 + lambda h(z)| = {0:e} is numerically zero (bound-state pole)")]
    NearPole(f64),

    #[error("argument {value} outside the series domain [0, 1]")]
    OutOfDomain { value: f64 },

    #[error("non-finite vector at Chebyshev step {step}: spectrum of the operator is outside [0, 1]")]
    RecurrenceBlowUp { step: usize },

    #[error("|<f|S|f>| = {value} exceeds the norm bound {bound}: polynomial degree too low")]
    UnitarityViolation { value: f64, bound: f64 },

    #[error("packet (k0 = {k0}, alpha = {alpha}) is under-resolved: {nodes} nodes within 3 widths, need {required}")]
    UnderResolvedPacket { k0: f64, alpha: f64, nodes: usize, required: usize },

    #[error("packet (k0 = {k0}, alpha = {alpha}) leaks below threshold: k0*sqrt(alpha) = {product} < 7")]
    ThresholdLeakage { k0: f64, alpha: f64, product: f64 },

    #[error("packets live on different grids")]
    GridMismatch,

    #[error("delta overlap {0:e} too small for extraction")]
    VanishingDeltaOverlap(f64),

    #[error("width tuning failed: {0}")]
    TuningFailed(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("test function violates positive-time support: tau_c = {tau_c}, sigma_tau = {sigma_tau}")]
    NotPositiveTime { tau_c: f64, sigma_tau: f64 },

    #[error("matrix is not orthogonal: |O^T O - 1| = {0:e}")]
    NotOrthogonal(f64),

    #[error("no root of the bound-state condition below threshold")]
    NoBoundState,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
