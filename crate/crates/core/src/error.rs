use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KpzError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("q-exponential pole proximity at factor k={k} (|1 - z tau^k| = {distance:e})")]
    PoleProximity { k: usize, distance: f64 },
    #[error("kernel does not decay on the truncated domain: |K(s+L,s+L)| = {value:e} at L = {length}")]
    TruncationCheck { value: f64, length: f64 },
    #[error("determinant overflow or breakdown: {0}")]
    DeterminantFailure(String),
    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),
    #[error("boundary cone violation: {0}")]
    BoundaryCone(String),
    #[error("boundary mass breach: {boundary:e} of total {total:e}")]
    BoundaryMass { boundary: f64, total: f64 },
    #[error("stability violation: dt = {dt:e} exceeds dx^2/2 = {limit:e}")]
    Stability { dt: f64, limit: f64 },
    #[error("ill-conditioned deconvolution (regularization {regularization:e}, residual {residual:e})")]
    IllConditioned { regularization: f64, residual: f64 },
    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),
    #[error("range mismatch: {0}")]
    RangeMismatch(String),
    #[error("contour constraint violated: {0}")]
    ContourConstraint(String),
    #[error("imaginary residual {0:e} exceeds tolerance")]
    ImaginaryResidual(f64),
}

pub type Result<T> = std::result::Result<T, KpzError>;

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(KpzError::InvalidArgument(msg()))
    }
}

#[allow(dead_code)]
pub(crate) fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(KpzError::NonFinite(format!("{what} = {x}")))
    }
}
