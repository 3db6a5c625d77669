use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// A missing phase lock is not an error; solvers report it as `None`.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("step size fell below the rejection floor at t = {t} (dt = {dt:e})")]
    StepRejection { t: f64, dt: f64 },
    #[error("correlation left the unit ball at t = {t}: |z| = {modulus}")]
    BallViolation { t: f64, modulus: f64 },
    #[error("sensitivity denominator {denominator:e} is too close to zero (kappa near critical)")]
    NearCritical { denominator: f64 },
    #[error("bracket failure: {0}")]
    BracketFailure(String),
    #[error("eigensolver failed to converge for a {0}x{0} matrix")]
    Eigensolver(usize),
    #[error("mass drift {drift:e} exceeds the abort threshold; reduce dt")]
    MassDrift { drift: f64 },
    #[error("Duhamel integrand not converged: tail norm {tail:e}")]
    TailNotConverged { tail: f64 },
    #[error("correspondence residual check failed for both signs (best {residual:e})")]
    Correspondence { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
