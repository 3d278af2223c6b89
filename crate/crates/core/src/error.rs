use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An evolution matrix violates `det = 1` beyond the accepted tolerance.
    #[error("matrix is not symplectic: det = {det:.17e}")]
    NotSymplectic { det: f64 },

    /// A parameter lies outside the domain where the requested quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A Bessel function could not be evaluated to the required accuracy.
    #[error("Bessel evaluation failed for order {order} at argument {arg}: {reason}")]
    Bessel { order: f64, arg: f64, reason: &'static str },

    /// The adaptive integrator ran out of steps.
    #[error("integrator exhausted {max_steps} steps at t = {t}")]
    StepLimit { max_steps: usize, t: f64 },

    /// The adaptive step size collapsed below floating-point resolution.
    #[error("integrator step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    /// The truncated oscillator basis is too small for the requested matrix elements.
    #[error("basis cutoff {cutoff} too small: need at least {required}")]
    Cutoff { cutoff: usize, required: usize },

    /// A quadrature did not reach its error target.
    #[error("quadrature did not converge: estimated relative error {estimate:.3e}")]
    Quadrature { estimate: f64 },

    /// A cavity mode is not in the adiabatic regime.
    #[error("adiabaticity violated for mode |n| = {mode}: Omega = {omega:.3e}")]
    NotAdiabatic { mode: usize, omega: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
