use thiserror::Error;

/// Failure modes shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error(
        "window too short for {context}: needs [{needed_start:.6}, {needed_end:.6}], \
         have [{have_start:.6}, {have_end:.6}]"
    )]
    WindowTooShort {
        context: &'static str,
        needed_start: f64,
        needed_end: f64,
        have_start: f64,
        have_end: f64,
    },

    #[error("grid misaligned in {context}: {detail}")]
    GridMisaligned { context: &'static str, detail: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// The backward convolution kernel grows instead of decaying; the
    /// truncated improper integral carries no meaning in that regime.
    #[error(
        "non-convergent kernel: rate {rate} over truncation window {t_trunc} \
         amplifies by more than 1e8"
    )]
    NonConvergentKernel { rate: f64, t_trunc: f64 },

    #[error(
        "declared Lipschitz constant {declared} violated by {function}: \
         sampled difference quotient {measured}"
    )]
    LipschitzViolation {
        function: &'static str,
        declared: f64,
        measured: f64,
    },

    #[error("no convergence after {iterations} iterations (last residual {last:e})", last = .residuals.last().copied().unwrap_or(f64::NAN))]
    NoConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("non-finite value in {context} at step {step}")]
    NonFinite { context: &'static str, step: usize },

    #[error("collocation matrix asymmetric: max |A - A^T| = {max_asymmetry:e}")]
    AsymmetricMatrix { max_asymmetry: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        message: message.into(),
    }
}
