use thiserror::Error;

/// Failure classes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// A series or quadrature did not reach the requested tolerance.
    #[error("{func} did not converge: achieved relative error {achieved:.3e}, requested {requested:.3e}")]
    Convergence {
        func: &'static str,
        achieved: f64,
        requested: f64,
    },

    /// A configuration value violates its type invariant.
    #[error("invalid parameter `{field}`: {detail}")]
    InvalidParameter { field: &'static str, detail: String },

    /// An index was outside the valid range.
    #[error("index {index} out of range (valid: {valid})")]
    OutOfRange { index: usize, valid: String },

    /// Grids of two operands do not coincide.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A momentum tail is not integrable or its bound is too large.
    #[error("tail bound failure: {0}")]
    TailBound(String),

    /// A grid is too coarse for the oscillations it has to resolve.
    #[error("insufficient resolution: {0}")]
    Resolution(String),

    /// The per-step nonlinear solve failed while |q| was not growing.
    #[error("stiffness failure at t = {t:.6e}: {detail}")]
    Stiffness { t: f64, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, detail: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        detail: detail.into(),
    }
}

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        func,
        detail: detail.into(),
    }
}
