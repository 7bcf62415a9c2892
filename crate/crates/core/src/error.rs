use thiserror::Error;

/// Errors raised by the numerical kernels, the channel model and the rate-control solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("{func}: argument outside domain ({detail})")]
    Domain { func: &'static str, detail: String },

    /// The result is not representable as a finite `f64`.
    #[error("{func}: result out of range ({detail})")]
    Range { func: &'static str, detail: String },

    /// A physical or configuration parameter violates its invariant.
    #[error("invalid parameter `{field}`: {detail}")]
    InvalidParam { field: &'static str, detail: String },

    /// The requested closed form does not exist for this configuration.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// The reliability target cannot be met, or an approximation leaves its validity region.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An iterative method (root finder, quadrature) failed to reach its tolerance.
    #[error("{what} did not converge: {detail}")]
    Convergence { what: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn range(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Range {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn param(field: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            detail: detail.into(),
        }
    }

    pub(crate) fn convergence(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Convergence {
            what,
            detail: detail.into(),
        }
    }
}
