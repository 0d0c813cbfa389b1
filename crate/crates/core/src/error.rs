use thiserror::Error;

/// Errors raised by the channel toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid sampling grid: {0}")]
    InvalidGrid(String),

    #[error("grid too coarse: {points_per_time_constant:.2} points per 1/a, need at least {required}")]
    GridTooCoarse { points_per_time_constant: f64, required: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("Riccati integration unstable: Richardson disagreement {disagreement:.3e} exceeds {tolerance:.1e}")]
    RiccatiUnstable { disagreement: f64, tolerance: f64 },

    #[error("Cholesky factorization failed for {context} (dimension {dimension}) after diagonal jitter")]
    Factorization { context: &'static str, dimension: usize },

    #[error("unbounded region: coordinate {0} has no limiting half-space")]
    UnboundedRegion(usize),

    #[error("codebook size {size} exceeds the configured maximum {max}")]
    CodebookTooLarge { size: u64, max: u64 },

    #[error("expurgation left no codeword: all {0} codewords violate the power budget")]
    EmptyCodebook(usize),
}

impl Error {
    /// Failures of the numerics on a well-formed request, as opposed to a
    /// rejected request.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::RiccatiUnstable { .. } | Error::Factorization { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
