use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GsmError {
    /// An argument fell outside the domain of the function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// Input data cannot support the requested fit.
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// A Markov chain step produced an invalid value.
    #[error("sampler failure at iteration {iteration}: {source}")]
    Chain {
        iteration: usize,
        #[source]
        source: Box<GsmError>,
    },

    /// EM could not produce a valid fit for the given number of components.
    #[error("normal mixture EM failed for K = {k} after {restarts} restarts")]
    EmFailure { k: usize, restarts: usize },

    /// Invalid configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Too many replicates were excluded from a result cell.
    #[error("method {method} excluded {excluded} of {total} replicates (limit 5%)")]
    TooManyExclusions {
        method: String,
        excluded: usize,
        total: usize,
    },
}

pub type Result<T> = std::result::Result<T, GsmError>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> GsmError {
    GsmError::Domain {
        func,
        detail: detail.into(),
    }
}
