use thiserror::Error;

/// Errors produced by the design, sampling, analysis and optimization layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A value fell outside the domain it was validated against.
    #[error("bounds error: {0}")]
    Bounds(String),

    /// A configuration did not match the search space (missing or unknown factor).
    #[error("schema error: {0}")]
    Schema(String),

    /// An operation was applied in a state that forbids it (e.g. freezing twice).
    #[error("state error: {0}")]
    State(String),

    /// A design could not be built with the requested parameters.
    #[error("construction error: {message}")]
    Construction {
        message: String,
        /// Smallest level count that would satisfy the request, when one exists.
        min_feasible_levels: Option<u32>,
    },

    /// Invalid user-supplied configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Factorial analysis could not be carried out on the table.
    #[error("analysis error: {0}")]
    Analysis(String),

    /// Correlation is undefined for the requested columns.
    #[error("correlation error: {0}")]
    Correlation(String),

    /// No configuration could be selected at the end of a study.
    #[error("selection error: {0}")]
    Selection(String),

    /// Too many trials of a batch failed for the iteration to be analyzed.
    #[error("iteration {iteration} aborted: {failed} of {total} trials failed or timed out")]
    BatchAborted {
        iteration: usize,
        failed: usize,
        total: usize,
    },
}

impl Error {
    pub(crate) fn construction(message: impl Into<String>) -> Self {
        Error::Construction {
            message: message.into(),
            min_feasible_levels: None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
