//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value outside its legal range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A structurally invalid partition edit (bad indices, non-disjoint
    /// sides, merging a cluster with itself, ...).
    #[error("partition edit rejected: {0}")]
    InvalidEdit(String),

    /// Moving an item onto the cluster it already belongs to. Flagged
    /// separately because samplers treat it as "skip", not as a failure.
    #[error("no-op move: item {item} is already in cluster {cluster}")]
    NoOpMove { item: usize, cluster: usize },

    /// Numerically degenerate data for the requested likelihood model.
    /// Carries the offending quantity so callers can report it.
    #[error("degenerate data under model {model}: {quantity} = {value:.3e} violates {rule}")]
    DegenerateData {
        model: &'static str,
        quantity: &'static str,
        value: f64,
        rule: &'static str,
    },

    /// A structural model precondition, e.g. the sample-size floor of the
    /// full-covariance model.
    #[error("model precondition violated: {0}")]
    ModelPrecondition(String),

    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// A cell of an input file that failed to parse. Row and column are
    /// 1-based and refer to the file, not the parsed matrix.
    #[error("{path}:{row}:{col}: {message}")]
    CsvParse {
        path: String,
        row: usize,
        col: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
