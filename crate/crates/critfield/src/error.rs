//! Crate-wide error type.

/// Errors produced by the analysis chain.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model validity condition failed and was not waived. The message
    /// names the violated condition and its numeric margin.
    #[error("validity violated: {0}")]
    Validity(String),

    /// A deviation-ratio model is malformed or evaluates outside its
    /// admissible range.
    #[error("signal model: {0}")]
    Signal(String),

    /// The requested field exceeds the zero-temperature critical field, so
    /// no transition exists on the temperature axis.
    #[error("no transition: {0}")]
    NoTransition(String),

    /// Transition extraction failed (no crossing, indistinguishable
    /// plateaus, degenerate input).
    #[error("transition extraction: {0}")]
    Extraction(String),

    /// Least-squares machinery failed outright (as opposed to a
    /// non-converged fit, which is returned flagged).
    #[error("fit: {0}")]
    Fit(String),

    /// The Gauss-Newton normal matrix is singular; the parameterization is
    /// degenerate for the given data.
    #[error("singular normal matrix")]
    SingularNormalMatrix,

    /// Configuration file or parameter-set problem.
    #[error("config: {0}")]
    Config(String),

    /// Failure parsing an input data file.
    #[error("parse: {0}")]
    Parse(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
