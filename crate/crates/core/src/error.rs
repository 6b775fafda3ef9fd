use thiserror::Error;

/// Errors raised by the library. Variants map onto the CLI exit codes:
/// numeric failures exit with 3, everything else with 2.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the admissible set of its family.
    #[error("domain error: {0}")]
    Domain(String),
    /// An input violates the validity region of a closed-form identity.
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The kernel does not define a non-degenerate moving average.
    #[error("model error: {0}")]
    Model(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// The requested configuration does not identify the parameters.
    #[error("not identifiable: {0}")]
    NotIdentifiable(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
