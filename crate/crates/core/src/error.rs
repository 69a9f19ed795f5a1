use thiserror::Error;

/// Errors raised across the crate.
///
/// Verification outcomes are reported through dedicated report types; an
/// `Error` means an operation could not produce a result at all.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("refusing {what}: needs {needed}, limit is {limit}")]
    Feasibility {
        what: String,
        needed: String,
        limit: String,
    },
    #[error("subdivision not compatible: {0}")]
    NotCompatible(String),
    #[error("gluing failed: {0}")]
    Glue(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("unsupported point store: {0}")]
    UnsupportedStore(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("not tabulated: {0}")]
    NotTabulated(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("unsupported artifact version {found} (this build reads version {expected})")]
    UnsupportedVersion { found: u64, expected: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
