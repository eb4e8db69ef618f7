use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("substitution would capture variable {0}")]
    Capture(String),

    #[error("literal is not ground: {0}")]
    NonGround(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("unsafe constraint: {0}")]
    UnsafeConstraint(String),

    #[error("resource limit exceeded: {what} (limit {limit})")]
    ResourceExceeded { what: &'static str, limit: usize },

    #[error("branch is not data-closed")]
    NotDataClosed,

    #[error("change universe too large: {0} atoms (limit 22)")]
    UniverseTooLarge(usize),

    #[error("tableaux do not share an instance and constant pool")]
    PoolMismatch,

    #[error("{path}: {msg}")]
    Io { path: String, msg: String },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, col, msg: msg.into() }
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Error::ResourceExceeded { .. } | Error::UniverseTooLarge(_))
    }
}
