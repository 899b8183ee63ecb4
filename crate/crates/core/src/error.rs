use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error category, used by the CLI to pick its exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Model,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("gap of {levels} levels exceeds the level cap {cap}")]
    GapOverflow { levels: u64, cap: u64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("tree would exceed the node cap of {cap}")]
    CapExceeded { cap: u64 },

    #[error("every tree went extinct within {retries} retries")]
    ExtinctionPersistent { retries: u32 },

    #[error("mean offspring {mean} <= 1: process is not supercritical")]
    SubcriticalOrCritical { mean: f64 },

    #[error("no admissible (R, r) scale pair in the requested range")]
    NoAdmissiblePair,

    #[error("every admissible subtree is extinct")]
    AllExtinct,

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("scale lies beyond the sampled coding (length {length})")]
    OutOfDepth { length: usize },

    #[error("duplicate cell ({0}, {1}) in carpet template")]
    DuplicateCell(u32, u32),

    #[error("cell ({a}, {b}) outside the {m}x{n} grid")]
    OutOfGrid { a: u32, b: u32, m: u32, n: u32 },

    #[error("phi(R) = {phi} exceeds the affinity band limit {limit}")]
    PhiExceedsAffinityBand { phi: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse(_) | Error::Config(_) | Error::Json(_) => ErrorKind::Config,
            Error::Io(_) | Error::Csv(_) => ErrorKind::Io,
            _ => ErrorKind::Model,
        }
    }
}
