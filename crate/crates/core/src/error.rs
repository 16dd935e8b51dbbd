use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown lattice `{0}`")]
    UnknownLattice(String),
    #[error("lattice `{name}` is not defined in dimension {n}")]
    IncompatibleDimension { name: String, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("generator matrix is singular")]
    SingularGenerator,
    #[error("lattice `{0}` has no covering radius")]
    MissingCoveringRadius(String),
    #[error("invalid lattice config: {0}")]
    LatticeConfig(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no acceptance within {0} iterations")]
    MaxIterations(u64),
    #[error("malformed Golomb codeword")]
    MalformedCodeword,
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated input")]
    Truncated,
    #[error("corrupt stream: {0}")]
    Corrupt(String),
    #[error("coordinate {value} exceeds bound {bound}")]
    CoordinateOutOfBound { value: i64, bound: u32 },
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("registry: {0}")]
    Registry(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
