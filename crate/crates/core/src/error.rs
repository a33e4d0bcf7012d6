use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid resolution {0}: must be a positive even integer")]
    InvalidResolution(i64),
    #[error("invalid band limit {0}")]
    InvalidBandLimit(i64),
    #[error("band limit mismatch: expected {expected}, found {found}")]
    BandLimitMismatch { expected: usize, found: usize },
    #[error("spin {spin} unsupported at band limit {band_limit}")]
    UnsupportedSpin { spin: i32, band_limit: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("running statistics are uninitialized; run in train mode first")]
    UninitializedStatistics,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown element '{symbol}'")]
    UnknownElement { line: usize, symbol: String },
    #[error("atomic number {0} is not in the type vocabulary")]
    UnknownAtomType(u32),
    #[error("atoms {0} and {1} are coincident")]
    CoincidentAtoms(usize, usize),
    #[error("malformed container: {0}")]
    Container(String),
    #[error("convention mismatch: {0}")]
    Convention(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
