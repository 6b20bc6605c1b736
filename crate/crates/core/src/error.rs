use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("hyperplane normal is zero")]
    DegenerateHyperplane,

    /// Every vertex of the polytope lies on the splitting hyperplane.
    #[error("polytope lies entirely on the splitting hyperplane")]
    DegenerateSplit,

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid face lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid property: {0}")]
    InvalidProperty(String),

    #[error("unknown built-in property `{0}`")]
    UnknownProperty(String),

    #[error("region count exceeded the cap of {cap}")]
    RegionCapExceeded { cap: usize },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// NNet parse failures. Line numbers are 1-based.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },

    #[error("line {line}: expected {expected} values, found {found}")]
    SizeMismatch { line: usize, expected: usize, found: usize },

    #[error("line {line}: non-numeric token `{token}`")]
    NonNumeric { line: usize, token: String },

    #[error("line {line}: unexpected end of input while reading {what}")]
    UnexpectedEof { line: usize, what: String },
}
