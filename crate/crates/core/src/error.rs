use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("layout {layout:?} does not factor dimension {dim}")]
    LayoutMismatch { layout: Vec<usize>, dim: usize },
    #[error("total ambient dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
    #[error("signature mismatch for `{symbol}`: expected {expected:?}, found {found:?}")]
    SignatureMismatch {
        symbol: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("`{0}` is not unitary")]
    NotUnitary(String),
    #[error("measurement `{0}` is not projective: {1}")]
    NotProjective(String, String),
    #[error("inverse binding `{inverse}` does not invert `{of}`")]
    BadInverse { inverse: String, of: String },
    #[error("variable `{0}` occurs more than once in a variable list")]
    RepeatedVariable(String),
    #[error("tensor factors share variables {0:?}")]
    TensorOverlap(Vec<String>),
    #[error("probabilistic combination: {0}")]
    BadProbSum(String),
    #[error("term `{0}` is not a unitary term")]
    NotUnitaryTerm(String),
    #[error("satisfaction is undefined for the zero state")]
    ZeroState,
    #[error("state has trace {0}, expected 1")]
    Subnormalized(f64),
    #[error("no allowed operations apply to variables {0:?}")]
    EmptyAllowedSet(Vec<String>),
    #[error("renaming: {0}")]
    Rename(String),
    #[error("ill-formed program: {0}")]
    Program(String),
    #[error("{0}")]
    Other(String),
}
