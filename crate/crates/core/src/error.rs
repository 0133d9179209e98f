use alloc::string::String;
use core::fmt;

/// Errors raised by the algebra, coding and PIR layers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    CompositeModulus(u64),
    ModulusOutOfRange(u64),
    DivisionByZero,
    DuplicatePoints,
    ZeroPoint,
    SingularMatrix,
    DimensionMismatch { expected: usize, found: usize },
    DimTooLarge { dim: usize, max: usize },
    LengthMismatch { expected: usize, found: usize },
    SizeMismatch { expected: usize, found: usize },
    NotInformationSet,
    InvalidGeometry(String),
    FieldTooSmall(String),
    InvariantViolation(String),
    NotEnoughShares { needed: usize, got: usize },
    BadSubset,
    NotEnoughHelpers { needed: usize, got: usize },
    HelperOverlap(usize),
    BadFileIndex { index: usize, files: usize },
    MissingResponses { column: usize, query: usize, server: usize },
    DecodeFailure(String),
    ConstraintViolated(String),
    NoNestedSets,
    PlanInfeasible(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::CompositeModulus(p) => write!(f, "modulus {p} is not prime"),
            Error::ModulusOutOfRange(p) => {
                write!(f, "modulus {p} outside the supported range [2, 2^31 - 1]")
            }
            Error::DivisionByZero => write!(f, "division by zero"),
            Error::DuplicatePoints => write!(f, "evaluation points are not pairwise distinct"),
            Error::ZeroPoint => write!(f, "evaluation point equal to zero"),
            Error::SingularMatrix => write!(f, "matrix is singular"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::DimTooLarge { dim, max } => {
                write!(f, "dimension {dim} exceeds the code length {max}")
            }
            Error::LengthMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            Error::SizeMismatch { expected, found } => {
                write!(f, "index set size mismatch: expected {expected} distinct indices, found {found}")
            }
            Error::NotInformationSet => write!(f, "index set is not an information set"),
            Error::InvalidGeometry(msg) => write!(f, "invalid geometry: {msg}"),
            Error::FieldTooSmall(msg) => write!(f, "field too small: {msg}"),
            Error::InvariantViolation(msg) => write!(f, "message array invariant violated: {msg}"),
            Error::NotEnoughShares { needed, got } => {
                write!(f, "need {needed} shares, got {got}")
            }
            Error::BadSubset => write!(f, "server subset contains duplicate or out-of-range ids"),
            Error::NotEnoughHelpers { needed, got } => {
                write!(f, "need {needed} helpers, got {got}")
            }
            Error::HelperOverlap(i) => write!(f, "failed node {i} listed among its helpers"),
            Error::BadFileIndex { index, files } => {
                write!(f, "file index {index} out of range for {files} files")
            }
            Error::MissingResponses { column, query, server } => write!(
                f,
                "missing response for column {column}, query {query}, server {server}"
            ),
            Error::DecodeFailure(msg) => write!(f, "decode failure: {msg}"),
            Error::ConstraintViolated(msg) => write!(f, "constraint violated: {msg}"),
            Error::NoNestedSets => write!(f, "no nested information sets exist for these points"),
            Error::PlanInfeasible(msg) => write!(f, "retrieval plan infeasible: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
