use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("matrix order {n} exceeds the limit of {max} for {what}")]
    TooLarge { what: &'static str, n: usize, max: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: index {index} is outside 1..={n}")]
    IndexOutOfRange { line: usize, index: usize, n: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("unknown dataset {0:?} (expected C60 or C100)")]
    UnknownDataset(String),

    #[error("coefficient rounding residual {residual:e} exceeds tolerance {tolerance:e}")]
    PrecisionLoss { residual: f64, tolerance: f64 },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("correlation is undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("job {0} has no estimate")]
    MissingEstimate(usize),

    #[error("job {job}: {msg}")]
    JobFailed { job: usize, msg: String },

    #[error("invalid input: {0}")]
    Invalid(String),
}
