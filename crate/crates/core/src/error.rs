use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid Kraus set: {0}")]
    InvalidKraus(String),

    #[error("{condition} violated: residual {residual:e}")]
    NotCptp { condition: &'static str, residual: f64 },

    #[error("Kraus operator {index} is not proportional to a unitary: residual {residual:e}")]
    NotStochasticUnitary { index: usize, residual: f64 },

    #[error("weight c_{index} = {given} does not match Tr(A†A)/2 = {recovered}")]
    WeightMismatch { index: usize, given: f64, recovered: f64 },

    #[error("chain must have at least one site")]
    ZeroSites,

    #[error("boundary vector is not normalized: norm {norm}")]
    BoundaryNorm { norm: f64 },

    #[error("state has zero norm for the given boundary vectors (f_n = {f_n:e})")]
    ZeroNorm { f_n: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid measurement basis: {0}")]
    InvalidBasis(String),

    #[error("no unmeasured site left (cursor {cursor}, n = {n})")]
    CursorExhausted { cursor: usize, n: usize },

    #[error("site {site} out of range [{lo}, {hi}]")]
    SiteOutOfRange { site: usize, lo: usize, hi: usize },

    #[error("site ordering violated: {0}")]
    SiteOrder(String),

    #[error("no measured form found")]
    NoMeasuredForm,

    #[error("state vector of {amplitudes} amplitudes exceeds the oracle limit of {limit}")]
    OracleTooLarge { amplitudes: u128, limit: u128 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("failed to factor Kraus operators in the fixed-axis basis: residual {residual:e}")]
    Factorization { residual: f64 },

    #[error("observable is not Hermitian: residual {residual:e}")]
    NotHermitian { residual: f64 },

    #[error("observable norm {norm} exceeds 1")]
    ObservableNorm { norm: f64 },

    #[error("operation requires a unital channel")]
    NotUnital,

    #[error("state is not pure: purity {purity}")]
    NotPure { purity: f64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("download failed: {0}")]
    Download(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
