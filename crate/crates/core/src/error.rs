use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index set has {size} pairs, enumeration cap is {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("brute force over Z_{modulus} exceeds limit {limit}")]
    BruteForceLimitExceeded { modulus: u64, limit: u64 },

    #[error("no delta-good index set for delta = {delta} up to K = {k_max}")]
    GoodIndexSetNotFound {
        delta: String,
        k_max: u32,
        /// One line per scanned K: "K size ratio" (ratio may be "undecided").
        trajectory: Vec<String>,
    },

    #[error("mass window not reached: {0}")]
    MassUnreachable(String),

    #[error("threshold search failed: {0}")]
    ThresholdUnreachable(String),

    #[error("interval budget exceeded: {arcs} arcs requested, budget {budget}")]
    UnionTooLarge { arcs: u128, budget: u128 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("invalid modulus b = {0}")]
    InvalidModulus(u64),

    #[error("gamma {0} lies outside the window")]
    GammaOutsideWindow(String),

    #[error("nesting unreachable at level {level}: {reason}")]
    NestingUnreachable { level: usize, reason: String },

    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    #[error("empty H table")]
    EmptyTable,

    #[error("degenerate block C_{0} is empty")]
    DegenerateBlock(usize),

    #[error("sieve limit {limit} is below the required {required}")]
    SieveTooSmall { limit: u64, required: String },

    #[error("precision budget exhausted deciding {0}")]
    PrecisionExhausted(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable kind tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::CapExceeded { .. } => "CapExceeded",
            Error::BruteForceLimitExceeded { .. } => "BruteForceLimitExceeded",
            Error::GoodIndexSetNotFound { .. } => "GoodIndexSetNotFound",
            Error::MassUnreachable(_) => "MassUnreachable",
            Error::ThresholdUnreachable(_) => "ThresholdUnreachable",
            Error::UnionTooLarge { .. } => "UnionTooLarge",
            Error::HypothesisViolated(_) => "HypothesisViolated",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::InvalidModulus(_) => "InvalidModulus",
            Error::GammaOutsideWindow(_) => "GammaOutsideWindow",
            Error::NestingUnreachable { .. } => "NestingUnreachable",
            Error::UnsupportedInput(_) => "UnsupportedInput",
            Error::EmptyTable => "EmptyTable",
            Error::DegenerateBlock(_) => "DegenerateBlock",
            Error::SieveTooSmall { .. } => "SieveTooSmall",
            Error::PrecisionExhausted(_) => "PrecisionExhausted",
            Error::VerificationFailed(_) => "VerificationFailed",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
