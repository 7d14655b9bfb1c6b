use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),

    #[error("operation requires a binary alphabet, got C = {0}")]
    NotBinary(usize),

    #[error("not a joint distribution: {0}")]
    InvalidJoint(String),

    #[error("column {column} of the matrix is not a probability vector")]
    NotColumnStochastic { column: usize },

    #[error("coordinate {name} = {value} lies outside [0, 1]")]
    CoordinateOutOfRange { name: &'static str, value: f64 },

    #[error("polynomial variable counts differ: {left} vs {right}")]
    VariableCountMismatch { left: usize, right: usize },

    #[error("parity mode {mode} cannot be used with C = {c}")]
    ParityMismatch { c: usize, mode: &'static str },

    #[error("integration budget must be positive")]
    NonPositiveBudget,

    #[error("density takes a negative value ({value}) on the distribution domain")]
    NegativeDensity { value: f64 },

    #[error("entry ({row}, {col}) must be strictly positive")]
    NonPositiveEntry { row: usize, col: usize },

    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),

    #[error("Dirichlet normalisation check failed: slice integral {estimate} (standard error {std_error})")]
    Normalization { estimate: f64, std_error: f64 },

    #[error("estimator needs at least {required} samples, got {found}")]
    InsufficientSamples { required: usize, found: usize },

    #[error("symbol {symbol} out of range for C = {c}")]
    SymbolOutOfRange { symbol: usize, c: usize },

    #[error("enumeration of {outcomes} outcomes exceeds the cap of {cap}")]
    EnumerationCap { outcomes: f64, cap: u64 },

    #[error("a mechanism needs at least two agents, got {0}")]
    TooFewAgents(usize),

    #[error("agents reported on different task counts")]
    RaggedReports,

    #[error("threshold distribution is degenerate (zero determinant)")]
    DegenerateThreshold,

    #[error("epsilon must be strictly positive, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("delta must satisfy delta >= 0 (and delta > epsilon for sweeps), got {0}")]
    InvalidDelta(f64),

    #[error("no feasible substituted threshold on the gamma grid")]
    NoFeasibleSubstitute,

    #[error("threshold lies on the boundary of the probe's lower set (probe {0})")]
    BoundaryProbe(usize),

    #[error("effort model violates monotonicity: {0}")]
    NonMonotoneModel(String),

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("replicates must be at least 1")]
    NoReplicates,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("malformed variable layout: {0}")]
    VariableLayout(String),

    #[error("measure {0} has no polynomial form")]
    NotPolynomial(&'static str),

    #[error("payment scale must be strictly positive, got {0}")]
    NonPositiveScale(f64),
}

impl Error {
    /// `true` for errors caused by a malformed configuration rather than a
    /// violated mathematical precondition.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::InvalidJoint(_)
                | Error::NotColumnStochastic { .. }
                | Error::DimensionMismatch { .. }
                | Error::AlphabetTooSmall(_)
                | Error::InvalidAlpha(_)
                | Error::NonPositiveBudget
                | Error::NoReplicates
                | Error::Empty(_)
                | Error::Normalization { .. }
                | Error::VariableLayout(_)
                | Error::NotPolynomial(_)
                | Error::NonPositiveScale(_)
        )
    }
}
