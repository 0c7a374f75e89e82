use alloc::string::String;

/// Errors raised by the simulator and the algorithms built on it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),
    #[error("empty support")]
    EmptySupport,
    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("state dimension {dim} exceeds the cap {cap}; reduce q, n or the truncation radius")]
    DimensionCap { dim: usize, cap: usize },
    #[error("enumeration of {0} candidates exceeds the cap; use smaller parameters")]
    EnumerationCap(u128),
    #[error("register shapes differ")]
    ShapeMismatch,
    #[error("register {0} is not cyclic")]
    NotCyclic(usize),
    #[error("register index {0} out of range")]
    NoSuchRegister(usize),
    #[error("zero vector")]
    ZeroVector,
    #[error("gamma value {0} outside [0, 1]")]
    GammaOutOfRange(f64),
    #[error("basis rows are not orthonormal (deviation {0:e})")]
    NonOrthonormalBasis(f64),
    #[error("relabel map is not injective on the support")]
    NonInjective,
    #[error("relabel map leaves support label {0} unmapped")]
    UnmappedLabel(usize),
    #[error("no admissible heavy pair reaches threshold {0}")]
    NoHeavyPair(f64),
    #[error("insufficient qubits: have {have}, budget requires {need}")]
    InsufficientQubits { have: usize, need: usize },
    #[error("sieve produced no usable qubit at stage {stage} for coordinate {coordinate}")]
    SieveExhausted { stage: usize, coordinate: usize },
    #[error("modulus {0} is not supported by this solver")]
    UnsupportedModulus(u64),
    #[error("recovery failed after {0} attempts")]
    RecoveryFailed(usize),
    #[error("condition violated: {0}")]
    Condition(String),
    #[error("all guesses exhausted")]
    Exhausted,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: &str) -> Error {
    Error::InvalidParameter(String::from(msg))
}
