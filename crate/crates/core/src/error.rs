use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("joint dimension {dim} exceeds the limit of {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("factor index {index} out of range for a space with {len} factors")]
    FactorOutOfRange { index: usize, len: usize },

    #[error("duplicate factor name `{0}`")]
    DuplicateFactor(String),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("state norm² {0} exceeds 1")]
    NotSubNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("linear map amplifies probability (squared operator norm {0})")]
    NotContraction(f64),

    #[error("invalid cavity parameters: {0}")]
    InvalidCavity(String),

    #[error("photon basis is not closed under scattering: {0}")]
    OpenPhotonBasis(String),

    #[error("click patterns for the {0} herald are not coherent")]
    MixedHerald(&'static str),

    #[error("invalid Bell mixture: {0}")]
    InvalidMixture(String),

    #[error("input carries phase-error weight {0}; convert it to a bit-flip mixture first")]
    PhaseErrorPresent(f64),

    #[error("purification round has zero success probability")]
    NoSuccess,

    #[error("fidelity {0} is outside [0, 1]")]
    InvalidFidelity(f64),

    #[error("initial fidelity {0} is not above 1/2; the ensemble cannot be purified")]
    Unpurifiable(f64),

    #[error("partial trace needs at least one kept factor")]
    EmptyKeep,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
