use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("register of {requested} qubits exceeds the cap of {cap}")]
    QubitCap { requested: usize, cap: usize },

    #[error("Pauli string length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid Pauli letter {0:?}")]
    InvalidPauli(char),

    #[error("dimension mismatch: {expected} vs {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("expected {expected} parameters, found {found}")]
    ParameterCount { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state is not normalized (trace {0})")]
    NotNormalized(f64),

    #[error("eigenvalue {0} is too negative for a density matrix")]
    NegativeEigenvalue(f64),

    #[error("generator does not square to the identity")]
    NotInvolutory,

    #[error("invalid state derivative: {0}")]
    InvalidDerivative(String),

    #[error("optimal baseline undefined for QFI {0}")]
    UndefinedBaseline(f64),

    #[error("sampled outcome has probability {0}, below numerical support")]
    NumericalSupport(f64),

    #[error("unsupported estimator: {0}")]
    UnsupportedEstimator(String),

    #[error("noise incompatible with gate: {0}")]
    IncompatibleNoise(String),

    #[error("optimizer diverged at iteration {iteration}: |theta| = {norm}")]
    Diverged { iteration: usize, norm: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
