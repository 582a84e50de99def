use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    IndexOutOfRange { index: usize, num_qubits: usize },

    #[error("unknown architecture kind `{0}`")]
    UnknownArchitecture(String),

    #[error("coupling map is disconnected: qubit {0} is unreachable from the root")]
    Disconnected(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("missing calibration data for basis state {state} on support {support:?}")]
    MissingBasisState { support: Vec<usize>, state: String },

    #[error("missing single-qubit calibration for qubit {0}")]
    MissingSingle(usize),

    #[error("singular calibration factor on support {support:?}")]
    Singular { support: Vec<usize> },

    #[error("matrix power undefined: {0}")]
    MatrixPower(String),

    #[error("inconsistent join plan: {0}")]
    JoinPlan(String),

    #[error("register mismatch: distribution has {found} qubits, operation needs {required}")]
    RegisterMismatch { required: usize, found: usize },

    #[error("shot budget: {0}")]
    Budget(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("schema version mismatch: file has version {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
