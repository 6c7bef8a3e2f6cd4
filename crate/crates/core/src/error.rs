use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("binomial({n}, {k}) overflows the supported range")]
    BinomialOverflow { n: usize, k: usize },

    #[error("unsupported basis size: n={n}, k={k} (need n <= 64 and C(n,k) <= 2^32)")]
    UnsupportedScale { n: usize, k: usize },

    #[error("bitstring has Hamming weight {got}, expected {expected}")]
    WrongWeight { expected: usize, got: usize },

    #[error("index {index} out of range for basis of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },

    #[error("RBS gate needs two distinct qubits, got ({0}, {0})")]
    SameQubit(usize),

    #[error("qubits {p} and {q} lie in different registers; a tensor basis only admits intra-register gates")]
    CrossRegister { p: usize, q: usize },

    #[error("butterfly circuits need a power-of-two qubit count, got {0}")]
    NotPowerOfTwo(usize),

    #[error("ansatz needs at least 2 qubits, got {0}")]
    TooFewQubits(usize),

    #[error("expected {expected} parameters, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("register {register} has odd size {size} and cannot be pooled")]
    OddRegister { register: usize, size: usize },

    #[error("filter size {k} does not divide register {register} of size {size}")]
    Divisibility { register: usize, size: usize, k: usize },

    #[error("operation requires a {expected} basis")]
    BasisMismatch { expected: &'static str },

    #[error("state dimension {got} does not match basis dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cannot encode an all-zero tensor")]
    ZeroNorm,

    #[error("non-finite gradient in parameter slot {slot}")]
    NonFiniteGradient { slot: usize },

    #[error("non-finite loss")]
    NonFiniteLoss,

    #[error("state leaked {mass:e} probability mass outside the subspace")]
    Leakage { mass: f64 },

    #[error("full-space oracle limited to {max} qubits, got {n}")]
    OracleTooLarge { n: usize, max: usize },

    #[error("{message} (at byte offset {offset})")]
    Parse { offset: usize, message: String },

    #[error("tape was recorded for {expected} parameters, got {got}")]
    TapeMismatch { expected: usize, got: usize },

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
