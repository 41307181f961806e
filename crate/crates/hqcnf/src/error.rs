use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("cannot amplitude-encode the zero vector")]
    ZeroVector,
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("control and target qubit are both {0}")]
    EqualControlTarget(usize),
    #[error("parameter slot {slot} out of range ({n_params} slots)")]
    SlotOutOfRange { slot: usize, n_params: usize },
    #[error("parameter slot {0} is never referenced by a rotation gate")]
    UnusedSlot(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{n_qubits} qubits exceeds the dense-matrix limit of {max}")]
    TooManyQubits { n_qubits: usize, max: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("gradient is not supported for gate kind {0}")]
    UnsupportedGradient(&'static str),
    #[error("bad magic number {got:#010x} (expected {expected:#010x})")]
    BadMagic { got: u32, expected: u32 },
    #[error("truncated stream: needed {needed} more bytes")]
    Truncated { needed: usize },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("invalid downscale target {target} for {h}x{w} image")]
    InvalidDownscale { target: usize, h: usize, w: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("covariance eigenvalue {0} below the PSD tolerance")]
    NotPsd(f64),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
