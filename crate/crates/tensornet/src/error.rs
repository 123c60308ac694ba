use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TensorError {
    #[error(
        "dense layer expects an input of extent {expected}, got {got}: the weight matrix fixes \
         the input length, so a variable-length tensor must be reduced to a fixed-length vector \
         (e.g. by global average pooling) before any dense layer"
    )]
    DenseExtentMismatch { expected: usize, got: usize },
    #[error("conv2d expects {expected} input channels, got {got}")]
    ConvChannelMismatch { expected: usize, got: usize },
    #[error("max pooling requires even spatial extents, got {h}x{w}")]
    PoolOddExtent { h: usize, w: usize },
    #[error("attention model width {d} is not divisible by {heads} heads")]
    HeadDivisibility { d: usize, heads: usize },
    #[error("label {label} out of range for {k} classes")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("backward root must be a scalar, got {elements} elements")]
    NonScalarRoot { elements: usize },
    #[error("probability vector invalid: {0}")]
    InvalidProbability(String),
}
