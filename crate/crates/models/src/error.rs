use rffi_tensornet::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("a classifier needs at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("architecture and hyperparameter record do not match")]
    SpecMismatch,
    #[error("convolutional channel plan must list 10 layers, got {0}")]
    BadChannelPlan(usize),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("checkpoint i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint header invalid: {0}")]
    Header(String),
    #[error("checkpoint parameters do not match the spec: {0}")]
    ParamMismatch(String),
}
