//! A small reverse-mode differentiation engine with the layers needed by
//! length-versatile signal classifiers: dense, same-padded conv2d, max/global
//! pooling, LSTM/GRU, multi-head attention, layer norm, softmax
//! cross-entropy, Adam, and a plateau scheduler.

mod error;
pub mod gradcheck;
pub mod graph;
pub mod layers;
pub mod loss;
pub mod optim;
mod ops;
pub mod params;
pub mod scalar;

pub use error::TensorError;
pub use gradcheck::{grad_check, GradCheckReport, DEFAULT_STEP};
pub use graph::{Gradients, Graph, TensorId};
pub use loss::ProbVector;
pub use optim::{adam_step, scheduler_update, SchedulerDecision, TrainState};
pub use params::{fan_in_uniform, ParamId, ParamLeaves, ParamSet, Parameter};
pub use scalar::Scalar;
