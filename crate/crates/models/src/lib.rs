//! The five fingerprinting classifiers: flatten-free CNN, LSTM, GRU,
//! transformer encoder, and the fixed-input slicing CNN baseline.

mod checkpoint;
mod error;
mod net;
mod spec;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use error::ModelError;
pub use net::{build_model, Model, ModelInput};
pub use spec::{
    ArchHyper, Architecture, CnnHyper, ModelSpec, RecurrentHyper, Scale, TrainingMeta,
    TransformerHyper, INPUT_HEIGHT, SLICE_WIDTH,
};
