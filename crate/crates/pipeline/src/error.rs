use rffi_core::channel::ChannelError;
use rffi_core::dsp::DspError;
use rffi_core::impairment::ImpairmentError;
use rffi_core::signal::SignalError;
use rffi_core::waveform::WaveformError;
use rffi_models::ModelError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Waveform(#[from] WaveformError),
    #[error(transparent)]
    Impairment(#[from] ImpairmentError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json on {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("dataset does not cover label {missing} of {k} classes")]
    LabelCoverage { missing: u32, k: usize },
    #[error("dataset record has label {label} outside the model's {k} classes")]
    LabelOutOfRange { label: u32, k: usize },
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    TrainingDiverged { epoch: u32 },
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("dataset is empty or malformed: {0}")]
    BadDataset(String),
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> PipelineError {
    let path = path.into();
    move |source| PipelineError::Io { path, source }
}

pub(crate) fn json_err(path: impl Into<PathBuf>) -> impl FnOnce(serde_json::Error) -> PipelineError {
    let path = path.into();
    move |source| PipelineError::Json { path, source }
}
