//! Model specifications: architecture choice, class count, and the layer
//! width presets.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Spectrogram height shared by every architecture; the STFT window length.
pub const INPUT_HEIGHT: usize = 64;
/// Fixed channel-independent spectrogram width of one 256-sample slice.
pub const SLICE_WIDTH: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Architecture {
    FlattenFreeCnn,
    LstmNet,
    GruNet,
    Transformer,
    SlicingCnn,
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::FlattenFreeCnn,
        Architecture::LstmNet,
        Architecture::GruNet,
        Architecture::Transformer,
        Architecture::SlicingCnn,
    ];

    /// The four architectures that accept variable-width inputs.
    pub const LENGTH_VERSATILE: [Architecture; 4] = [
        Architecture::FlattenFreeCnn,
        Architecture::LstmNet,
        Architecture::GruNet,
        Architecture::Transformer,
    ];
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Architecture::FlattenFreeCnn => "cnn",
            Architecture::LstmNet => "lstm",
            Architecture::GruNet => "gru",
            Architecture::Transformer => "transformer",
            Architecture::SlicingCnn => "slicing",
        };
        f.write_str(s)
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cnn" | "flatten-free-cnn" => Ok(Architecture::FlattenFreeCnn),
            "lstm" => Ok(Architecture::LstmNet),
            "gru" => Ok(Architecture::GruNet),
            "transformer" => Ok(Architecture::Transformer),
            "slicing" | "slicing-cnn" => Ok(Architecture::SlicingCnn),
            other => Err(format!("unknown architecture '{other}'")),
        }
    }
}

/// Width preset: `Paper` uses the published layer widths, `Desk` shrinks
/// them so the full experiment matrix trains on a laptop-class CPU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scale {
    Paper,
    Desk,
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            other => Err(format!("unknown scale '{other}'")),
        }
    }
}

/// Hyperparameters of the convolutional stacks (flatten-free and slicing).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnHyper {
    /// Output channels of the ten convolutional layers.
    pub channels: Vec<usize>,
    /// Enables a second skip connection (conv7 output added to conv9's
    /// pre-activation). The published description names only conv5->conv7.
    pub second_skip: bool,
}

impl CnnHyper {
    pub fn for_scale(scale: Scale) -> Self {
        let channels = match scale {
            Scale::Paper => vec![32, 32, 64, 64, 64, 64, 128, 128, 128, 128],
            Scale::Desk => vec![8, 8, 16, 16, 16, 16, 32, 32, 32, 32],
        };
        Self {
            channels,
            second_skip: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrentHyper {
    pub units: usize,
}

impl RecurrentHyper {
    pub fn for_scale(scale: Scale) -> Self {
        Self {
            units: match scale {
                Scale::Paper => 256,
                Scale::Desk => 64,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformerHyper {
    pub d_model: usize,
    pub heads: usize,
    pub ffn_hidden: usize,
    pub blocks: usize,
}

impl TransformerHyper {
    /// The transformer width is pinned to the spectrogram height, so both
    /// scales share one preset.
    pub fn for_scale(_scale: Scale) -> Self {
        Self {
            d_model: INPUT_HEIGHT,
            heads: 4,
            ffn_hidden: 128,
            blocks: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ArchHyper {
    Cnn(CnnHyper),
    Recurrent(RecurrentHyper),
    Transformer(TransformerHyper),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub k_classes: usize,
    pub scale: Scale,
    pub hyper: ArchHyper,
}

impl ModelSpec {
    pub fn new(architecture: Architecture, k_classes: usize, scale: Scale) -> Self {
        let hyper = match architecture {
            Architecture::FlattenFreeCnn | Architecture::SlicingCnn => {
                ArchHyper::Cnn(CnnHyper::for_scale(scale))
            }
            Architecture::LstmNet | Architecture::GruNet => {
                ArchHyper::Recurrent(RecurrentHyper::for_scale(scale))
            }
            Architecture::Transformer => {
                ArchHyper::Transformer(TransformerHyper::for_scale(scale))
            }
        };
        Self {
            architecture,
            k_classes,
            scale,
            hyper,
        }
    }
}

/// Training provenance carried in checkpoints.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs_trained: u32,
    pub final_val_loss: Option<f64>,
    pub best_val_loss: Option<f64>,
    pub seed: Option<u64>,
}
