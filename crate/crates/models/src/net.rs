//! Model assembly and forward passes.

use crate::error::ModelError;
use crate::spec::{
    ArchHyper, Architecture, ModelSpec, TrainingMeta, INPUT_HEIGHT, SLICE_WIDTH,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rffi_tensornet::graph::{Graph, TensorId};
use rffi_tensornet::layers::{
    position_encoding_leaf, Conv2dLayer, DenseLayer, GruLayer, LayerNormLayer, LstmLayer,
    MultiHeadAttention,
};
use rffi_tensornet::params::{ParamLeaves, ParamSet};
use rffi_tensornet::{ProbVector, Scalar};

/// A standardized spectrogram matrix ready to enter a model:
/// `rows x cols` in row-major order, rows being frequency bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl ModelInput {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(rows * cols, values.len());
        Self { rows, cols, values }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CnnNet {
    convs: Vec<Conv2dLayer>,
    skip: Conv2dLayer,
    second_skip: Option<Conv2dLayer>,
    head: DenseLayer,
    /// `Some` for the slicing variant: features are flattened instead of
    /// globally averaged, which pins the input to 64x6.
    flatten: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct RecurrentNet {
    kind: RecurrentKind,
    lstm: Option<(LstmLayer, LstmLayer)>,
    gru: Option<(GruLayer, GruLayer)>,
    head: DenseLayer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RecurrentKind {
    Lstm,
    Gru,
}

#[derive(Debug, Clone)]
pub(crate) struct TransformerNet {
    blocks: Vec<EncoderBlock>,
    head: DenseLayer,
    d_model: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct EncoderBlock {
    mha: MultiHeadAttention,
    norm1: LayerNormLayer,
    ff1: DenseLayer,
    ff2: DenseLayer,
    norm2: LayerNormLayer,
}

#[derive(Debug, Clone)]
pub(crate) enum Net {
    Cnn(CnnNet),
    Recurrent(RecurrentNet),
    Transformer(TransformerNet),
}

/// A classifier: spec, parameters, and the wired layer structure.
#[derive(Debug, Clone)]
pub struct Model<F: Scalar> {
    pub spec: ModelSpec,
    pub params: ParamSet<F>,
    pub meta: TrainingMeta,
    pub(crate) net: Net,
}

/// Builds an untrained model with fan-in-scaled uniform initialization,
/// deterministically from `seed`.
pub fn build_model<F: Scalar>(spec: &ModelSpec, seed: u64) -> Result<Model<F>, ModelError> {
    if spec.k_classes < 2 {
        return Err(ModelError::TooFewClasses(spec.k_classes));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d6f_64656c);
    let mut params = ParamSet::new();
    let net = match (&spec.architecture, &spec.hyper) {
        (Architecture::FlattenFreeCnn, ArchHyper::Cnn(h)) => Net::Cnn(build_cnn(
            &mut params,
            &mut rng,
            &h.channels,
            h.second_skip,
            spec.k_classes,
            false,
        )?),
        (Architecture::SlicingCnn, ArchHyper::Cnn(h)) => Net::Cnn(build_cnn(
            &mut params,
            &mut rng,
            &h.channels,
            h.second_skip,
            spec.k_classes,
            true,
        )?),
        (Architecture::LstmNet, ArchHyper::Recurrent(h)) => {
            let l1 = LstmLayer::init(&mut params, "lstm1", INPUT_HEIGHT, h.units, &mut rng);
            let l2 = LstmLayer::init(&mut params, "lstm2", h.units, h.units, &mut rng);
            let head = DenseLayer::init(&mut params, "head", h.units, spec.k_classes, &mut rng);
            Net::Recurrent(RecurrentNet {
                kind: RecurrentKind::Lstm,
                lstm: Some((l1, l2)),
                gru: None,
                head,
            })
        }
        (Architecture::GruNet, ArchHyper::Recurrent(h)) => {
            let l1 = GruLayer::init(&mut params, "gru1", INPUT_HEIGHT, h.units, &mut rng);
            let l2 = GruLayer::init(&mut params, "gru2", h.units, h.units, &mut rng);
            let head = DenseLayer::init(&mut params, "head", h.units, spec.k_classes, &mut rng);
            Net::Recurrent(RecurrentNet {
                kind: RecurrentKind::Gru,
                lstm: None,
                gru: Some((l1, l2)),
                head,
            })
        }
        (Architecture::Transformer, ArchHyper::Transformer(h)) => {
            let mut blocks = Vec::with_capacity(h.blocks);
            for b in 0..h.blocks {
                blocks.push(EncoderBlock {
                    mha: MultiHeadAttention::init(
                        &mut params,
                        &format!("block{b}.mha"),
                        h.d_model,
                        h.heads,
                        &mut rng,
                    )?,
                    norm1: LayerNormLayer::init(&mut params, &format!("block{b}.norm1"), h.d_model),
                    ff1: DenseLayer::init(
                        &mut params,
                        &format!("block{b}.ff1"),
                        h.d_model,
                        h.ffn_hidden,
                        &mut rng,
                    ),
                    ff2: DenseLayer::init(
                        &mut params,
                        &format!("block{b}.ff2"),
                        h.ffn_hidden,
                        h.d_model,
                        &mut rng,
                    ),
                    norm2: LayerNormLayer::init(&mut params, &format!("block{b}.norm2"), h.d_model),
                });
            }
            let head = DenseLayer::init(&mut params, "head", h.d_model, spec.k_classes, &mut rng);
            Net::Transformer(TransformerNet {
                blocks,
                head,
                d_model: h.d_model,
            })
        }
        _ => return Err(ModelError::SpecMismatch),
    };
    Ok(Model {
        spec: spec.clone(),
        params,
        meta: TrainingMeta::default(),
        net,
    })
}

fn build_cnn<F: Scalar>(
    params: &mut ParamSet<F>,
    rng: &mut ChaCha8Rng,
    channels: &[usize],
    second_skip: bool,
    k_classes: usize,
    flatten: bool,
) -> Result<CnnNet, ModelError> {
    if channels.len() != 10 {
        return Err(ModelError::BadChannelPlan(channels.len()));
    }
    let mut convs = Vec::with_capacity(10);
    let mut cin = 1usize;
    for (i, &cout) in channels.iter().enumerate() {
        convs.push(Conv2dLayer::init(
            params,
            &format!("conv{}", i + 1),
            3,
            3,
            cin,
            cout,
            rng,
        ));
        cin = cout;
    }
    // 1x1 projection of conv5's activation onto conv7's channel count.
    let skip = Conv2dLayer::init(params, "skip5_7", 1, 1, channels[4], channels[6], rng);
    let second = if second_skip {
        Some(Conv2dLayer::init(
            params,
            "skip7_9",
            1,
            1,
            channels[6],
            channels[8],
            rng,
        ))
    } else {
        None
    };
    let head_in = if flatten {
        (INPUT_HEIGHT / 2) * (SLICE_WIDTH / 2) * channels[9]
    } else {
        channels[9]
    };
    let head = DenseLayer::init(params, "head", head_in, k_classes, rng);
    Ok(CnnNet {
        convs,
        skip,
        second_skip: second,
        head,
        flatten,
    })
}

impl CnnNet {
    /// Feature extractor shared by both CNN variants: ten same-padded 3x3
    /// convolutions, one 2x2 max pool after conv2, and the conv5->conv7 skip
    /// added before conv7's activation.
    fn features<F: Scalar>(
        &self,
        g: &mut Graph<F>,
        leaves: &ParamLeaves,
        x: TensorId,
    ) -> Result<TensorId, ModelError> {
        let c1 = self.convs[0].forward(g, leaves, x)?;
        let a1 = g.relu(c1);
        let c2 = self.convs[1].forward(g, leaves, a1)?;
        let mut a2 = g.relu(c2);
        // The 2x2 pool requires even extents; odd-width inputs drop their
        // last feature column so any width >= 8 classifies.
        let w = g.shape(a2)[1];
        if w % 2 == 1 {
            a2 = g.crop_width(a2, w - 1);
        }
        let pooled = g.max_pool2(a2)?;
        let mut act = pooled;
        let mut act5 = None;
        let mut act7 = None;
        for idx in 2..10 {
            let pre = self.convs[idx].forward(g, leaves, act)?;
            let pre = if idx == 6 {
                // conv7: add the 1x1-projected conv5 activation.
                let proj = self
                    .skip
                    .forward(g, leaves, act5.expect("conv5 already computed"))?;
                g.add(pre, proj)
            } else if idx == 8 {
                if let Some(skip2) = &self.second_skip {
                    let proj = skip2.forward(g, leaves, act7.expect("conv7 already computed"))?;
                    g.add(pre, proj)
                } else {
                    pre
                }
            } else {
                pre
            };
            act = g.relu(pre);
            if idx == 4 {
                act5 = Some(act);
            }
            if idx == 6 {
                act7 = Some(act);
            }
        }
        Ok(act)
    }

    fn logits<F: Scalar>(
        &self,
        g: &mut Graph<F>,
        leaves: &ParamLeaves,
        x: TensorId,
    ) -> Result<TensorId, ModelError> {
        let feat = self.features(g, leaves, x)?;
        let vector = if self.flatten {
            let shape = g.shape(feat).to_vec();
            g.reshape(feat, vec![shape.iter().product()])
        } else {
            g.global_avg_pool2d(feat)
        };
        Ok(self.head.forward(g, leaves, vector)?)
    }
}

impl RecurrentNet {
    fn logits<F: Scalar>(
        &self,
        g: &mut Graph<F>,
        leaves: &ParamLeaves,
        x: TensorId,
    ) -> Result<TensorId, ModelError> {
        let seq = match self.kind {
            RecurrentKind::Lstm => {
                let (l1, l2) = self.lstm.as_ref().expect("lstm layers present");
                let h1 = l1.forward(g, leaves, x)?;
                l2.forward(g, leaves, h1)?
            }
            RecurrentKind::Gru => {
                let (l1, l2) = self.gru.as_ref().expect("gru layers present");
                let h1 = l1.forward(g, leaves, x)?;
                l2.forward(g, leaves, h1)?
            }
        };
        let pooled = g.global_avg_pool1d(seq);
        Ok(self.head.forward(g, leaves, pooled)?)
    }
}

impl TransformerNet {
    fn logits<F: Scalar>(
        &self,
        g: &mut Graph<F>,
        leaves: &ParamLeaves,
        x: TensorId,
    ) -> Result<TensorId, ModelError> {
        let t = g.shape(x)[0];
        let pos = position_encoding_leaf(g, t, self.d_model);
        let mut h = g.add(x, pos);
        for block in &self.blocks {
            let attn = block.mha.forward(g, leaves, h)?;
            let r1 = g.add(h, attn);
            let n1 = block.norm1.forward(g, leaves, r1);
            let f1 = block.ff1.forward(g, leaves, n1)?;
            let f1a = g.relu(f1);
            let f2 = block.ff2.forward(g, leaves, f1a)?;
            let r2 = g.add(n1, f2);
            h = block.norm2.forward(g, leaves, r2);
        }
        let pooled = g.global_avg_pool1d(h);
        Ok(self.head.forward(g, leaves, pooled)?)
    }
}

impl<F: Scalar> Model<F> {
    /// Registers the input as a graph leaf in the layout this architecture
    /// expects: [H, W, 1] feature maps for the CNNs, [T=W, F=H] sequences
    /// for the recurrent and attention models.
    pub fn input_leaf(&self, g: &mut Graph<F>, input: &ModelInput) -> TensorId {
        match &self.net {
            Net::Cnn(_) => {
                let data = input.values.iter().map(|&v| F::from_f64(v)).collect();
                g.constant(vec![input.rows, input.cols, 1], data)
            }
            Net::Recurrent(_) | Net::Transformer(_) => {
                // Transpose: timesteps are spectrogram columns.
                let mut data = vec![F::ZERO; input.rows * input.cols];
                for r in 0..input.rows {
                    for c in 0..input.cols {
                        data[c * input.rows + r] = F::from_f64(input.values[r * input.cols + c]);
                    }
                }
                g.constant(vec![input.cols, input.rows], data)
            }
        }
    }

    /// Builds the forward graph from an already-registered input leaf and
    /// returns the logits node.
    pub fn logits_graph(
        &self,
        g: &mut Graph<F>,
        leaves: &ParamLeaves,
        input: TensorId,
    ) -> Result<TensorId, ModelError> {
        match &self.net {
            Net::Cnn(net) => net.logits(g, leaves, input),
            Net::Recurrent(net) => net.logits(g, leaves, input),
            Net::Transformer(net) => net.logits(g, leaves, input),
        }
    }

    /// Full inference pass: spectrogram in, probability vector out.
    pub fn forward(&self, input: &ModelInput) -> Result<ProbVector, ModelError> {
        let mut g = Graph::new();
        let leaves = self.params.leaves(&mut g);
        let x = self.input_leaf(&mut g, input);
        let logits = self.logits_graph(&mut g, &leaves, x)?;
        Ok(g.softmax_probs(logits)?)
    }

    /// Shape of the final convolutional feature map (CNN variants only);
    /// used to confirm the pre-pooling tensor layout.
    pub fn cnn_feature_shape(&self, input: &ModelInput) -> Result<Vec<usize>, ModelError> {
        let Net::Cnn(net) = &self.net else {
            return Err(ModelError::SpecMismatch);
        };
        let mut g = Graph::new();
        let leaves = self.params.leaves(&mut g);
        let x = self.input_leaf(&mut g, input);
        let feat = net.features(&mut g, &leaves, x)?;
        Ok(g.shape(feat).to_vec())
    }

    /// Total number of learnable scalar parameters.
    pub fn param_count(&self) -> usize {
        self.params.param_count()
    }
}
