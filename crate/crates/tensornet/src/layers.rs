//! Layer definitions: parameter registration plus graph-building forwards.
//!
//! A layer owns only `ParamId`s; the values live in the model's `ParamSet`
//! and are re-leafed into a fresh graph on every forward pass.

use crate::error::TensorError;
use crate::graph::{Graph, TensorId};
use crate::params::{fan_in_uniform, ParamId, ParamLeaves, ParamSet};
use crate::scalar::Scalar;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub w: ParamId,
    pub b: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl DenseLayer {
    pub fn init<F: Scalar>(
        params: &mut ParamSet<F>,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let w = params.add(
            format!("{name}.w"),
            vec![out_dim, in_dim],
            fan_in_uniform(rng, in_dim, out_dim * in_dim),
        );
        let b = params.add(format!("{name}.b"), vec![out_dim], vec![F::ZERO; out_dim]);
        Self { w, b, in_dim, out_dim }
    }

    pub fn forward<F: Scalar>(
        &self,
        g: &mut Graph<F>,
        leaves: &ParamLeaves,
        x: TensorId,
    ) -> Result<TensorId, TensorError> {
        g.dense(x, leaves.id(self.w), leaves.id(self.b))
    }
}

#[derive(Debug, Clone)]
pub struct Conv2dLayer {
    pub kernels: ParamId,
    pub bias: ParamId,
    pub cin: usize,
    pub cout: usize,
}

impl Conv2dLayer {
    pub fn init<F: Scalar>(
        params: &mut ParamSet<F>,
        name: &str,
        kh: usize,
        kw: usize,
        cin: usize,
        cout: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let fan_in = kh * kw * cin;
        let kernels = params.add(
            format!("{name}.kernels"),
            vec![kh, kw, cin, cout],
            fan_in_uniform(rng, fan_in, fan_in * cout),
        );
        let bias = params.add(format!("{name}.bias"), vec![cout], vec![F::ZERO; cout]);
        Self { kernels, bias, cin, cout }
    }

    pub fn forward<F: Scalar>(
        &self,
        g: &mut Graph<F>,
        leaves: &ParamLeaves,
        x: TensorId,
    ) -> Result<TensorId, TensorError> {
        g.conv2d(x, leaves.id(self.kernels), leaves.id(self.bias))
    }
}

/// LSTM with a single bias set, gate order (input, forget, cell, output);
/// the forget-gate bias initializes to one.
#[derive(Debug, Clone)]
pub struct LstmLayer {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub units: usize,
}

impl LstmLayer {
    pub fn init<F: Scalar>(
        params: &mut ParamSet<F>,
        name: &str,
        in_dim: usize,
        units: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let w_ih = params.add(
            format!("{name}.w_ih"),
            vec![4 * units, in_dim],
            fan_in_uniform(rng, in_dim, 4 * units * in_dim),
        );
        let w_hh = params.add(
            format!("{name}.w_hh"),
            vec![4 * units, units],
            fan_in_uniform(rng, units, 4 * units * units),
        );
        let mut b = vec![F::ZERO; 4 * units];
        for v in b.iter_mut().take(2 * units).skip(units) {
            *v = F::ONE;
        }
        let bias = params.add(format!("{name}.bias"), vec![4 * units], b);
        Self { w_ih, w_hh, bias, in_dim, units }
    }

    /// Runs the recursion over `x: [T, in_dim]` from zero initial state and
    /// returns the full hidden sequence [T, units].
    pub fn forward<F: Scalar>(
        &self,
        g: &mut Graph<F>,
        leaves: &ParamLeaves,
        x: TensorId,
    ) -> Result<TensorId, TensorError> {
        let t_steps = g.shape(x)[0];
        let u = self.units;
        let mut h = g.constant(vec![1, u], vec![F::ZERO; u]);
        let mut c = g.constant(vec![1, u], vec![F::ZERO; u]);
        let mut outputs = Vec::with_capacity(t_steps);
        for t in 0..t_steps {
            let x_t = g.slice_rows(x, t, 1);
            let zx = g.dense(x_t, leaves.id(self.w_ih), leaves.id(self.bias))?;
            let zh = g.matmul_nt(h, leaves.id(self.w_hh));
            let z = g.add(zx, zh);
            let zi = g.slice_cols(z, 0, u);
            let zf = g.slice_cols(z, u, u);
            let zg = g.slice_cols(z, 2 * u, u);
            let zo = g.slice_cols(z, 3 * u, u);
            let i = g.sigmoid(zi);
            let f = g.sigmoid(zf);
            let cand = g.tanh_act(zg);
            let o = g.sigmoid(zo);
            let fc = g.mul(f, c);
            let ig = g.mul(i, cand);
            c = g.add(fc, ig);
            let ct = g.tanh_act(c);
            h = g.mul(o, ct);
            outputs.push(h);
        }
        Ok(g.concat_rows(&outputs))
    }
}

/// GRU with separate input and recurrent biases (the reset gate applies
/// after the recurrent matmul), gate order (update, reset, candidate).
#[derive(Debug, Clone)]
pub struct GruLayer {
    pub w_ih: ParamId,
    pub b_ih: ParamId,
    pub w_hh: ParamId,
    pub b_hh: ParamId,
    pub in_dim: usize,
    pub units: usize,
}

impl GruLayer {
    pub fn init<F: Scalar>(
        params: &mut ParamSet<F>,
        name: &str,
        in_dim: usize,
        units: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let w_ih = params.add(
            format!("{name}.w_ih"),
            vec![3 * units, in_dim],
            fan_in_uniform(rng, in_dim, 3 * units * in_dim),
        );
        let b_ih = params.add(format!("{name}.b_ih"), vec![3 * units], vec![F::ZERO; 3 * units]);
        let w_hh = params.add(
            format!("{name}.w_hh"),
            vec![3 * units, units],
            fan_in_uniform(rng, units, 3 * units * units),
        );
        let b_hh = params.add(format!("{name}.b_hh"), vec![3 * units], vec![F::ZERO; 3 * units]);
        Self { w_ih, b_ih, w_hh, b_hh, in_dim, units }
    }

    pub fn forward<F: Scalar>(
        &self,
        g: &mut Graph<F>,
        leaves: &ParamLeaves,
        x: TensorId,
    ) -> Result<TensorId, TensorError> {
        let t_steps = g.shape(x)[0];
        let u = self.units;
        let mut h = g.constant(vec![1, u], vec![F::ZERO; u]);
        let mut outputs = Vec::with_capacity(t_steps);
        for t in 0..t_steps {
            let x_t = g.slice_rows(x, t, 1);
            let zx = g.dense(x_t, leaves.id(self.w_ih), leaves.id(self.b_ih))?;
            let zh = g.dense(h, leaves.id(self.w_hh), leaves.id(self.b_hh))?;
            let xz = g.slice_cols(zx, 0, u);
            let xr = g.slice_cols(zx, u, u);
            let xh = g.slice_cols(zx, 2 * u, u);
            let hz = g.slice_cols(zh, 0, u);
            let hr = g.slice_cols(zh, u, u);
            let hh = g.slice_cols(zh, 2 * u, u);
            let z_pre = g.add(xz, hz);
            let z = g.sigmoid(z_pre);
            let r_pre = g.add(xr, hr);
            let r = g.sigmoid(r_pre);
            let gated = g.mul(r, hh);
            let cand_pre = g.add(xh, gated);
            let cand = g.tanh_act(cand_pre);
            // h = z * h_prev + (1 - z) * cand
            let zh_prev = g.mul(z, h);
            let one_minus_z = g.affine(z, -1.0, 1.0);
            let zc = g.mul(one_minus_z, cand);
            h = g.add(zh_prev, zc);
            outputs.push(h);
        }
        Ok(g.concat_rows(&outputs))
    }
}

/// Multi-head self-attention with learned Q/K/V and output projections.
#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    pub wq: DenseLayer,
    pub wk: DenseLayer,
    pub wv: DenseLayer,
    pub wo: DenseLayer,
    pub heads: usize,
    pub d_model: usize,
}

impl MultiHeadAttention {
    pub fn init<F: Scalar>(
        params: &mut ParamSet<F>,
        name: &str,
        d_model: usize,
        heads: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, TensorError> {
        if heads == 0 || d_model % heads != 0 {
            return Err(TensorError::HeadDivisibility { d: d_model, heads });
        }
        Ok(Self {
            wq: DenseLayer::init(params, &format!("{name}.q"), d_model, d_model, rng),
            wk: DenseLayer::init(params, &format!("{name}.k"), d_model, d_model, rng),
            wv: DenseLayer::init(params, &format!("{name}.v"), d_model, d_model, rng),
            wo: DenseLayer::init(params, &format!("{name}.out"), d_model, d_model, rng),
            heads,
            d_model,
        })
    }

    pub fn forward<F: Scalar>(
        &self,
        g: &mut Graph<F>,
        leaves: &ParamLeaves,
        x: TensorId,
    ) -> Result<TensorId, TensorError> {
        let dh = self.d_model / self.heads;
        let q = self.wq.forward(g, leaves, x)?;
        let k = self.wk.forward(g, leaves, x)?;
        let v = self.wv.forward(g, leaves, x)?;
        let scale = 1.0 / (dh as f64).sqrt();
        let mut ctx = Vec::with_capacity(self.heads);
        for head in 0..self.heads {
            let qh = g.slice_cols(q, head * dh, dh);
            let kh = g.slice_cols(k, head * dh, dh);
            let vh = g.slice_cols(v, head * dh, dh);
            let scores_raw = g.matmul_nt(qh, kh);
            let scores = g.scale(scores_raw, scale);
            let attn = g.softmax_rows(scores);
            ctx.push(g.matmul(attn, vh));
        }
        let merged = g.concat_cols(&ctx);
        self.wo.forward(g, leaves, merged)
    }
}

#[derive(Debug, Clone)]
pub struct LayerNormLayer {
    pub gain: ParamId,
    pub shift: ParamId,
}

impl LayerNormLayer {
    pub fn init<F: Scalar>(params: &mut ParamSet<F>, name: &str, d: usize) -> Self {
        let gain = params.add(format!("{name}.gain"), vec![d], vec![F::ONE; d]);
        let shift = params.add(format!("{name}.shift"), vec![d], vec![F::ZERO; d]);
        Self { gain, shift }
    }

    pub fn forward<F: Scalar>(
        &self,
        g: &mut Graph<F>,
        leaves: &ParamLeaves,
        x: TensorId,
    ) -> TensorId {
        g.layer_norm(x, leaves.id(self.gain), leaves.id(self.shift))
    }
}

/// Standard interleaved sine/cosine position table, row-major [t, d].
/// Deterministic and defined for any sequence length.
pub fn sinusoidal_position_encoding(t: usize, d: usize) -> Vec<f64> {
    let mut table = vec![0.0; t * d];
    for pos in 0..t {
        for pair in 0..d.div_ceil(2) {
            let angle = pos as f64 / 10000f64.powf(2.0 * pair as f64 / d as f64);
            table[pos * d + 2 * pair] = angle.sin();
            if 2 * pair + 1 < d {
                table[pos * d + 2 * pair + 1] = angle.cos();
            }
        }
    }
    table
}

/// The position table as a constant graph leaf.
pub fn position_encoding_leaf<F: Scalar>(g: &mut Graph<F>, t: usize, d: usize) -> TensorId {
    let table = sinusoidal_position_encoding(t, d)
        .into_iter()
        .map(F::from_f64)
        .collect();
    g.constant(vec![t, d], table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn position_zero_alternates_zero_one() {
        let table = sinusoidal_position_encoding(3, 6);
        assert_eq!(&table[0..6], &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn position_encoding_is_bounded_and_deterministic() {
        let a = sinusoidal_position_encoding(40, 16);
        let b = sinusoidal_position_encoding(40, 16);
        assert_eq!(a, b);
        assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn mha_rejects_bad_head_count() {
        let mut params: ParamSet<f64> = ParamSet::new();
        let mut rng = rand::rngs::mock::StepRng::new(1, 1);
        assert!(matches!(
            MultiHeadAttention::init(&mut params, "mha", 10, 3, &mut rng),
            Err(TensorError::HeadDivisibility { d: 10, heads: 3 })
        ));
    }
}
