//! Row/column slicing and concatenation, row softmax, and layer
//! normalization. These are the sequence-model building blocks.

use crate::graph::{Graph, TensorId};
use crate::scalar::Scalar;

impl<F: Scalar> Graph<F> {
    /// Rows [start, start+len) of a [r, c] tensor.
    pub fn slice_rows(&mut self, x: TensorId, start: usize, len: usize) -> TensorId {
        let xs = self.shape(x).to_vec();
        assert_eq!(xs.len(), 2, "slice_rows input must be [r, c]");
        let (r, c) = (xs[0], xs[1]);
        assert!(start + len <= r, "row slice out of range");
        let vx = self.value_arc(x);
        let out = vx[start * c..(start + len) * c].to_vec();
        let req = self.requires_grad(x);
        self.push(
            vec![len, c],
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(x, |dst| {
                    for (d, &gi) in dst[start * c..(start + len) * c].iter_mut().zip(g) {
                        *d += gi;
                    }
                });
            })),
        )
    }

    /// Columns [start, start+len) of a [r, c] tensor.
    pub fn slice_cols(&mut self, x: TensorId, start: usize, len: usize) -> TensorId {
        let xs = self.shape(x).to_vec();
        assert_eq!(xs.len(), 2, "slice_cols input must be [r, c]");
        let (r, c) = (xs[0], xs[1]);
        assert!(start + len <= c, "column slice out of range");
        let vx = self.value_arc(x);
        let mut out = Vec::with_capacity(r * len);
        for row in 0..r {
            out.extend_from_slice(&vx[row * c + start..row * c + start + len]);
        }
        let req = self.requires_grad(x);
        self.push(
            vec![r, len],
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(x, |dst| {
                    for row in 0..r {
                        for (k, &gi) in g[row * len..(row + 1) * len].iter().enumerate() {
                            dst[row * c + start + k] += gi;
                        }
                    }
                });
            })),
        )
    }

    /// Vertical concatenation of [r_i, c] tensors with matching column count.
    pub fn concat_rows(&mut self, parts: &[TensorId]) -> TensorId {
        assert!(!parts.is_empty(), "concat_rows needs at least one part");
        let c = self.shape(parts[0])[1];
        let mut rows = 0usize;
        let mut out = Vec::new();
        let mut spans = Vec::with_capacity(parts.len());
        let mut req = false;
        for &p in parts {
            let ps = self.shape(p);
            assert_eq!(ps.len(), 2, "concat_rows parts must be [r, c]");
            assert_eq!(ps[1], c, "concat_rows column mismatch");
            spans.push((p, rows, ps[0]));
            rows += ps[0];
            out.extend_from_slice(self.value(p));
            req |= self.requires_grad(p);
        }
        self.push(
            vec![rows, c],
            out,
            req,
            Some(Box::new(move |g, sink| {
                for &(p, row_start, nrows) in &spans {
                    sink.accumulate(p, |dst| {
                        let lo = row_start * c;
                        for (d, &gi) in dst.iter_mut().zip(&g[lo..lo + nrows * c]) {
                            *d += gi;
                        }
                    });
                }
            })),
        )
    }

    /// Horizontal concatenation of [r, c_i] tensors with matching row count.
    pub fn concat_cols(&mut self, parts: &[TensorId]) -> TensorId {
        assert!(!parts.is_empty(), "concat_cols needs at least one part");
        let r = self.shape(parts[0])[0];
        let mut cols = 0usize;
        let mut spans = Vec::with_capacity(parts.len());
        let mut req = false;
        for &p in parts {
            let ps = self.shape(p);
            assert_eq!(ps.len(), 2, "concat_cols parts must be [r, c]");
            assert_eq!(ps[0], r, "concat_cols row mismatch");
            spans.push((p, cols, ps[1]));
            cols += ps[1];
            req |= self.requires_grad(p);
        }
        let mut out = vec![F::ZERO; r * cols];
        for &(p, col_start, w) in &spans {
            let vp = self.value(p);
            for row in 0..r {
                out[row * cols + col_start..row * cols + col_start + w]
                    .copy_from_slice(&vp[row * w..(row + 1) * w]);
            }
        }
        self.push(
            vec![r, cols],
            out,
            req,
            Some(Box::new(move |g, sink| {
                for &(p, col_start, w) in &spans {
                    sink.accumulate(p, |dst| {
                        for row in 0..r {
                            for k in 0..w {
                                dst[row * w + k] += g[row * cols + col_start + k];
                            }
                        }
                    });
                }
            })),
        )
    }

    /// Numerically stable softmax over each row of a [r, c] tensor.
    pub fn softmax_rows(&mut self, x: TensorId) -> TensorId {
        let xs = self.shape(x).to_vec();
        assert_eq!(xs.len(), 2, "softmax_rows input must be [r, c]");
        let (r, c) = (xs[0], xs[1]);
        let vx = self.value_arc(x);
        let mut out = vec![F::ZERO; r * c];
        for row in 0..r {
            let lo = row * c;
            let m = vx[lo..lo + c]
                .iter()
                .fold(vx[lo], |acc, &v| acc.max(v));
            let mut sum = F::ZERO;
            for k in 0..c {
                let e = (vx[lo + k] - m).exp();
                out[lo + k] = e;
                sum += e;
            }
            let inv = F::ONE / sum;
            for k in 0..c {
                out[lo + k] *= inv;
            }
        }
        let req = self.requires_grad(x);
        let y = out.clone();
        self.push(
            vec![r, c],
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(x, |dst| {
                    for row in 0..r {
                        let lo = row * c;
                        let mut dot = F::ZERO;
                        for k in 0..c {
                            dot += g[lo + k] * y[lo + k];
                        }
                        for k in 0..c {
                            dst[lo + k] += y[lo + k] * (g[lo + k] - dot);
                        }
                    }
                });
            })),
        )
    }

    /// Layer normalization over the feature axis of a [t, d] tensor with
    /// learned gain and shift, epsilon 1e-5.
    pub fn layer_norm(&mut self, x: TensorId, gain: TensorId, shift: TensorId) -> TensorId {
        let xs = self.shape(x).to_vec();
        assert_eq!(xs.len(), 2, "layer_norm input must be [t, d]");
        let (t, d) = (xs[0], xs[1]);
        debug_assert_eq!(self.shape(gain), [d]);
        debug_assert_eq!(self.shape(shift), [d]);
        let eps = F::from_f64(1e-5);
        let vx = self.value_arc(x);
        let vg = self.value_arc(gain);
        let vs = self.value_arc(shift);

        let inv_d = F::from_f64(1.0 / d as f64);
        let mut out = vec![F::ZERO; t * d];
        let mut xhat = vec![F::ZERO; t * d];
        let mut inv_std = vec![F::ZERO; t];
        for row in 0..t {
            let lo = row * d;
            let mut mean = F::ZERO;
            for k in 0..d {
                mean += vx[lo + k];
            }
            mean *= inv_d;
            let mut var = F::ZERO;
            for k in 0..d {
                let dv = vx[lo + k] - mean;
                var += dv * dv;
            }
            var *= inv_d;
            let istd = F::ONE / (var + eps).sqrt();
            inv_std[row] = istd;
            for k in 0..d {
                let xh = (vx[lo + k] - mean) * istd;
                xhat[lo + k] = xh;
                out[lo + k] = vg[k] * xh + vs[k];
            }
        }
        let req =
            self.requires_grad(x) || self.requires_grad(gain) || self.requires_grad(shift);
        self.push(
            vec![t, d],
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(x, |dst| {
                    for row in 0..t {
                        let lo = row * d;
                        // dxhat = g * gain; project out the mean and the
                        // xhat component (standard layer-norm backward).
                        let mut sum_dxh = F::ZERO;
                        let mut sum_dxh_xh = F::ZERO;
                        for k in 0..d {
                            let dxh = g[lo + k] * vg[k];
                            sum_dxh += dxh;
                            sum_dxh_xh += dxh * xhat[lo + k];
                        }
                        for k in 0..d {
                            let dxh = g[lo + k] * vg[k];
                            dst[lo + k] += inv_std[row]
                                * (dxh - inv_d * sum_dxh - inv_d * xhat[lo + k] * sum_dxh_xh);
                        }
                    }
                });
                sink.accumulate(gain, |dst| {
                    for row in 0..t {
                        let lo = row * d;
                        for k in 0..d {
                            dst[k] += g[lo + k] * xhat[lo + k];
                        }
                    }
                });
                sink.accumulate(shift, |dst| {
                    for row in 0..t {
                        let lo = row * d;
                        for k in 0..d {
                            dst[k] += g[lo + k];
                        }
                    }
                });
            })),
        )
    }
}
