//! 2D convolution (same padding, stride 1), max pooling and global average
//! pooling. Feature maps are stored [height, width, channels] row-major with
//! channels fastest.

use crate::error::TensorError;
use crate::graph::{Graph, TensorId};
use crate::scalar::Scalar;

fn im2col<F: Scalar>(x: &[F], h: usize, w: usize, cin: usize, kh: usize, kw: usize) -> Vec<F> {
    let (ph, pw) = (kh / 2, kw / 2);
    let cols = kh * kw * cin;
    let mut m = vec![F::ZERO; h * w * cols];
    for i in 0..h {
        for j in 0..w {
            let base = (i * w + j) * cols;
            let mut cidx = 0;
            for dh in 0..kh {
                let si = i + dh;
                if si < ph || si >= h + ph {
                    cidx += kw * cin;
                    continue;
                }
                let si = si - ph;
                for dw in 0..kw {
                    let sj = j + dw;
                    if sj < pw || sj >= w + pw {
                        cidx += cin;
                        continue;
                    }
                    let sj = sj - pw;
                    let src = (si * w + sj) * cin;
                    m[base + cidx..base + cidx + cin].copy_from_slice(&x[src..src + cin]);
                    cidx += cin;
                }
            }
        }
    }
    m
}

/// Transpose of `im2col`: scatter-adds a [h*w, kh*kw*cin] matrix back onto
/// the input layout.
fn col2im_add<F: Scalar>(
    m: &[F],
    h: usize,
    w: usize,
    cin: usize,
    kh: usize,
    kw: usize,
    dst: &mut [F],
) {
    let (ph, pw) = (kh / 2, kw / 2);
    let cols = kh * kw * cin;
    for i in 0..h {
        for j in 0..w {
            let base = (i * w + j) * cols;
            let mut cidx = 0;
            for dh in 0..kh {
                let si = i + dh;
                if si < ph || si >= h + ph {
                    cidx += kw * cin;
                    continue;
                }
                let si = si - ph;
                for dw in 0..kw {
                    let sj = j + dw;
                    if sj < pw || sj >= w + pw {
                        cidx += cin;
                        continue;
                    }
                    let sj = sj - pw;
                    let d = (si * w + sj) * cin;
                    for c in 0..cin {
                        dst[d + c] += m[base + cidx + c];
                    }
                    cidx += cin;
                }
            }
        }
    }
}

impl<F: Scalar> Graph<F> {
    /// Same-padded stride-1 convolution of `x: [h, w, cin]` with kernels
    /// `k: [kh, kw, cin, cout]` plus a per-channel bias. Spatial extents are
    /// preserved for any h, w >= 1.
    pub fn conv2d(
        &mut self,
        x: TensorId,
        kernels: TensorId,
        bias: TensorId,
    ) -> Result<TensorId, TensorError> {
        let xs = self.shape(x).to_vec();
        let ks = self.shape(kernels).to_vec();
        assert_eq!(xs.len(), 3, "conv2d input must be [h, w, c]");
        assert_eq!(ks.len(), 4, "conv2d kernels must be [kh, kw, cin, cout]");
        let (h, w, cin) = (xs[0], xs[1], xs[2]);
        let (kh, kw, kcin, cout) = (ks[0], ks[1], ks[2], ks[3]);
        assert!(kh % 2 == 1 && kw % 2 == 1, "conv2d kernels must be odd-sized");
        if cin != kcin {
            return Err(TensorError::ConvChannelMismatch {
                expected: kcin,
                got: cin,
            });
        }
        let vx = self.value_arc(x);
        let vk = self.value_arc(kernels);
        let vb = self.value_arc(bias);
        debug_assert_eq!(vb.len(), cout);

        let cols = kh * kw * cin;
        let patches = im2col(&vx, h, w, cin, kh, kw);
        let mut out = vec![F::ZERO; h * w * cout];
        for r in 0..h * w {
            out[r * cout..(r + 1) * cout].copy_from_slice(&vb);
        }
        F::gemm(
            h * w,
            cols,
            cout,
            F::ONE,
            &patches,
            cols as isize,
            1,
            &vk,
            cout as isize,
            1,
            F::ONE,
            &mut out,
            cout as isize,
            1,
        );

        let req = self.requires_grad(x) || self.requires_grad(kernels) || self.requires_grad(bias);
        Ok(self.push(
            vec![h, w, cout],
            out,
            req,
            Some(Box::new(move |g, sink| {
                // Patches are recomputed here instead of captured; they are
                // the largest buffer in the whole backward pass.
                if sink.wants(kernels) || sink.wants(x) {
                    if sink.wants(kernels) {
                        let patches = im2col(&vx, h, w, cin, kh, kw);
                        sink.accumulate(kernels, |dst| {
                            F::gemm(
                                cols,
                                h * w,
                                cout,
                                F::ONE,
                                &patches,
                                1,
                                cols as isize,
                                g,
                                cout as isize,
                                1,
                                F::ONE,
                                dst,
                                cout as isize,
                                1,
                            );
                        });
                    }
                    if sink.wants(x) {
                        let mut dcol = vec![F::ZERO; h * w * cols];
                        F::gemm(
                            h * w,
                            cout,
                            cols,
                            F::ONE,
                            g,
                            cout as isize,
                            1,
                            &vk,
                            1,
                            cout as isize,
                            F::ZERO,
                            &mut dcol,
                            cols as isize,
                            1,
                        );
                        sink.accumulate(x, |dst| {
                            col2im_add(&dcol, h, w, cin, kh, kw, dst);
                        });
                    }
                }
                sink.accumulate(bias, |dst| {
                    for r in 0..h * w {
                        for (d, &gi) in dst.iter_mut().zip(&g[r * cout..(r + 1) * cout]) {
                            *d += gi;
                        }
                    }
                });
            })),
        ))
    }

    /// Drops trailing columns of a [h, w, c] tensor, keeping `new_w`.
    pub fn crop_width(&mut self, x: TensorId, new_w: usize) -> TensorId {
        let xs = self.shape(x).to_vec();
        assert_eq!(xs.len(), 3, "crop_width input must be [h, w, c]");
        let (h, w, c) = (xs[0], xs[1], xs[2]);
        assert!(new_w <= w, "crop_width cannot grow the tensor");
        if new_w == w {
            // Still emit a node so callers can treat the result uniformly.
        }
        let vx = self.value_arc(x);
        let mut out = Vec::with_capacity(h * new_w * c);
        for i in 0..h {
            let lo = (i * w) * c;
            out.extend_from_slice(&vx[lo..lo + new_w * c]);
        }
        let req = self.requires_grad(x);
        self.push(
            vec![h, new_w, c],
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(x, |dst| {
                    for i in 0..h {
                        let src = (i * new_w) * c;
                        let d0 = (i * w) * c;
                        for k in 0..new_w * c {
                            dst[d0 + k] += g[src + k];
                        }
                    }
                });
            })),
        )
    }

    /// 2x2 max pooling with stride 2. Gradients route to the argmax of each
    /// window, first occurrence winning on ties.
    pub fn max_pool2(&mut self, x: TensorId) -> Result<TensorId, TensorError> {
        let xs = self.shape(x).to_vec();
        assert_eq!(xs.len(), 3, "max_pool2 input must be [h, w, c]");
        let (h, w, c) = (xs[0], xs[1], xs[2]);
        if h % 2 != 0 || w % 2 != 0 {
            return Err(TensorError::PoolOddExtent { h, w });
        }
        let vx = self.value_arc(x);
        let (oh, ow) = (h / 2, w / 2);
        let mut out = vec![F::ZERO; oh * ow * c];
        let mut argmax = vec![0u32; oh * ow * c];
        for i in 0..oh {
            for j in 0..ow {
                for ch in 0..c {
                    let mut best_idx = ((2 * i) * w + 2 * j) * c + ch;
                    let mut best = vx[best_idx];
                    for (di, dj) in [(0usize, 1usize), (1, 0), (1, 1)] {
                        let idx = ((2 * i + di) * w + 2 * j + dj) * c + ch;
                        if vx[idx] > best {
                            best = vx[idx];
                            best_idx = idx;
                        }
                    }
                    let o = (i * ow + j) * c + ch;
                    out[o] = best;
                    argmax[o] = best_idx as u32;
                }
            }
        }
        let req = self.requires_grad(x);
        Ok(self.push(
            vec![oh, ow, c],
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(x, |dst| {
                    for (o, &gi) in g.iter().enumerate() {
                        dst[argmax[o] as usize] += gi;
                    }
                });
            })),
        ))
    }

    /// Global average pooling over both spatial axes: [h, w, c] -> [c].
    pub fn global_avg_pool2d(&mut self, x: TensorId) -> TensorId {
        let xs = self.shape(x).to_vec();
        assert_eq!(xs.len(), 3, "global_avg_pool2d input must be [h, w, c]");
        let (h, w, c) = (xs[0], xs[1], xs[2]);
        let vx = self.value_arc(x);
        let inv = F::from_f64(1.0 / (h * w) as f64);
        let mut out = vec![F::ZERO; c];
        for pos in 0..h * w {
            for ch in 0..c {
                out[ch] += vx[pos * c + ch];
            }
        }
        for o in out.iter_mut() {
            *o *= inv;
        }
        let req = self.requires_grad(x);
        self.push(
            vec![c],
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(x, |dst| {
                    for pos in 0..h * w {
                        for (ch, &gi) in g.iter().enumerate() {
                            dst[pos * c + ch] += gi * inv;
                        }
                    }
                });
            })),
        )
    }

    /// Global average pooling over the timestep axis: [t, f] -> [f].
    pub fn global_avg_pool1d(&mut self, x: TensorId) -> TensorId {
        let xs = self.shape(x).to_vec();
        assert_eq!(xs.len(), 2, "global_avg_pool1d input must be [t, f]");
        let (t, f) = (xs[0], xs[1]);
        let vx = self.value_arc(x);
        let inv = F::from_f64(1.0 / t as f64);
        let mut out = vec![F::ZERO; f];
        for step in 0..t {
            for feat in 0..f {
                out[feat] += vx[step * f + feat];
            }
        }
        for o in out.iter_mut() {
            *o *= inv;
        }
        let req = self.requires_grad(x);
        self.push(
            vec![f],
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(x, |dst| {
                    for step in 0..t {
                        for (feat, &gi) in g.iter().enumerate() {
                            dst[step * f + feat] += gi * inv;
                        }
                    }
                });
            })),
        )
    }
}
