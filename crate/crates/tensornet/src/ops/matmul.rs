//! Matrix products and the dense (fully connected) operation.

use crate::error::TensorError;
use crate::graph::{Graph, TensorId};
use crate::scalar::Scalar;

fn as_matrix(shape: &[usize]) -> (usize, usize) {
    match shape.len() {
        1 => (1, shape[0]),
        2 => (shape[0], shape[1]),
        _ => {
            let cols = *shape.last().unwrap();
            (shape.iter().product::<usize>() / cols, cols)
        }
    }
}

impl<F: Scalar> Graph<F> {
    /// c[m,n] = a[m,k] * b[k,n]
    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> TensorId {
        let (m, ka) = as_matrix(self.shape(a));
        let (kb, n) = as_matrix(self.shape(b));
        assert_eq!(ka, kb, "matmul inner extents differ: {ka} vs {kb}");
        let va = self.value_arc(a);
        let vb = self.value_arc(b);
        let mut out = vec![F::ZERO; m * n];
        F::gemm(
            m, ka, n, F::ONE, &va, ka as isize, 1, &vb, n as isize, 1, F::ZERO, &mut out,
            n as isize, 1,
        );
        let req = self.requires_grad(a) || self.requires_grad(b);
        let k = ka;
        self.push(
            vec![m, n],
            out,
            req,
            Some(Box::new(move |g, sink| {
                // da = g * b^T
                sink.accumulate(a, |dst| {
                    F::gemm(
                        m, n, k, F::ONE, g, n as isize, 1, &vb, 1, n as isize, F::ONE, dst,
                        k as isize, 1,
                    );
                });
                // db = a^T * g
                sink.accumulate(b, |dst| {
                    F::gemm(
                        k, m, n, F::ONE, &va, 1, k as isize, g, n as isize, 1, F::ONE, dst,
                        n as isize, 1,
                    );
                });
            })),
        )
    }

    /// c[m,n] = a[m,k] * b[n,k]^T
    pub fn matmul_nt(&mut self, a: TensorId, b: TensorId) -> TensorId {
        let (m, ka) = as_matrix(self.shape(a));
        let (n, kb) = as_matrix(self.shape(b));
        assert_eq!(ka, kb, "matmul_nt inner extents differ: {ka} vs {kb}");
        let va = self.value_arc(a);
        let vb = self.value_arc(b);
        let mut out = vec![F::ZERO; m * n];
        F::gemm(
            m, ka, n, F::ONE, &va, ka as isize, 1, &vb, 1, ka as isize, F::ZERO, &mut out,
            n as isize, 1,
        );
        let req = self.requires_grad(a) || self.requires_grad(b);
        let k = ka;
        self.push(
            vec![m, n],
            out,
            req,
            Some(Box::new(move |g, sink| {
                // da = g * b
                sink.accumulate(a, |dst| {
                    F::gemm(
                        m, n, k, F::ONE, g, n as isize, 1, &vb, k as isize, 1, F::ONE, dst,
                        k as isize, 1,
                    );
                });
                // db = g^T * a
                sink.accumulate(b, |dst| {
                    F::gemm(
                        n, m, k, F::ONE, g, 1, n as isize, &va, k as isize, 1, F::ONE, dst,
                        k as isize, 1,
                    );
                });
            })),
        )
    }

    /// Linear transform over the last axis: y = x * w^T + bias, with
    /// `w: [out, in]` and `bias: [out]`. The input's trailing extent must
    /// equal `in`; any leading extents are preserved.
    pub fn dense(
        &mut self,
        x: TensorId,
        w: TensorId,
        bias: TensorId,
    ) -> Result<TensorId, TensorError> {
        let in_dim = self.shape(w)[1];
        let out_dim = self.shape(w)[0];
        let x_shape = self.shape(x).to_vec();
        let got = *x_shape.last().expect("dense input has at least one axis");
        if got != in_dim {
            return Err(TensorError::DenseExtentMismatch {
                expected: in_dim,
                got,
            });
        }
        debug_assert_eq!(self.shape(bias), [out_dim]);
        let rows: usize = x_shape.iter().product::<usize>() / in_dim;
        let vx = self.value_arc(x);
        let vw = self.value_arc(w);
        let vb = self.value_arc(bias);

        let mut out = vec![F::ZERO; rows * out_dim];
        for r in 0..rows {
            out[r * out_dim..(r + 1) * out_dim].copy_from_slice(&vb);
        }
        F::gemm(
            rows,
            in_dim,
            out_dim,
            F::ONE,
            &vx,
            in_dim as isize,
            1,
            &vw,
            1,
            in_dim as isize,
            F::ONE,
            &mut out,
            out_dim as isize,
            1,
        );

        let mut out_shape = x_shape;
        *out_shape.last_mut().unwrap() = out_dim;
        let req = self.requires_grad(x) || self.requires_grad(w) || self.requires_grad(bias);
        Ok(self.push(
            out_shape,
            out,
            req,
            Some(Box::new(move |g, sink| {
                // dx = g * w
                sink.accumulate(x, |dst| {
                    F::gemm(
                        rows,
                        out_dim,
                        in_dim,
                        F::ONE,
                        g,
                        out_dim as isize,
                        1,
                        &vw,
                        in_dim as isize,
                        1,
                        F::ONE,
                        dst,
                        in_dim as isize,
                        1,
                    );
                });
                // dw = g^T * x
                sink.accumulate(w, |dst| {
                    F::gemm(
                        out_dim,
                        rows,
                        in_dim,
                        F::ONE,
                        g,
                        1,
                        out_dim as isize,
                        &vx,
                        in_dim as isize,
                        1,
                        F::ONE,
                        dst,
                        in_dim as isize,
                        1,
                    );
                });
                // dbias = column sums of g
                sink.accumulate(bias, |dst| {
                    for r in 0..rows {
                        for (d, &gi) in dst.iter_mut().zip(&g[r * out_dim..(r + 1) * out_dim]) {
                            *d += gi;
                        }
                    }
                });
            })),
        ))
    }
}
