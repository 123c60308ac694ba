//! Elementwise graph operations.

use crate::graph::{Graph, TensorId};
use crate::scalar::Scalar;

impl<F: Scalar> Graph<F> {
    /// Elementwise sum of two same-shape tensors.
    pub fn add(&mut self, a: TensorId, b: TensorId) -> TensorId {
        assert_eq!(
            self.shape(a),
            self.shape(b),
            "add requires matching shapes"
        );
        let va = self.value_arc(a);
        let vb = self.value_arc(b);
        let out: Vec<F> = va.iter().zip(vb.iter()).map(|(&x, &y)| x + y).collect();
        let req = self.requires_grad(a) || self.requires_grad(b);
        self.push(
            self.shape(a).to_vec(),
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(a, |dst| {
                    for (d, &gi) in dst.iter_mut().zip(g) {
                        *d += gi;
                    }
                });
                sink.accumulate(b, |dst| {
                    for (d, &gi) in dst.iter_mut().zip(g) {
                        *d += gi;
                    }
                });
            })),
        )
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: TensorId, b: TensorId) -> TensorId {
        assert_eq!(
            self.shape(a),
            self.shape(b),
            "mul requires matching shapes"
        );
        let va = self.value_arc(a);
        let vb = self.value_arc(b);
        let out: Vec<F> = va.iter().zip(vb.iter()).map(|(&x, &y)| x * y).collect();
        let req = self.requires_grad(a) || self.requires_grad(b);
        let (ca, cb) = (va.clone(), vb.clone());
        self.push(
            self.shape(a).to_vec(),
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(a, |dst| {
                    for ((d, &gi), &y) in dst.iter_mut().zip(g).zip(cb.iter()) {
                        *d += gi * y;
                    }
                });
                sink.accumulate(b, |dst| {
                    for ((d, &gi), &x) in dst.iter_mut().zip(g).zip(ca.iter()) {
                        *d += gi * x;
                    }
                });
            })),
        )
    }

    /// y = mul * x + add, with scalar coefficients.
    pub fn affine(&mut self, x: TensorId, mul: f64, add: f64) -> TensorId {
        let vx = self.value_arc(x);
        let m = F::from_f64(mul);
        let a = F::from_f64(add);
        let out: Vec<F> = vx.iter().map(|&v| m * v + a).collect();
        let req = self.requires_grad(x);
        self.push(
            self.shape(x).to_vec(),
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(x, |dst| {
                    for (d, &gi) in dst.iter_mut().zip(g) {
                        *d += gi * m;
                    }
                });
            })),
        )
    }

    pub fn scale(&mut self, x: TensorId, mul: f64) -> TensorId {
        self.affine(x, mul, 0.0)
    }

    pub fn relu(&mut self, x: TensorId) -> TensorId {
        let vx = self.value_arc(x);
        let out: Vec<F> = vx.iter().map(|&v| v.max(F::ZERO)).collect();
        let req = self.requires_grad(x);
        self.push(
            self.shape(x).to_vec(),
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(x, |dst| {
                    for ((d, &gi), &v) in dst.iter_mut().zip(g).zip(vx.iter()) {
                        if v > F::ZERO {
                            *d += gi;
                        }
                    }
                });
            })),
        )
    }

    pub fn sigmoid(&mut self, x: TensorId) -> TensorId {
        let vx = self.value_arc(x);
        let out: Vec<F> = vx
            .iter()
            .map(|&v| F::ONE / (F::ONE + (-v).exp()))
            .collect();
        let req = self.requires_grad(x);
        let y = out.clone();
        self.push(
            self.shape(x).to_vec(),
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(x, |dst| {
                    for ((d, &gi), &yi) in dst.iter_mut().zip(g).zip(y.iter()) {
                        *d += gi * yi * (F::ONE - yi);
                    }
                });
            })),
        )
    }

    /// Reinterprets the value under a new shape with the same element count
    /// (flatten and friends). Gradients pass through unchanged.
    pub fn reshape(&mut self, x: TensorId, new_shape: Vec<usize>) -> TensorId {
        assert_eq!(
            new_shape.iter().product::<usize>(),
            self.value(x).len(),
            "reshape must preserve element count"
        );
        let vx = self.value_arc(x);
        let out = vx.to_vec();
        let req = self.requires_grad(x);
        self.push(
            new_shape,
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(x, |dst| {
                    for (d, &gi) in dst.iter_mut().zip(g) {
                        *d += gi;
                    }
                });
            })),
        )
    }

    /// Sum of all elements, as a scalar node.
    pub fn sum_all(&mut self, x: TensorId) -> TensorId {
        let vx = self.value_arc(x);
        let total = vx.iter().copied().sum();
        let req = self.requires_grad(x);
        let n = vx.len();
        self.push(
            vec![1],
            vec![total],
            req,
            Some(Box::new(move |g, sink| {
                let gi = g[0];
                sink.accumulate(x, |dst| {
                    for d in dst.iter_mut().take(n) {
                        *d += gi;
                    }
                });
            })),
        )
    }

    pub fn tanh_act(&mut self, x: TensorId) -> TensorId {
        let vx = self.value_arc(x);
        let out: Vec<F> = vx.iter().map(|&v| v.tanh()).collect();
        let req = self.requires_grad(x);
        let y = out.clone();
        self.push(
            self.shape(x).to_vec(),
            out,
            req,
            Some(Box::new(move |g, sink| {
                sink.accumulate(x, |dst| {
                    for ((d, &gi), &yi) in dst.iter_mut().zip(g).zip(y.iter()) {
                        *d += gi * (F::ONE - yi * yi);
                    }
                });
            })),
        )
    }
}
