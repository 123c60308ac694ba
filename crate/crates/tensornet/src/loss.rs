//! Softmax cross-entropy and the probability-vector type returned by
//! classifiers.

use crate::error::TensorError;
use crate::graph::{Graph, TensorId};
use crate::scalar::Scalar;

/// Length-K nonnegative vector summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self, TensorError> {
        if probs.is_empty() {
            return Err(TensorError::InvalidProbability("empty vector".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(TensorError::InvalidProbability(
                "entries must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(TensorError::InvalidProbability(format!(
                "sum {sum} differs from 1 by more than 1e-6"
            )));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest probability; ties break to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.0.iter().enumerate().skip(1) {
            if *p > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Elementwise mean of several probability vectors; the mean of simplex
    /// points stays on the simplex.
    pub fn mean<'a>(vectors: impl IntoIterator<Item = &'a ProbVector>) -> Option<ProbVector> {
        let mut iter = vectors.into_iter();
        let first = iter.next()?;
        let mut acc: Vec<f64> = first.0.clone();
        let mut count = 1usize;
        for v in iter {
            debug_assert_eq!(v.len(), acc.len());
            for (a, p) in acc.iter_mut().zip(&v.0) {
                *a += p;
            }
            count += 1;
        }
        let inv = 1.0 / count as f64;
        for a in acc.iter_mut() {
            *a *= inv;
        }
        // Renormalize away accumulated rounding before validation.
        let sum: f64 = acc.iter().sum();
        if sum > 0.0 {
            for a in acc.iter_mut() {
                *a /= sum;
            }
        }
        ProbVector::new(acc).ok()
    }
}

impl<F: Scalar> Graph<F> {
    /// Numerically stable softmax + cross-entropy against an integer label.
    /// Returns the scalar loss node together with the probabilities.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: TensorId,
        label: usize,
    ) -> Result<(TensorId, ProbVector), TensorError> {
        let shape = self.shape(logits).to_vec();
        let k: usize = shape.iter().product();
        if label >= k {
            return Err(TensorError::LabelOutOfRange { label, k });
        }
        let vx = self.value_arc(logits);
        let m = vx.iter().fold(vx[0], |acc, &v| acc.max(v));
        let mut exps = vec![F::ZERO; k];
        let mut sum = F::ZERO;
        for i in 0..k {
            exps[i] = (vx[i] - m).exp();
            sum += exps[i];
        }
        let inv = F::ONE / sum;
        let mut probs = vec![F::ZERO; k];
        for i in 0..k {
            probs[i] = exps[i] * inv;
        }
        let loss = sum.ln() - (vx[label] - m);
        let prob_vec = {
            let mut p64: Vec<f64> = probs.iter().map(|p| p.to_f64()).collect();
            let s: f64 = p64.iter().sum();
            for p in p64.iter_mut() {
                *p /= s;
            }
            ProbVector::new(p64)?
        };
        let req = self.requires_grad(logits);
        let p = probs;
        let id = self.push(
            vec![1],
            vec![loss],
            req,
            Some(Box::new(move |g, sink| {
                let gs = g[0];
                sink.accumulate(logits, |dst| {
                    for (i, d) in dst.iter_mut().enumerate() {
                        let onehot = if i == label { F::ONE } else { F::ZERO };
                        *d += gs * (p[i] - onehot);
                    }
                });
            })),
        );
        Ok((id, prob_vec))
    }

    /// Softmax probabilities of a logits vector without a loss (inference
    /// path).
    pub fn softmax_probs(&self, logits: TensorId) -> Result<ProbVector, TensorError> {
        let vx = self.value(logits);
        let m = vx.iter().fold(vx[0], |acc, &v| acc.max(v));
        let exps: Vec<f64> = vx.iter().map(|&v| (v - m).to_f64().exp()).collect();
        let sum: f64 = exps.iter().sum();
        ProbVector::new(exps.into_iter().map(|e| e / sum).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_uniform_probs_and_ln_k_loss() {
        let mut g: Graph<f64> = Graph::new();
        let logits = g.constant(vec![10], vec![0.5; 10]);
        let (loss, probs) = g.softmax_cross_entropy(logits, 3).unwrap();
        assert!((g.scalar(loss) - 10f64.ln()).abs() < 1e-12);
        for p in probs.probs() {
            assert!((p - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_logits_do_not_overflow() {
        let mut g: Graph<f64> = Graph::new();
        let logits = g.constant(vec![2], vec![1000.0, 0.0]);
        let (loss, probs) = g.softmax_cross_entropy(logits, 0).unwrap();
        assert!(g.scalar(loss).is_finite());
        assert!(g.scalar(loss) < 1e-12);
        assert!((probs.probs()[0] - 1.0).abs() < 1e-12);
        assert!(probs.probs()[1].abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_label() {
        let mut g: Graph<f64> = Graph::new();
        let logits = g.constant(vec![4], vec![0.0; 4]);
        assert!(matches!(
            g.softmax_cross_entropy(logits, 4),
            Err(TensorError::LabelOutOfRange { label: 4, k: 4 })
        ));
    }

    #[test]
    fn gradient_is_probs_minus_onehot() {
        let mut g: Graph<f64> = Graph::new();
        let data = std::sync::Arc::new(vec![0.3, -0.2, 1.1, 0.0]);
        let logits = g.leaf(vec![4], data, true);
        let (loss, probs) = g.softmax_cross_entropy(logits, 2).unwrap();
        let mut grads = g.backward(loss).unwrap();
        let dl = grads.take(logits).unwrap();
        for (i, d) in dl.iter().enumerate() {
            let expect = probs.probs()[i] - if i == 2 { 1.0 } else { 0.0 };
            assert!((d - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_breaks_ties_to_lowest_index() {
        let p = ProbVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(p.argmax(), 0);
        let p = ProbVector::new(vec![0.2, 0.4, 0.4]).unwrap();
        assert_eq!(p.argmax(), 1);
    }

    #[test]
    fn mean_stays_on_simplex() {
        let a = ProbVector::new(vec![0.2, 0.8]).unwrap();
        let b = ProbVector::new(vec![0.6, 0.4]).unwrap();
        let m = ProbVector::mean([&a, &b]).unwrap();
        assert!((m.probs()[0] - 0.4).abs() < 1e-12);
        assert!((m.probs()[1] - 0.6).abs() < 1e-12);
        assert_eq!(m.argmax(), 1);
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbVector::new(vec![]).is_err());
    }
}
