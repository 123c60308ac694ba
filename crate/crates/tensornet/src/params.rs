//! Named trainable parameters with Adam moment accumulators.

use crate::graph::{Gradients, Graph, TensorId};
use crate::scalar::Scalar;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone)]
pub struct Parameter<F: Scalar> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Arc<Vec<F>>,
    pub adam_m: Vec<F>,
    pub adam_v: Vec<F>,
}

/// The full parameter collection of one model, in a fixed registration
/// order. That order defines gradient-reduction and update order, which
/// keeps training bit-reproducible.
#[derive(Debug, Clone, Default)]
pub struct ParamSet<F: Scalar> {
    params: Vec<Parameter<F>>,
}

impl<F: Scalar> ParamSet<F> {
    pub fn new() -> Self {
        Self { params: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<F>) -> ParamId {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        let n = data.len();
        self.params.push(Parameter {
            name: name.into(),
            shape,
            value: Arc::new(data),
            adam_m: vec![F::ZERO; n],
            adam_v: vec![F::ZERO; n],
        });
        ParamId(self.params.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Parameter<F> {
        &self.params[id.0]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter<F>> {
        self.params.iter()
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Registers every parameter as a gradient-requiring leaf of `graph`,
    /// in registration order.
    pub fn leaves(&self, graph: &mut Graph<F>) -> ParamLeaves {
        let ids = self
            .params
            .iter()
            .map(|p| graph.leaf(p.shape.clone(), Arc::clone(&p.value), true))
            .collect();
        ParamLeaves { ids }
    }

    /// Extracts per-parameter gradients from a backward pass; parameters
    /// untouched by the loss get zero gradients.
    pub fn collect_grads(&self, grads: &mut Gradients<F>, leaves: &ParamLeaves) -> Vec<Vec<F>> {
        self.params
            .iter()
            .enumerate()
            .map(|(i, p)| {
                grads
                    .take(leaves.ids[i])
                    .unwrap_or_else(|| vec![F::ZERO; p.value.len()])
            })
            .collect()
    }

    pub fn values_mut(&mut self, id: ParamId) -> &mut Vec<F> {
        Arc::make_mut(&mut self.params[id.0].value)
    }

    /// Adds `delta` to a single coordinate (used by the finite-difference
    /// gradient checker).
    pub fn nudge(&mut self, id: ParamId, index: usize, delta: F) {
        Arc::make_mut(&mut self.params[id.0].value)[index] += delta;
    }

    pub(crate) fn adam_buffers(
        &mut self,
        id: ParamId,
    ) -> (&mut Vec<F>, &mut Vec<F>, &mut Arc<Vec<F>>) {
        let p = &mut self.params[id.0];
        (&mut p.adam_m, &mut p.adam_v, &mut p.value)
    }

    /// Copies parameter values (not optimizer state) from another set with
    /// identical structure.
    pub fn copy_values_from(&mut self, other: &ParamSet<F>) {
        assert_eq!(self.params.len(), other.params.len());
        for (dst, src) in self.params.iter_mut().zip(&other.params) {
            assert_eq!(dst.shape, src.shape);
            dst.value = Arc::clone(&src.value);
        }
    }
}

/// Graph leaf ids of a `ParamSet`, indexable by `ParamId`.
pub struct ParamLeaves {
    ids: Vec<TensorId>,
}

impl ParamLeaves {
    pub fn id(&self, p: ParamId) -> TensorId {
        self.ids[p.0]
    }
}

/// Fan-in-scaled uniform initialization in (-1/sqrt(fan_in), +1/sqrt(fan_in)).
pub fn fan_in_uniform<F: Scalar>(rng: &mut impl rand::Rng, fan_in: usize, n: usize) -> Vec<F> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    (0..n)
        .map(|_| F::from_f64(rng.gen_range(-bound..bound)))
        .collect()
}
