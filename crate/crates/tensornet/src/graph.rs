//! Define-by-run computation graph with reverse-mode differentiation.
//!
//! Each operation appends a node holding its output value and a backward
//! closure. `backward` walks the tape in reverse id order and accumulates
//! gradients in a fixed order, so results are run-to-run deterministic.

use crate::error::TensorError;
use crate::scalar::Scalar;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId(pub(crate) usize);

/// Gradient accumulator passed to backward closures.
pub struct GradSink<'a, F: Scalar> {
    grads: &'a mut [Option<Vec<F>>],
    sizes: &'a [usize],
    requires: &'a [bool],
}

impl<'a, F: Scalar> GradSink<'a, F> {
    /// Accumulates into the gradient buffer of `id`, creating it zeroed on
    /// first use. No-op when the target does not require gradients.
    pub fn accumulate(&mut self, id: TensorId, write: impl FnOnce(&mut [F])) {
        if !self.requires[id.0] {
            return;
        }
        let slot = &mut self.grads[id.0];
        if slot.is_none() {
            *slot = Some(vec![F::ZERO; self.sizes[id.0]]);
        }
        write(slot.as_mut().expect("just initialized"));
    }

    pub fn wants(&self, id: TensorId) -> bool {
        self.requires[id.0]
    }
}

type BackwardFn<F> = Box<dyn Fn(&[F], &mut GradSink<F>)>;

struct Node<F: Scalar> {
    shape: Vec<usize>,
    value: Arc<Vec<F>>,
    backward: Option<BackwardFn<F>>,
    requires_grad: bool,
}

/// Per-invocation computation graph. Build one per sample, run `backward`,
/// and drop it; parameters live outside the graph and are re-leafed on every
/// forward pass.
pub struct Graph<F: Scalar> {
    nodes: Vec<Node<F>>,
}

impl<F: Scalar> Default for Graph<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> Graph<F> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub(crate) fn push(
        &mut self,
        shape: Vec<usize>,
        value: Vec<F>,
        requires_grad: bool,
        backward: Option<BackwardFn<F>>,
    ) -> TensorId {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        self.nodes.push(Node {
            shape,
            value: Arc::new(value),
            backward,
            requires_grad,
        });
        TensorId(self.nodes.len() - 1)
    }

    /// Adds a leaf holding shared data. Gradients are retained for leaves
    /// with `requires_grad`.
    pub fn leaf(&mut self, shape: Vec<usize>, data: Arc<Vec<F>>, requires_grad: bool) -> TensorId {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "leaf shape/data mismatch"
        );
        self.nodes.push(Node {
            shape,
            value: data,
            backward: None,
            requires_grad,
        });
        TensorId(self.nodes.len() - 1)
    }

    /// Adds a constant leaf that never receives gradients.
    pub fn constant(&mut self, shape: Vec<usize>, data: Vec<F>) -> TensorId {
        self.leaf(shape, Arc::new(data), false)
    }

    pub fn value(&self, id: TensorId) -> &[F] {
        &self.nodes[id.0].value
    }

    pub(crate) fn value_arc(&self, id: TensorId) -> Arc<Vec<F>> {
        Arc::clone(&self.nodes[id.0].value)
    }

    pub fn shape(&self, id: TensorId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn requires_grad(&self, id: TensorId) -> bool {
        self.nodes[id.0].requires_grad
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Scalar value of a single-element tensor.
    pub fn scalar(&self, id: TensorId) -> F {
        debug_assert_eq!(self.nodes[id.0].value.len(), 1);
        self.nodes[id.0].value[0]
    }

    /// Reverse pass from a scalar root. Returns the gradients of all leaves
    /// that require gradients; intermediate gradients are freed as soon as
    /// their node has been processed.
    pub fn backward(&self, root: TensorId) -> Result<Gradients<F>, TensorError> {
        if self.nodes[root.0].value.len() != 1 {
            return Err(TensorError::NonScalarRoot {
                elements: self.nodes[root.0].value.len(),
            });
        }
        let n = root.0 + 1;
        let sizes: Vec<usize> = self.nodes[..n].iter().map(|nd| nd.value.len()).collect();
        let requires: Vec<bool> = self.nodes[..n].iter().map(|nd| nd.requires_grad).collect();
        let mut grads: Vec<Option<Vec<F>>> = (0..n).map(|_| None).collect();
        grads[root.0] = Some(vec![F::ONE]);

        for id in (0..n).rev() {
            let Some(grad) = grads[id].take() else {
                continue;
            };
            let node = &self.nodes[id];
            if let Some(back) = &node.backward {
                let mut sink = GradSink {
                    grads: &mut grads,
                    sizes: &sizes,
                    requires: &requires,
                };
                back(&grad, &mut sink);
            } else if node.requires_grad {
                // Leaf: keep the gradient.
                grads[id] = Some(grad);
            }
        }
        Ok(Gradients { by_node: grads })
    }
}

/// Gradients of the leaves of one backward pass, indexed by tensor id.
pub struct Gradients<F: Scalar> {
    by_node: Vec<Option<Vec<F>>>,
}

impl<F: Scalar> Gradients<F> {
    pub fn take(&mut self, id: TensorId) -> Option<Vec<F>> {
        self.by_node.get_mut(id.0).and_then(Option::take)
    }

    pub fn get(&self, id: TensorId) -> Option<&[F]> {
        self.by_node.get(id.0).and_then(|g| g.as_deref())
    }
}
