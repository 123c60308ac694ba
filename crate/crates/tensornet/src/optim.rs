//! Adam optimizer and the plateau learning-rate scheduler / early stopping.

use crate::params::ParamSet;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Bias-corrected Adam update applied in place in registration order.
/// `step` is 1-based.
pub fn adam_step<F: Scalar>(params: &mut ParamSet<F>, grads: &[Vec<F>], lr: f64, step: u64) {
    assert_eq!(grads.len(), params.len(), "gradient/parameter count mismatch");
    let b1 = F::from_f64(ADAM_BETA1);
    let b2 = F::from_f64(ADAM_BETA2);
    let one_m_b1 = F::from_f64(1.0 - ADAM_BETA1);
    let one_m_b2 = F::from_f64(1.0 - ADAM_BETA2);
    let bc1 = 1.0 - ADAM_BETA1.powi(step as i32);
    let bc2 = 1.0 - ADAM_BETA2.powi(step as i32);
    let lr_f = F::from_f64(lr / bc1);
    let inv_sqrt_bc2 = F::from_f64(1.0 / bc2.sqrt());
    let eps = F::from_f64(ADAM_EPS);

    for (i, grad) in grads.iter().enumerate() {
        let (m, v, value) = params.adam_buffers(crate::params::ParamId(i));
        assert_eq!(grad.len(), m.len());
        let vals = std::sync::Arc::make_mut(value);
        for k in 0..grad.len() {
            let g = grad[k];
            m[k] = b1 * m[k] + one_m_b1 * g;
            v[k] = b2 * v[k] + one_m_b2 * g * g;
            let denom = (v[k]).sqrt() * inv_sqrt_bc2 + eps;
            vals[k] -= lr_f * m[k] / denom;
        }
    }
}

/// Number of consecutive non-improving epochs before each learning-rate
/// reduction, and before training stops.
pub const LR_PATIENCE: u32 = 5;
pub const STOP_PATIENCE: u32 = 10;
pub const LR_FACTOR: f64 = 0.2;
pub const IMPROVEMENT_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub step: u64,
    pub learning_rate: f64,
    pub best_val_loss: f64,
    pub epochs_since_improvement: u32,
}

impl TrainState {
    pub fn new(learning_rate: f64) -> Self {
        assert!(learning_rate > 0.0);
        Self {
            step: 0,
            learning_rate,
            best_val_loss: f64::INFINITY,
            epochs_since_improvement: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchedulerDecision {
    pub reduced_lr: bool,
    pub stop: bool,
    pub improved: bool,
}

/// Plateau rule: a validation loss must beat the best seen by at least
/// 1e-4 to count as improvement. Every 5 consecutive non-improving epochs
/// the learning rate is multiplied by 0.2; after 10 consecutive
/// non-improving epochs the stop flag is raised.
pub fn scheduler_update(state: &mut TrainState, val_loss: f64) -> SchedulerDecision {
    if val_loss < state.best_val_loss - IMPROVEMENT_EPS {
        state.best_val_loss = val_loss;
        state.epochs_since_improvement = 0;
        return SchedulerDecision {
            reduced_lr: false,
            stop: false,
            improved: true,
        };
    }
    state.epochs_since_improvement += 1;
    let mut reduced = false;
    if state.epochs_since_improvement % LR_PATIENCE == 0 {
        state.learning_rate *= LR_FACTOR;
        reduced = true;
    }
    SchedulerDecision {
        reduced_lr: reduced,
        stop: state.epochs_since_improvement >= STOP_PATIENCE,
        improved: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_params() -> ParamSet<f64> {
        let mut p = ParamSet::new();
        p.add("a", vec![2], vec![1.0, -1.0]);
        p.add("b", vec![2], vec![1.0, -1.0]);
        p
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = simple_params();
        adam_step(&mut p, &[vec![0.0, 0.0], vec![0.0, 0.0]], 0.01, 1);
        assert_eq!(p.get(crate::params::ParamId(0)).value.as_slice(), &[1.0, -1.0]);
    }

    #[test]
    fn first_step_magnitude_is_about_lr() {
        // With bias correction, the first update is lr * g / (|g| + eps').
        let mut p = simple_params();
        adam_step(&mut p, &[vec![0.5, 0.5], vec![0.5, 0.5]], 0.01, 1);
        let v = p.get(crate::params::ParamId(0)).value.clone();
        assert!((v[0] - (1.0 - 0.01)).abs() < 1e-6, "{}", v[0]);
    }

    #[test]
    fn equal_gradients_update_identically() {
        let mut p = simple_params();
        for step in 1..=5 {
            adam_step(&mut p, &[vec![0.3, -0.7], vec![0.3, -0.7]], 0.005, step);
        }
        let a = p.get(crate::params::ParamId(0)).value.clone();
        let b = p.get(crate::params::ParamId(1)).value.clone();
        assert_eq!(a, b);
    }

    #[test]
    fn scheduler_keeps_lr_while_improving() {
        let mut s = TrainState::new(0.001);
        for loss in [1.0, 0.9, 0.8, 0.7, 0.6, 0.5] {
            let d = scheduler_update(&mut s, loss);
            assert!(!d.reduced_lr && !d.stop);
        }
        assert_eq!(s.learning_rate, 0.001);
    }

    #[test]
    fn five_flat_epochs_reduce_lr_by_factor_five() {
        let mut s = TrainState::new(0.001);
        scheduler_update(&mut s, 1.0);
        for i in 0..5 {
            let d = scheduler_update(&mut s, 1.0);
            if i < 4 {
                assert!(!d.reduced_lr);
            } else {
                assert!(d.reduced_lr);
            }
        }
        assert!((s.learning_rate - 0.0002).abs() < 1e-12);
    }

    #[test]
    fn ten_flat_epochs_signal_stop() {
        let mut s = TrainState::new(0.001);
        scheduler_update(&mut s, 1.0);
        let mut stopped = false;
        for _ in 0..10 {
            stopped = scheduler_update(&mut s, 1.0).stop;
        }
        assert!(stopped);
        assert_eq!(s.epochs_since_improvement, 10);
    }

    #[test]
    fn tiny_improvement_does_not_reset_patience() {
        let mut s = TrainState::new(0.001);
        scheduler_update(&mut s, 1.0);
        scheduler_update(&mut s, 1.0 - 1e-5);
        assert_eq!(s.epochs_since_improvement, 1);
    }
}
