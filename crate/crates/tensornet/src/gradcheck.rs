//! Central finite-difference verification of analytic gradients.
//!
//! Runs in double precision. The loss builder is invoked repeatedly with the
//! same (captured) inputs while single parameter coordinates are nudged by
//! +/- h.

use crate::graph::{Graph, TensorId};
use crate::params::{ParamId, ParamLeaves, ParamSet};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_param: Option<String>,
    pub worst_coord: usize,
    pub coords_checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

/// Relative error with a floor so near-zero gradient pairs compare
/// absolutely rather than blowing up.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let denom = (analytic.abs() + numeric.abs()).max(1e-2);
    (analytic - numeric).abs() / denom
}

/// Compares the analytic gradient of every parameter against central finite
/// differences of the loss. `max_coords_per_param` caps how many coordinates
/// of each parameter tensor are probed (sampled deterministically from
/// `seed`); `None` probes every coordinate.
pub fn grad_check(
    params: &mut ParamSet<f64>,
    loss_fn: &mut dyn FnMut(&mut Graph<f64>, &ParamLeaves) -> TensorId,
    max_coords_per_param: Option<usize>,
    h: f64,
    seed: u64,
) -> GradCheckReport {
    // Analytic gradients.
    let mut graph = Graph::new();
    let leaves = params.leaves(&mut graph);
    let root = loss_fn(&mut graph, &leaves);
    let mut grads = graph.backward(root).expect("scalar loss");
    let analytic = params.collect_grads(&mut grads, &leaves);
    drop(graph);

    let eval = |params: &mut ParamSet<f64>, loss_fn: &mut dyn FnMut(&mut Graph<f64>, &ParamLeaves) -> TensorId| {
        let mut g = Graph::new();
        let leaves = params.leaves(&mut g);
        let root = loss_fn(&mut g, &leaves);
        g.scalar(root)
    };

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: None,
        worst_coord: 0,
        coords_checked: 0,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in 0..params.len() {
        let pid = ParamId(p);
        let n = params.get(pid).value.len();
        let coords: Vec<usize> = match max_coords_per_param {
            Some(cap) if cap < n => {
                let mut picked = Vec::with_capacity(cap);
                while picked.len() < cap {
                    let c = rng.gen_range(0..n);
                    if !picked.contains(&c) {
                        picked.push(c);
                    }
                }
                picked
            }
            _ => (0..n).collect(),
        };
        for &c in &coords {
            params.nudge(pid, c, h);
            let plus = eval(params, loss_fn);
            params.nudge(pid, c, -2.0 * h);
            let minus = eval(params, loss_fn);
            params.nudge(pid, c, h);
            let numeric = (plus - minus) / (2.0 * h);
            let err = rel_err(analytic[p][c], numeric);
            report.coords_checked += 1;
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst_param = Some(params.get(pid).name.clone());
                report.worst_coord = c;
            }
        }
    }
    report
}
