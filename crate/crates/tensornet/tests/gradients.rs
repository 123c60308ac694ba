//! Finite-difference verification of every layer's backward pass, 20 seeds
//! per layer in double precision.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rffi_tensornet::gradcheck::{grad_check, DEFAULT_STEP};
use rffi_tensornet::graph::{Graph, TensorId};
use rffi_tensornet::layers::{
    Conv2dLayer, DenseLayer, GruLayer, LayerNormLayer, LstmLayer, MultiHeadAttention,
};
use rffi_tensornet::params::{ParamLeaves, ParamSet};
use rand::Rng;
use std::sync::Arc;

const TOL: f64 = 1e-4;
const SEEDS: u64 = 20;

fn random_input(rng: &mut ChaCha8Rng, n: usize) -> Arc<Vec<f64>> {
    Arc::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn check(
    name: &str,
    seed: u64,
    params: &mut ParamSet<f64>,
    loss_fn: &mut dyn FnMut(&mut Graph<f64>, &ParamLeaves) -> TensorId,
) {
    let report = grad_check(params, loss_fn, None, DEFAULT_STEP, seed);
    assert!(
        report.passes(TOL),
        "{name} seed {seed}: max rel err {} at {:?}[{}]",
        report.max_rel_err,
        report.worst_param,
        report.worst_coord
    );
}

#[test]
fn dense_gradients() {
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let layer = DenseLayer::init(&mut params, "fc", 5, 4, &mut rng);
        let input = random_input(&mut rng, 3 * 5);
        let mut loss = move |g: &mut Graph<f64>, leaves: &ParamLeaves| {
            let x = g.leaf(vec![3, 5], Arc::clone(&input), false);
            let y = layer.forward(g, leaves, x).unwrap();
            let r = g.relu(y);
            let pooled = g.global_avg_pool1d(r);
            let (l, _) = g.softmax_cross_entropy(pooled, 1).unwrap();
            l
        };
        check("dense", seed, &mut params, &mut loss);
    }
}

#[test]
fn conv_pool_gap_gradients() {
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut params = ParamSet::new();
        let conv1 = Conv2dLayer::init(&mut params, "c1", 3, 3, 2, 3, &mut rng);
        let conv2 = Conv2dLayer::init(&mut params, "c2", 1, 1, 3, 4, &mut rng);
        let head = DenseLayer::init(&mut params, "fc", 4, 3, &mut rng);
        let input = random_input(&mut rng, 6 * 4 * 2);
        let mut loss = move |g: &mut Graph<f64>, leaves: &ParamLeaves| {
            let x = g.leaf(vec![6, 4, 2], Arc::clone(&input), false);
            let y1 = conv1.forward(g, leaves, x).unwrap();
            let a1 = g.relu(y1);
            let p = g.max_pool2(a1).unwrap();
            let y2 = conv2.forward(g, leaves, p).unwrap();
            let a2 = g.relu(y2);
            let pooled = g.global_avg_pool2d(a2);
            let logits = head.forward(g, leaves, pooled).unwrap();
            let (l, _) = g.softmax_cross_entropy(logits, 2).unwrap();
            l
        };
        check("conv_pool_gap", seed, &mut params, &mut loss);
    }
}

#[test]
fn lstm_gradients() {
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let mut params = ParamSet::new();
        let lstm = LstmLayer::init(&mut params, "lstm", 4, 3, &mut rng);
        let head = DenseLayer::init(&mut params, "fc", 3, 2, &mut rng);
        let input = random_input(&mut rng, 5 * 4);
        let mut loss = move |g: &mut Graph<f64>, leaves: &ParamLeaves| {
            let x = g.leaf(vec![5, 4], Arc::clone(&input), false);
            let h = lstm.forward(g, leaves, x).unwrap();
            let pooled = g.global_avg_pool1d(h);
            let logits = head.forward(g, leaves, pooled).unwrap();
            let (l, _) = g.softmax_cross_entropy(logits, 0).unwrap();
            l
        };
        check("lstm", seed, &mut params, &mut loss);
    }
}

#[test]
fn gru_gradients() {
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let mut params = ParamSet::new();
        let gru = GruLayer::init(&mut params, "gru", 4, 3, &mut rng);
        let head = DenseLayer::init(&mut params, "fc", 3, 2, &mut rng);
        let input = random_input(&mut rng, 5 * 4);
        let mut loss = move |g: &mut Graph<f64>, leaves: &ParamLeaves| {
            let x = g.leaf(vec![5, 4], Arc::clone(&input), false);
            let h = gru.forward(g, leaves, x).unwrap();
            let pooled = g.global_avg_pool1d(h);
            let logits = head.forward(g, leaves, pooled).unwrap();
            let (l, _) = g.softmax_cross_entropy(logits, 1).unwrap();
            l
        };
        check("gru", seed, &mut params, &mut loss);
    }
}

#[test]
fn attention_gradients() {
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let mut params = ParamSet::new();
        let mha = MultiHeadAttention::init(&mut params, "mha", 8, 2, &mut rng).unwrap();
        let head = DenseLayer::init(&mut params, "fc", 8, 3, &mut rng);
        let input = random_input(&mut rng, 6 * 8);
        let mut loss = move |g: &mut Graph<f64>, leaves: &ParamLeaves| {
            let x = g.leaf(vec![6, 8], Arc::clone(&input), false);
            let a = mha.forward(g, leaves, x).unwrap();
            let pooled = g.global_avg_pool1d(a);
            let logits = head.forward(g, leaves, pooled).unwrap();
            let (l, _) = g.softmax_cross_entropy(logits, 2).unwrap();
            l
        };
        check("attention", seed, &mut params, &mut loss);
    }
}

#[test]
fn layer_norm_gradients() {
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let mut params = ParamSet::new();
        let ln = LayerNormLayer::init(&mut params, "ln", 6);
        let head = DenseLayer::init(&mut params, "fc", 6, 2, &mut rng);
        let input = random_input(&mut rng, 4 * 6);
        let mut loss = move |g: &mut Graph<f64>, leaves: &ParamLeaves| {
            let x = g.leaf(vec![4, 6], Arc::clone(&input), false);
            let n = ln.forward(g, leaves, x);
            let pooled = g.global_avg_pool1d(n);
            let logits = head.forward(g, leaves, pooled).unwrap();
            let (l, _) = g.softmax_cross_entropy(logits, 0).unwrap();
            l
        };
        check("layer_norm", seed, &mut params, &mut loss);
    }
}

#[test]
fn transformer_block_gradients() {
    // One full encoder block: attention + residual + norm, FFN + residual +
    // norm.
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let mut params = ParamSet::new();
        let mha = MultiHeadAttention::init(&mut params, "mha", 8, 2, &mut rng).unwrap();
        let ln1 = LayerNormLayer::init(&mut params, "ln1", 8);
        let ff1 = DenseLayer::init(&mut params, "ff1", 8, 12, &mut rng);
        let ff2 = DenseLayer::init(&mut params, "ff2", 12, 8, &mut rng);
        let ln2 = LayerNormLayer::init(&mut params, "ln2", 8);
        let head = DenseLayer::init(&mut params, "fc", 8, 3, &mut rng);
        let input = random_input(&mut rng, 6 * 8);
        let mut loss = move |g: &mut Graph<f64>, leaves: &ParamLeaves| {
            let x = g.leaf(vec![6, 8], Arc::clone(&input), false);
            let a = mha.forward(g, leaves, x).unwrap();
            let r1 = g.add(x, a);
            let n1 = ln1.forward(g, leaves, r1);
            let f1 = ff1.forward(g, leaves, n1).unwrap();
            let f1a = g.relu(f1);
            let f2 = ff2.forward(g, leaves, f1a).unwrap();
            let r2 = g.add(n1, f2);
            let n2 = ln2.forward(g, leaves, r2);
            let pooled = g.global_avg_pool1d(n2);
            let logits = head.forward(g, leaves, pooled).unwrap();
            let (l, _) = g.softmax_cross_entropy(logits, 1).unwrap();
            l
        };
        check("transformer_block", seed, &mut params, &mut loss);
    }
}

#[test]
fn softmax_cross_entropy_gradient_via_finite_difference() {
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(700 + seed);
        let mut params = ParamSet::new();
        let n = 6;
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        params.add("logits", vec![n], data);
        let label = (seed as usize) % n;
        let mut loss = move |g: &mut Graph<f64>, leaves: &ParamLeaves| {
            let (l, _) = g
                .softmax_cross_entropy(leaves.id(rffi_tensornet::ParamId(0)), label)
                .unwrap();
            l
        };
        let report = grad_check(&mut params, &mut loss, None, DEFAULT_STEP, seed);
        assert!(report.max_rel_err < 1e-6, "seed {seed}: {}", report.max_rel_err);
    }
}
