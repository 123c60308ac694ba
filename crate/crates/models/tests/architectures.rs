//! Architecture-level contracts: length versatility, the slicing CNN's
//! fixed-input behavior, parameter counts, and checkpoint round-trips.

use rffi_models::{
    build_model, load_checkpoint, save_checkpoint, write_checkpoint, Architecture, Model,
    ModelError, ModelInput, ModelSpec, Scale,
};
use rffi_tensornet::TensorError;

fn random_input(width: usize, seed: u64) -> ModelInput {
    // Standardized-looking values from a fixed linear congruential walk.
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
    let mut values = Vec::with_capacity(64 * width);
    for _ in 0..64 * width {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        values.push(((state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0);
    }
    ModelInput::new(64, width, values)
}

#[test]
fn length_versatile_architectures_accept_all_default_widths() {
    for arch in Architecture::LENGTH_VERSATILE {
        let spec = ModelSpec::new(arch, 10, Scale::Desk);
        let model: Model<f32> = build_model(&spec, 42).unwrap();
        for width in [62usize, 126, 254, 9] {
            let probs = model.forward(&random_input(width, width as u64)).unwrap();
            assert_eq!(probs.len(), 10, "{arch} width {width}");
            let sum: f64 = probs.probs().iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn slicing_cnn_accepts_only_slice_width() {
    let spec = ModelSpec::new(Architecture::SlicingCnn, 10, Scale::Desk);
    let model: Model<f32> = build_model(&spec, 42).unwrap();
    let probs = model.forward(&random_input(6, 1)).unwrap();
    assert_eq!(probs.len(), 10);
    for width in [62usize, 126, 12] {
        match model.forward(&random_input(width, 2)) {
            Err(ModelError::Tensor(TensorError::DenseExtentMismatch { .. })) => {}
            other => panic!("width {width}: expected dense extent mismatch, got {other:?}"),
        }
    }
}

#[test]
fn cnn_feature_map_is_half_width_with_128_channels_at_paper_scale() {
    let spec = ModelSpec::new(Architecture::FlattenFreeCnn, 10, Scale::Paper);
    let model: Model<f32> = build_model(&spec, 7).unwrap();
    let shape = model.cnn_feature_shape(&random_input(62, 3)).unwrap();
    assert_eq!(shape, vec![32, 31, 128]);
    let shape = model.cnn_feature_shape(&random_input(126, 3)).unwrap();
    assert_eq!(shape, vec![32, 63, 128]);
}

#[test]
fn paper_scale_parameter_counts_and_ordering() {
    let count = |arch: Architecture| {
        let spec = ModelSpec::new(arch, 10, Scale::Paper);
        build_model::<f32>(&spec, 1).unwrap().param_count()
    };
    let cnn = count(Architecture::FlattenFreeCnn);
    let lstm = count(Architecture::LstmNet);
    let gru = count(Architecture::GruNet);
    let tr = count(Architecture::Transformer);
    let slicing = count(Architecture::SlicingCnn);

    // Gate-matrix formulas give these two exactly.
    assert_eq!(lstm, 856_586);
    assert_eq!(gru, 644_618);
    // Published ordering across the five architectures.
    assert!(tr < gru, "transformer {tr} < gru {gru}");
    assert!(gru < cnn, "gru {gru} < cnn {cnn}");
    assert!(cnn < slicing, "cnn {cnn} < slicing {slicing}");
    assert!(slicing < lstm, "slicing {slicing} < lstm {lstm}");
    // The transformer is the smallest of the four length-versatile models.
    assert!(tr < cnn.min(lstm).min(gru));
}

#[test]
fn param_count_is_invariant_to_input_width() {
    for arch in Architecture::LENGTH_VERSATILE {
        let spec = ModelSpec::new(arch, 10, Scale::Desk);
        let model: Model<f32> = build_model(&spec, 9).unwrap();
        let before = model.param_count();
        model.forward(&random_input(62, 1)).unwrap();
        model.forward(&random_input(254, 2)).unwrap();
        assert_eq!(model.param_count(), before);
    }
}

#[test]
fn layer_count_formulas() {
    use rand_chacha::rand_core::SeedableRng;
    use rffi_tensornet::layers::{DenseLayer, LstmLayer};
    use rffi_tensornet::params::ParamSet;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let mut params: ParamSet<f32> = ParamSet::new();
    DenseLayer::init(&mut params, "d", 128, 10, &mut rng);
    assert_eq!(params.param_count(), 128 * 10 + 10); // 1290

    let mut params: ParamSet<f32> = ParamSet::new();
    LstmLayer::init(&mut params, "l", 64, 256, &mut rng);
    assert_eq!(params.param_count(), 4 * ((64 + 256) * 256 + 256)); // 328704
}

#[test]
fn untrained_models_emit_near_uniform_probabilities() {
    let input = random_input(62, 77);
    for seed in 0..100u64 {
        let spec = ModelSpec::new(Architecture::FlattenFreeCnn, 10, Scale::Desk);
        let model: Model<f32> = build_model(&spec, seed).unwrap();
        let probs = model.forward(&input).unwrap();
        for &p in probs.probs() {
            assert!(
                (0.02..=0.3).contains(&p),
                "seed {seed}: probability {p} outside near-uniform band"
            );
        }
    }
}

#[test]
fn forward_is_deterministic() {
    let spec = ModelSpec::new(Architecture::Transformer, 10, Scale::Desk);
    let model: Model<f32> = build_model(&spec, 5).unwrap();
    let input = random_input(126, 4);
    let a = model.forward(&input).unwrap();
    let b = model.forward(&input).unwrap();
    assert_eq!(a.probs(), b.probs());
}

#[test]
fn checkpoint_round_trip_is_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    let spec = ModelSpec::new(Architecture::GruNet, 10, Scale::Desk);
    let mut model: Model<f32> = build_model(&spec, 11).unwrap();
    model.meta.epochs_trained = 17;
    model.meta.final_val_loss = Some(0.1234567);
    model.meta.seed = Some(11);
    save_checkpoint(&model, &path).unwrap();

    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded.spec, model.spec);
    assert_eq!(loaded.meta, model.meta);

    let mut original = Vec::new();
    write_checkpoint(&model, &mut original).unwrap();
    let mut reloaded = Vec::new();
    write_checkpoint(&loaded, &mut reloaded).unwrap();
    assert_eq!(original, reloaded, "checkpoint bytes differ after round trip");

    // The loaded model behaves identically.
    let input = random_input(62, 1);
    assert_eq!(
        model.forward(&input).unwrap().probs(),
        loaded.forward(&input).unwrap().probs()
    );
}

#[test]
fn checkpoint_rejects_corrupted_header() {
    let spec = ModelSpec::new(Architecture::FlattenFreeCnn, 4, Scale::Desk);
    let model: Model<f32> = build_model(&spec, 3).unwrap();
    let mut bytes = Vec::new();
    write_checkpoint(&model, &mut bytes).unwrap();
    // Flip a character inside the first parameter name ("conv1" lives in
    // the JSON header).
    let pos = bytes.windows(5).position(|w| w == b"conv1").unwrap();
    bytes[pos] = b'x';
    assert!(rffi_models::read_checkpoint(bytes.as_slice()).is_err());
}
