use msr_core::sim2real::align::gaussian_cloud;
use msr_core::sim2real::{align_features, AlignConfig, AlignmentModel};

const DIM: usize = 4;
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
// A weak reconstruction anchor; at 0.05 and above it pins the encoder to
// the identity and the discriminator keeps its full accuracy.
const LAMBDA: f64 = 0.01;

#[test]
fn identical_distributions_are_at_chance() {
    for seed in SEEDS {
        let sim = gaussian_cloud(2000, DIM, 0.0, seed);
        let real = gaussian_cloud(2000, DIM, 0.0, seed + 100);
        let model = AlignmentModel::new(DIM, DIM, LAMBDA).unwrap();
        let out = align_features(&sim, &real, model, AlignConfig::default()).unwrap();
        assert!(
            (0.4..=0.6).contains(&out.held_out_accuracy),
            "seed {seed}: {}",
            out.held_out_accuracy
        );
    }
}

#[test]
fn separated_clouds_frozen_then_adversarial() {
    for seed in SEEDS {
        let sim = gaussian_cloud(2000, DIM, 0.0, seed);
        let real = gaussian_cloud(2000, DIM, 4.0, seed + 100);
        let frozen = align_features(
            &sim,
            &real,
            AlignmentModel::new(DIM, DIM, 0.0).unwrap(),
            AlignConfig { freeze_encoder: true, ..AlignConfig::default() },
        )
        .unwrap();
        let adversarial = align_features(
            &sim,
            &real,
            AlignmentModel::new(DIM, DIM, LAMBDA).unwrap(),
            AlignConfig::default(),
        )
        .unwrap();
        assert!(frozen.held_out_accuracy > 0.9, "seed {seed}: {}", frozen.held_out_accuracy);
        assert!(
            adversarial.held_out_accuracy < frozen.held_out_accuracy,
            "seed {seed}: {} vs {}",
            adversarial.held_out_accuracy,
            frozen.held_out_accuracy
        );
    }
}

#[test]
fn frozen_encoder_is_untouched() {
    let sim = gaussian_cloud(200, DIM, 0.0, 9);
    let real = gaussian_cloud(200, DIM, 4.0, 10);
    let model = AlignmentModel::new(DIM, DIM, 0.5).unwrap();
    let out = align_features(&sim, &real, model.clone(), AlignConfig { freeze_encoder: true, ..AlignConfig::default() })
        .unwrap();
    assert_eq!(out.model.encoder, model.encoder);
}
