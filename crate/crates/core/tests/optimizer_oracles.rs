//! Statistical and brute-force checks of the model and the optimizer.

use fslm::ensemble::{run_ensemble, EnsembleConfig, ModeSpec};
use fslm::model::build_model;
use fslm::optimize::{coordinate_descent, OptimizerOptions};
use fslm::{ExcitationProfile, ModelSpec, PaddleAngles, SeedPath};
use rand::Rng;

fn spec(groups: usize, paddles: usize) -> ModelSpec {
    ModelSpec::new(
        (1..=groups).collect(),
        paddles,
        ExcitationProfile::uniform_first_groups(groups),
    )
}

#[test]
fn random_configuration_mean_is_one_over_n() {
    let spec = spec(5, 4);
    let n = 15.0;
    let samples = 10_000;
    let root = SeedPath::new(31);
    let values: Vec<f64> = (0..samples as u64)
        .map(|i| {
            let mut rng = root.child(i).stream();
            let model = build_model(&spec, &mut rng).unwrap();
            let angles = PaddleAngles::random(4, &mut rng);
            model.target_intensity(&angles, 1).unwrap()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / samples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    let se = (var / samples as f64).sqrt();
    assert!((mean - 1.0 / n).abs() < 3.0 * se, "mean {mean} vs {} (se {se})", 1.0 / n);
}

#[test]
fn single_paddle_matches_dense_scan() {
    let opts = OptimizerOptions::default();
    let scan = 100_000;
    for seed in 0..10u64 {
        let groups = 2 + (seed as usize % 3);
        let model = build_model(&spec(groups, 1), &mut SeedPath::new(seed).stream()).unwrap();
        let result = coordinate_descent(&model, 1, &opts, PaddleAngles::zeros(1)).unwrap();
        // The objective has period π in θ.
        let batch: Vec<PaddleAngles> = (0..scan)
            .map(|i| PaddleAngles::new(vec![std::f64::consts::PI * i as f64 / scan as f64]))
            .collect();
        let best = model
            .target_intensities(&batch, 1)
            .unwrap()
            .into_iter()
            .fold(f64::MIN, f64::max);
        assert!((result.objective - best).abs() < 1e-9, "seed {seed}: {} vs {best}", result.objective);
        let direct = model.target_intensity(&result.angles, 1).unwrap();
        assert!((direct - result.objective).abs() < 1e-12);
    }
}

#[test]
fn optimized_beats_random_configurations() {
    let model = build_model(&spec(4, 6), &mut SeedPath::new(5).stream()).unwrap();
    let result =
        coordinate_descent(&model, 1, &OptimizerOptions::default(), PaddleAngles::zeros(6)).unwrap();
    let mut rng = SeedPath::new(6).stream();
    for _ in 0..2000 {
        let angles = PaddleAngles::new((0..6).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect());
        assert!(model.target_intensity(&angles, 1).unwrap() <= result.objective + 1e-12);
    }
}

#[test]
fn mean_enhancement_grows_with_paddles() {
    let mut config = EnsembleConfig::new(ModeSpec::EvenlyExcited { modes: 28 }, vec![0, 1, 2, 4, 8], 9);
    config.realizations = 40;
    config.baseline_samples = 60;
    let stats = run_ensemble(&config).unwrap();
    let means: Vec<f64> = stats.cells.iter().map(|c| c.mean_enh).collect();
    assert_eq!(means[0], 1.0);
    assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
    assert!(stats.cells.iter().all(|c| c.monotone_violations == 0));
}
