use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qnz_core::bench::router_comparison;
use qnz_core::circuit::expand_to_basis;
use qnz_core::mapper::compile;
use qnz_core::noise::{bind, NoiseModel};
use qnz_core::qnn::{
    circ_of_weights, input_state, make_synthetic_dataset, neuron_circuit, neuron_output_ideal,
    num_aux_for, parse_dataset, parse_model, write_model, Backend, Dataset, Evaluator, Model,
    WeightVector,
};
use qnz_core::sim::{run_ideal, run_noiseless};
use qnz_core::topology::CouplingGraph;
use qnz_core::trainer::{sweep, train, Strategy, TrainConfig};

const DATASET: &str = include_str!("../../../fixtures/dataset.txt");
const BASELINE: &str = include_str!("../../../fixtures/baseline.model");

fn chain() -> CouplingGraph {
    CouplingGraph::linear_chain(6)
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

#[test]
fn compiled_weight_circuits_apply_diag_w() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for index in 0..256 {
        let w = WeightVector::from_index(index, 8).unwrap();
        let lowered = expand_to_basis(&circ_of_weights(&w).unwrap()).unwrap();
        for _ in 0..10 {
            let x = unit(&mut rng, 8);
            let out = run_ideal(&lowered, &input_state(&x, 1).unwrap()).unwrap();
            // global sign from normalisation: compare against +-w.x
            let sign = if w.num_negative() > 4 { -1.0 } else { 1.0 };
            for (i, &xi) in x.iter().enumerate() {
                let want = Complex64::new(sign * w.as_slice()[i] as f64 * xi, 0.0);
                assert!((out.amplitudes()[i << 1] - want).norm() < 1e-9);
                // auxiliary back in |0>
                assert!(out.amplitudes()[(i << 1) | 1].norm() < 1e-9);
            }
        }
    }
}

#[test]
fn closed_form_examples() {
    let uniform = vec![1.0 / 8f64.sqrt(); 8];
    let ones = WeightVector::ones(8).unwrap();
    assert!((neuron_output_ideal(&ones, &uniform).unwrap() - 1.0).abs() < 1e-12);
    let half: WeightVector = "1 -1 1 -1 -1 1 -1 1".parse().unwrap();
    assert!(neuron_output_ideal(&half, &uniform).unwrap().abs() < 1e-12);
    assert!(circ_of_weights(&ones).unwrap().is_empty());
}

#[test]
fn routed_neuron_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let w = WeightVector::from_index(rng.gen_range(0..256), 8).unwrap();
        let x = unit(&mut rng, 8);
        let bound = bind(
            &NoiseModel::noiseless(),
            &compile(&neuron_circuit(&w).unwrap(), &chain()).unwrap(),
        );
        let p = run_noiseless(&bound, &input_state(&x, num_aux_for(3)).unwrap())
            .unwrap()
            .prob(0);
        assert!((p - neuron_output_ideal(&w, &x).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn fixtures_parse_and_are_learnable() {
    let data = parse_dataset(DATASET).unwrap();
    let model = parse_model(BASELINE).unwrap();
    assert_eq!((data.dim(), data.len(), data.seed()), (8, 100, Some(42)));
    assert_eq!(parse_model(&write_model(&model)).unwrap(), model);
    let ideal = Evaluator::new(chain(), NoiseModel::noiseless(), Backend::Ideal, 0);
    assert_eq!(ideal.accuracy(&model, &data).unwrap(), 1.0);
}

#[test]
fn flip_noise_lowers_accuracy() {
    let data = parse_dataset(DATASET).unwrap();
    let model = parse_model(BASELINE).unwrap();
    let flip = NoiseModel {
        flip_p: 0.1,
        ..NoiseModel::default()
    };
    let clean = Evaluator::new(chain(), NoiseModel::noiseless(), Backend::Density, 0);
    let noisy = Evaluator::new(chain(), flip, Backend::Density, 0);
    assert!(noisy.accuracy(&model, &data).unwrap() < clean.accuracy(&model, &data).unwrap());
}

#[test]
fn trajectory_accuracy_approaches_density() {
    let data = parse_dataset(DATASET).unwrap();
    let model = parse_model(BASELINE).unwrap();
    let noise = NoiseModel::flip_phase(0.01);
    let exact = Evaluator::new(chain(), noise.clone(), Backend::Density, 0)
        .accuracy(&model, &data)
        .unwrap();
    let sampled = Evaluator::new(chain(), noise, Backend::Trajectories { shots: 10_000 }, 5)
        .accuracy(&model, &data)
        .unwrap();
    assert!(
        (exact - sampled).abs() <= 0.02 + 1e-12,
        "{exact} vs {sampled}"
    );
}

fn small_data() -> Dataset {
    make_synthetic_dataset(42, 40, 3, 0.15).unwrap()
}

#[test]
fn hill_climbing_gets_close_to_the_exhaustive_optimum() {
    let data = small_data();
    let start = Model::new(vec![WeightVector::ones(8).unwrap()]).unwrap();
    let noise = NoiseModel::flip_phase(0.1);
    let exhaustive = train(
        &TrainConfig::new(Strategy::Exhaustive, start.clone(), noise.clone(), 1),
        &data,
        &chain(),
    )
    .unwrap();
    let hill = train(
        &TrainConfig {
            max_iters: 3000,
            patience: None,
            ..TrainConfig::new(Strategy::HillClimb, start, noise, 1)
        },
        &data,
        &chain(),
    )
    .unwrap();
    assert!(hill.restarts >= 20, "{} restarts", hill.restarts);
    assert!(hill.best_accuracy <= exhaustive.best_accuracy);
    assert!(exhaustive.best_accuracy - hill.best_accuracy <= 0.02 + 1e-12);
}

#[test]
fn training_is_reproducible_and_keeps_the_incumbent() {
    let data = small_data();
    let ones = WeightVector::ones(8).unwrap();
    let config = TrainConfig {
        max_iters: 300,
        backend: Backend::Trajectories { shots: 200 },
        ..TrainConfig::new(
            Strategy::RandomSearch,
            Model::new(vec![ones.clone(), ones]).unwrap(),
            NoiseModel::flip_phase(0.05),
            21,
        )
    };
    let a = train(&config, &data, &chain()).unwrap();
    let b = train(&config, &data, &chain()).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.best_accuracy, b.best_accuracy);
    let weights = |r: &qnz_core::trainer::TrainResult| -> Vec<_> {
        r.log
            .iter()
            .map(|e| (e.iter, e.weights.clone(), e.accuracy))
            .collect()
    };
    assert_eq!(weights(&a), weights(&b));

    let max_logged = a.log.iter().map(|e| e.accuracy).fold(0.0, f64::max);
    assert_eq!(a.best_accuracy, max_logged);
    assert!(a.best_accuracy >= a.baseline_accuracy);

    // a fresh evaluation with the same seed reproduces the cached value
    let fresh = Evaluator::new(chain(), config.noise.clone(), config.backend, config.seed)
        .accuracy(&a.best, &data)
        .unwrap();
    assert_eq!(fresh, a.best_accuracy);
}

#[test]
fn sweep_at_zero_noise_keeps_the_optimum() {
    let data = parse_dataset(DATASET).unwrap();
    let model = parse_model(BASELINE).unwrap();
    let config = TrainConfig::new(
        Strategy::Exhaustive,
        model.clone(),
        NoiseModel::flip_phase(0.1),
        0,
    );
    let rows = sweep(&[0.0], &config, &data, &chain()).unwrap();
    assert_eq!(rows[0].searched, model.neurons());
    assert_eq!(rows[0].searched_accuracy, rows[0].baseline_accuracy);
}

#[test]
fn router_comparison_without_noise_scores_ideal_accuracy() {
    let data = parse_dataset(DATASET).unwrap();
    let baseline = parse_model(BASELINE).unwrap();
    let searched = Model::new(vec![
        "1 1 1 1 1 -1 -1 -1".parse().unwrap(),
        "1 1 1 -1 1 1 -1 -1".parse().unwrap(),
    ])
    .unwrap();
    let rows = router_comparison(
        &baseline,
        &searched,
        &data,
        &chain(),
        &NoiseModel::noiseless(),
        Backend::Density,
        0,
    )
    .unwrap();
    let ideal = Evaluator::new(chain(), NoiseModel::noiseless(), Backend::Ideal, 0);
    for r in &rows {
        let model = if r.model == "baseline" {
            &baseline
        } else {
            &searched
        };
        assert_eq!(r.accuracy, ideal.accuracy(model, &data).unwrap());
    }
    assert!(rows[2].swaps < rows[1].swaps);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_is_sign_invariant(index in 0u64..256, seed in any::<u64>()) {
        let w = WeightVector::from_index(index, 8).unwrap();
        let x = unit(&mut ChaCha8Rng::seed_from_u64(seed), 8);
        let a = neuron_output_ideal(&w, &x).unwrap();
        let b = neuron_output_ideal(&w.negated(), &x).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn weight_text_round_trips(index in 0u64..1 << 16) {
        let w = WeightVector::from_index(index, 16).unwrap();
        prop_assert_eq!(w.to_string().parse::<WeightVector>().unwrap(), w);
    }

    #[test]
    fn file_parsers_never_panic(text in "\\PC{0,200}") {
        let _ = parse_dataset(&text);
        let _ = parse_model(&text);
    }
}
