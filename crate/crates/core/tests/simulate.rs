use proptest::prelude::*;

use qnz_core::circuit::{Circuit, Gate};
use qnz_core::mapper::{compile, MappedCircuit};
use qnz_core::noise::{bind, load_calibration, parse_noise_shorthand, NoiseModel, ReadoutError};
use qnz_core::qnn::{neuron_circuit, WeightVector};
use qnz_core::sim::{run_density, run_trajectories, Distribution, StateVector};
use qnz_core::topology::CouplingGraph;

const CALIBRATION: &str = include_str!("../../../fixtures/calibration.json");

fn neuron_bound(noise: &NoiseModel) -> qnz_core::noise::BoundNoise {
    let w: WeightVector = "-1 -1 1 1 1 1 1 1".parse().unwrap();
    let mapped = compile(
        &neuron_circuit(&w).unwrap(),
        &CouplingGraph::linear_chain(6),
    )
    .unwrap();
    bind(noise, &mapped)
}

#[test]
fn calibration_fixture_loads() {
    let m = load_calibration(CALIBRATION).unwrap();
    assert_eq!(m.flip_at(2), 0.03);
    assert_eq!(m.flip_at(1), 0.01);
    assert_eq!(
        m.readout_at(0),
        ReadoutError {
            p01: 0.02,
            p10: 0.03
        }
    );
    assert_eq!(m.readout_at(5), ReadoutError::default());
}

#[test]
fn calibration_errors_name_the_field() {
    let e = load_calibration(r#"{"flip_p": 0.1, "readout": [{"qubit": 0, "p01": "x", "p10": 0}]}"#)
        .unwrap_err()
        .to_string();
    assert!(e.contains("readout[0].p01"), "{e}");
    assert!(load_calibration(r#"{"flip_p": 1.5}"#).is_err());
    assert!(load_calibration(r#"{"bogus": 1}"#).is_err());
}

#[test]
fn shorthand_and_file_agree() {
    let a = parse_noise_shorthand("flip:0.01,phase:0.01").unwrap();
    let b = load_calibration(r#"{"flip_p": 0.01, "phase_p": 0.01}"#).unwrap();
    assert_eq!(a, b);
}

#[test]
fn noiseless_binding_matches_the_ideal_run() {
    let bound = neuron_bound(&NoiseModel::noiseless());
    let init = StateVector::zero(4);
    let exact = run_density(&bound, &init).unwrap();
    // the H layer spreads |0> evenly over the readout register
    assert!(exact.probs().iter().all(|&p| (p - 0.125).abs() < 1e-12));
    let shots = 8000;
    let sampled = run_trajectories(&bound, &init, shots, 4).unwrap();
    assert!(sampled.empirical().tvd(&exact) < tvd_bound(&exact, shots));
}

#[test]
fn flip_noise_spreads_probability() {
    let init = StateVector::zero(4);
    let clean = run_density(&neuron_bound(&NoiseModel::noiseless()), &init).unwrap();
    let noisy = run_density(&neuron_bound(&NoiseModel::flip_phase(0.05)), &init).unwrap();
    assert!(noisy.prob(0) < clean.prob(0));
    assert!((noisy.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn readout_only_noise_is_a_stochastic_matrix() {
    // |1> read with p10 = 0.2 gives 0 with probability 0.2
    let c = Circuit::from_gates(1, 0, vec![Gate::x(0)]).unwrap();
    let noise = NoiseModel {
        readout_default: ReadoutError { p01: 0.0, p10: 0.2 },
        ..NoiseModel::default()
    };
    let bound = bind(&noise, &MappedCircuit::unrouted(&c).unwrap());
    let d = run_density(&bound, &StateVector::zero(1)).unwrap();
    assert!((d.prob(0) - 0.2).abs() < 1e-12);
}

#[test]
fn trajectory_counts_are_seed_determined() {
    let bound = neuron_bound(&NoiseModel::flip_phase(0.02));
    let init = StateVector::zero(4);
    let a = run_trajectories(&bound, &init, 4000, 77).unwrap();
    assert_eq!(a, run_trajectories(&bound, &init, 4000, 77).unwrap());
    assert_ne!(a, run_trajectories(&bound, &init, 4000, 78).unwrap());
}

fn tvd_bound(d: &Distribution, shots: u64) -> f64 {
    4.0 * (d.probs().len() as f64 / shots as f64).sqrt()
}

#[test]
fn trajectories_converge_to_density_under_calibration() {
    let noise = load_calibration(CALIBRATION).unwrap();
    let bound = neuron_bound(&noise);
    let init = StateVector::zero(4);
    let exact = run_density(&bound, &init).unwrap();
    let shots = 40_000;
    let sampled = run_trajectories(&bound, &init, shots, 12).unwrap();
    assert!(sampled.empirical().tvd(&exact) < tvd_bound(&exact, shots));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn density_probabilities_form_a_distribution(
        flip in 0.0..0.3f64,
        phase in 0.0..0.3f64,
        depol in 0.0..0.2f64,
        readout in 0.0..0.2f64,
        index in 0u64..256,
    ) {
        let noise = NoiseModel {
            flip_p: flip,
            phase_p: phase,
            depol_p: depol,
            readout_default: ReadoutError::symmetric(readout),
            ..NoiseModel::default()
        };
        let w = WeightVector::from_index(index, 8).unwrap();
        let mapped = compile(&neuron_circuit(&w).unwrap(), &CouplingGraph::linear_chain(6)).unwrap();
        let d = run_density(&bind(&noise, &mapped), &StateVector::zero(4)).unwrap();
        prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(d.probs().iter().all(|&p| p > -1e-12));
    }

    #[test]
    fn shorthand_parser_never_panics(text in "\\PC{0,60}") {
        let _ = parse_noise_shorthand(&text);
        let _ = load_calibration(&text);
    }
}
