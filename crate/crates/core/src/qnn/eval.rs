use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mapper::{MappedCircuit, Router};
use crate::noise::{bind, BoundNoise, NoiseModel};
use crate::sim::{outcome_form, run_noiseless, run_trajectories};
use crate::topology::CouplingGraph;

use super::{input_state, neuron_circuit, num_aux_for, Dataset, Model, QnnError, WeightVector};

/// How a neuron's output probability is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    /// Noise-free state vector through the routed circuit.
    Ideal,
    /// Exact noisy probability.
    Density,
    /// Fraction of `shots` sampled trajectories reading all zeros.
    Trajectories { shots: u64 },
}

impl Backend {
    pub fn is_stochastic(&self) -> bool {
        matches!(self, Backend::Trajectories { .. })
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Ideal => f.write_str("ideal"),
            Backend::Density => f.write_str("density"),
            Backend::Trajectories { shots } => write!(f, "traj:{shots}"),
        }
    }
}

impl FromStr for Backend {
    type Err = String;

    /// `ideal`, `density`, `traj` (1000 shots) or `traj:<shots>`.
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ideal" => Ok(Backend::Ideal),
            "density" => Ok(Backend::Density),
            "traj" | "trajectories" => Ok(Backend::Trajectories { shots: 1000 }),
            _ => {
                let shots = s
                    .strip_prefix("traj:")
                    .and_then(|n| n.parse().ok())
                    .filter(|&n| n > 0)
                    .ok_or_else(|| format!("unknown backend `{s}`"))?;
                Ok(Backend::Trajectories { shots })
            }
        }
    }
}

/// splitmix64 over the parts, used to give every (evaluation, sample,
/// weight) triple its own trajectory seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        state ^= p;
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        state = z ^ (z >> 31);
    }
    state
}

fn weight_key(w: &WeightVector) -> u64 {
    derive_seed(&w.as_slice().iter().map(|&e| e as u64).collect::<Vec<_>>())
}

/// Compiles, binds and simulates neurons on one device under one noise
/// model. Unless another router is chosen, every evaluation goes through
/// the fixed-mapping compiler.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub graph: CouplingGraph,
    pub noise: NoiseModel,
    pub backend: Backend,
    pub seed: u64,
    pub router: Router,
}

impl Evaluator {
    pub fn new(graph: CouplingGraph, noise: NoiseModel, backend: Backend, seed: u64) -> Self {
        Self {
            graph,
            noise,
            backend,
            seed,
            router: Router::Fixed,
        }
    }

    pub fn with_router(self, router: Router) -> Self {
        Self { router, ..self }
    }

    pub fn bind_neuron(&self, w: &WeightVector) -> Result<(MappedCircuit, BoundNoise), QnnError> {
        let mapped = self.router.route(&neuron_circuit(w)?, &self.graph)?;
        let bound = bind(&self.noise, &mapped);
        Ok((mapped, bound))
    }

    /// Output probability of neuron `w` on every sample of `data`.
    pub fn neuron_outputs(&self, w: &WeightVector, data: &Dataset) -> Result<Vec<f64>, QnnError> {
        if w.len() != data.dim() {
            return Err(QnnError::DimensionMismatch {
                expected: w.len(),
                got: data.dim(),
            });
        }
        let (_, bound) = self.bind_neuron(w)?;
        let num_aux = num_aux_for(w.num_qubits());
        let samples = data.samples();
        match self.backend {
            Backend::Density => {
                let form = outcome_form(&bound, 0)?;
                Ok(samples
                    .iter()
                    .map(|s| {
                        let mut padded = vec![0.0; s.x.len() << num_aux];
                        for (i, &v) in s.x.iter().enumerate() {
                            padded[i << num_aux] = v;
                        }
                        form.eval_real(&padded)
                    })
                    .collect())
            }
            Backend::Ideal => samples
                .par_iter()
                .map(|s| Ok(run_noiseless(&bound, &input_state(&s.x, num_aux)?)?.prob(0)))
                .collect(),
            Backend::Trajectories { shots } => {
                let key = weight_key(w);
                samples
                    .par_iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let seed = derive_seed(&[self.seed, i as u64, key]);
                        let counts =
                            run_trajectories(&bound, &input_state(&s.x, num_aux)?, shots, seed)?;
                        Ok(counts.frequency(0))
                    })
                    .collect()
            }
        }
    }

    /// Per-neuron output vectors for a whole model.
    pub fn model_outputs(&self, model: &Model, data: &Dataset) -> Result<Vec<Vec<f64>>, QnnError> {
        model
            .neurons()
            .iter()
            .map(|w| self.neuron_outputs(w, data))
            .collect()
    }

    pub fn predictions(&self, model: &Model, data: &Dataset) -> Result<Vec<usize>, QnnError> {
        let outputs = self.model_outputs(model, data)?;
        Ok((0..data.len())
            .map(|i| {
                let per: Vec<f64> = outputs.iter().map(|o| o[i]).collect();
                Model::decide(&per)
            })
            .collect())
    }

    /// Fraction of samples whose label equals the predicted class.
    pub fn accuracy(&self, model: &Model, data: &Dataset) -> Result<f64, QnnError> {
        let labels = data.labels();
        check_labels(&labels, model.num_classes())?;
        let outputs = self.model_outputs(model, data)?;
        let refs: Vec<&[f64]> = outputs.iter().map(|o| o.as_slice()).collect();
        Ok(accuracy_from_outputs(&refs, &labels))
    }
}

pub(crate) fn check_labels(labels: &[usize], classes: usize) -> Result<(), QnnError> {
    if labels.is_empty() {
        return Err(QnnError::EmptyDataset);
    }
    match labels.iter().position(|&l| l >= classes) {
        Some(index) => Err(QnnError::BadLabel {
            index,
            label: labels[index],
        }),
        None => Ok(()),
    }
}

/// Accuracy of the argmax rule given each neuron's outputs.
pub fn accuracy_from_outputs(outputs: &[&[f64]], labels: &[usize]) -> f64 {
    let correct = (0..labels.len())
        .filter(|&i| {
            let per: Vec<f64> = outputs.iter().map(|o| o[i]).collect();
            Model::decide(&per) == labels[i]
        })
        .count();
    correct as f64 / labels.len() as f64
}

/// Result of [`best_joint_model`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointBest {
    /// Candidate index chosen for each neuron.
    pub choice: Vec<usize>,
    pub correct: usize,
}

/// Exhaustive search over every assignment of candidates to neurons.
///
/// `table[c][i]` is candidate `c`'s output on sample `i`. Assignments are
/// visited in lexicographic order and only a strictly better one replaces
/// the incumbent, so ties resolve to the lowest assignment.
pub fn best_joint_model(table: &[Vec<f64>], labels: &[usize], num_neurons: usize) -> JointBest {
    let m = table.len();
    let mut choice = vec![0usize; num_neurons];
    let mut best = JointBest {
        choice: choice.clone(),
        correct: 0,
    };
    let mut first = true;
    let mut per = vec![0.0; num_neurons];
    loop {
        let correct = labels
            .iter()
            .enumerate()
            .filter(|&(i, &label)| {
                for (slot, &c) in per.iter_mut().zip(&choice) {
                    *slot = table[c][i];
                }
                Model::decide(&per) == label
            })
            .count();
        if first || correct > best.correct {
            best = JointBest {
                choice: choice.clone(),
                correct,
            };
            first = false;
        }
        // odometer, last neuron fastest
        let mut pos = num_neurons;
        loop {
            if pos == 0 {
                return best;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < m {
                break;
            }
            choice[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnn::{make_synthetic_dataset, neuron_output_ideal};

    fn baseline() -> Model {
        Model::new(vec![
            "-1 -1 1 1 1 1 1 1".parse().unwrap(),
            "1 1 1 1 1 1 1 1".parse().unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn backend_parsing() {
        assert_eq!("density".parse::<Backend>(), Ok(Backend::Density));
        assert_eq!(
            "traj:500".parse::<Backend>(),
            Ok(Backend::Trajectories { shots: 500 })
        );
        assert!("traj:0".parse::<Backend>().is_err());
        assert!("gpu".parse::<Backend>().is_err());
    }

    #[test]
    fn seeds_differ_per_part() {
        assert_ne!(derive_seed(&[1, 2, 3]), derive_seed(&[1, 3, 2]));
        assert_eq!(derive_seed(&[1, 2, 3]), derive_seed(&[1, 2, 3]));
    }

    #[test]
    fn ideal_and_density_match_closed_form_without_noise() {
        let data = make_synthetic_dataset(5, 20, 3, 0.15).unwrap();
        let graph = CouplingGraph::linear_chain(6);
        for backend in [Backend::Ideal, Backend::Density] {
            let ev = Evaluator::new(graph.clone(), NoiseModel::noiseless(), backend, 0);
            for idx in [0u64, 3, 77, 200] {
                let w = WeightVector::from_index(idx, 8).unwrap();
                let outs = ev.neuron_outputs(&w, &data).unwrap();
                for (s, o) in data.samples().iter().zip(outs) {
                    assert!((o - neuron_output_ideal(&w, &s.x).unwrap()).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn noise_lowers_accuracy_direction() {
        let data = make_synthetic_dataset(5, 40, 3, 0.15).unwrap();
        let graph = CouplingGraph::linear_chain(6);
        let clean = Evaluator::new(graph.clone(), NoiseModel::noiseless(), Backend::Density, 0);
        let noisy = Evaluator::new(graph, NoiseModel::flip_phase(0.3), Backend::Density, 0);
        let m = baseline();
        let a0 = clean.accuracy(&m, &data).unwrap();
        let a1 = noisy.accuracy(&m, &data).unwrap();
        assert!(a1 <= a0);
        let ideal = data
            .samples()
            .iter()
            .filter(|s| m.predict_ideal(&s.x).unwrap() == s.label)
            .count() as f64
            / data.len() as f64;
        assert_eq!(a0, ideal);
    }

    #[test]
    fn trajectory_outputs_are_reproducible() {
        let data = make_synthetic_dataset(5, 6, 3, 0.15).unwrap();
        let ev = Evaluator::new(
            CouplingGraph::linear_chain(6),
            NoiseModel::flip_phase(0.05),
            Backend::Trajectories { shots: 300 },
            11,
        );
        let w = WeightVector::from_index(9, 8).unwrap();
        assert_eq!(
            ev.neuron_outputs(&w, &data).unwrap(),
            ev.neuron_outputs(&w, &data).unwrap()
        );
    }

    #[test]
    fn joint_search_picks_lowest_best() {
        // ties go to class 0, so pairing the silent candidate with 2 already works
        let table = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let best = best_joint_model(&table, &[0, 1], 2);
        assert_eq!(best.correct, 2);
        assert_eq!(best.choice, vec![0, 2]);
        let best = best_joint_model(&table, &[0, 0], 2);
        assert_eq!(best.choice, vec![0, 0]);
    }

    #[test]
    fn labels_are_checked() {
        assert!(check_labels(&[0, 2], 2).is_err());
        assert!(check_labels(&[], 2).is_err());
    }
}
