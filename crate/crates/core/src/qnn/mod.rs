//! Binary-weight quantum neurons.
//!
//! A neuron with weights `w` in `{-1,+1}^N` (`N = 2^k`) acts on an
//! amplitude-encoded input `x` by the diagonal sign flip `diag(w)`, followed
//! by a Hadamard on every computing qubit. The probability of reading
//! `|0...0>` is then `((w . x) / sqrt(N))^2`.
//!
//! `diag(w)` is built from one X-conjugated CNZ per negative entry. Weight
//! index `i` corresponds to basis state `|i>` with qubit 0 as the top bit.

mod dataset;
mod eval;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{text_content, Circuit, CircuitError, Gate, ParseError};
use crate::mapper::MapperError;
use crate::sim::{SimError, StateVector};
use crate::topology::TopologyError;

pub use dataset::{make_synthetic_dataset, parse_dataset, write_dataset, Dataset, Sample};
pub(crate) use eval::check_labels;
pub use eval::{
    accuracy_from_outputs, best_joint_model, derive_seed, Backend, Evaluator, JointBest,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QnnError {
    #[error("length {0} is not a power of two of at least 2")]
    NotPowerOfTwo(usize),
    #[error("weight {0} is not +1 or -1")]
    BadWeight(i64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("at least 2 samples are needed, got {0}")]
    TooFewSamples(usize),
    #[error("sample {index} has norm {norm}, expected 1")]
    NotNormalized { index: usize, norm: f64 },
    #[error("label {label} of sample {index} has no matching neuron")]
    BadLabel { index: usize, label: usize },
    #[error("model has no neurons")]
    EmptyModel,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Mapper(#[from] MapperError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Weights in `{-1,+1}`, length a power of two.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct WeightVector(Vec<i8>);

impl WeightVector {
    pub fn new(entries: Vec<i8>) -> Result<Self, QnnError> {
        if entries.len() < 2 || !entries.len().is_power_of_two() {
            return Err(QnnError::NotPowerOfTwo(entries.len()));
        }
        if let Some(&bad) = entries.iter().find(|&&e| e != 1 && e != -1) {
            return Err(QnnError::BadWeight(bad as i64));
        }
        Ok(Self(entries))
    }

    pub fn ones(len: usize) -> Result<Self, QnnError> {
        Self::new(vec![1; len])
    }

    /// Weight vector whose entry `j` is `-1` iff bit `len-1-j` of `index`
    /// is set, so index 0 is all ones. `len` must be at most 64.
    pub fn from_index(index: u64, len: usize) -> Result<Self, QnnError> {
        assert!(len <= 64, "index encoding covers at most 64 weights");
        Self::new(
            (0..len)
                .map(|j| {
                    if index >> (len - 1 - j) & 1 == 1 {
                        -1
                    } else {
                        1
                    }
                })
                .collect(),
        )
    }

    /// Inverse of [`from_index`](Self::from_index).
    pub fn index(&self) -> u64 {
        assert!(self.len() <= 64, "index encoding covers at most 64 weights");
        self.0
            .iter()
            .fold(0u64, |acc, &e| (acc << 1) | u64::from(e < 0))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn num_qubits(&self) -> usize {
        self.len().trailing_zeros() as usize
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|e| -e).collect())
    }

    /// Copy with entry `i` sign-flipped.
    pub fn flipped(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.0[i] = -out.0[i];
        out
    }

    pub fn num_negative(&self) -> usize {
        self.0.iter().filter(|&&e| e < 0).count()
    }

    /// Sign-normalised copy with at most half the entries negative.
    pub fn normalized(&self) -> Self {
        if 2 * self.num_negative() > self.len() {
            self.negated()
        } else {
            self.clone()
        }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&w, &v)| f64::from(w) * v).sum()
    }
}

impl TryFrom<Vec<i8>> for WeightVector {
    type Error = QnnError;

    fn try_from(v: Vec<i8>) -> Result<Self, QnnError> {
        Self::new(v)
    }
}

impl From<WeightVector> for Vec<i8> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for WeightVector {
    type Err = QnnError;

    /// Accepts `1 -1 1 1`, `1,-1,1,1` or `[1,-1,1,1]`.
    fn from_str(s: &str) -> Result<Self, QnnError> {
        let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
        let entries = inner
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| match t.trim_start_matches('+') {
                "1" => Ok(1),
                "-1" => Ok(-1),
                other => Err(QnnError::Parse(ParseError::new(
                    0,
                    format!("`{other}` is not a weight"),
                ))),
            })
            .collect::<Result<Vec<i8>, _>>()?;
        Self::new(entries)
    }
}

/// Neurons sharing one input length. The predicted class is the index of
/// the neuron with the largest output; ties go to the lower index. A lone
/// neuron predicts class 0 when its output is at least 1/2, else class 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Model {
    neurons: Vec<WeightVector>,
}

impl Model {
    pub fn new(neurons: Vec<WeightVector>) -> Result<Self, QnnError> {
        let first = neurons.first().ok_or(QnnError::EmptyModel)?;
        for w in &neurons {
            if w.len() != first.len() {
                return Err(QnnError::DimensionMismatch {
                    expected: first.len(),
                    got: w.len(),
                });
            }
        }
        Ok(Self { neurons })
    }

    pub fn neurons(&self) -> &[WeightVector] {
        &self.neurons
    }

    pub fn input_len(&self) -> usize {
        self.neurons[0].len()
    }

    /// Number of classes the decision rule can produce.
    pub fn num_classes(&self) -> usize {
        self.neurons.len().max(2)
    }

    /// Predicted class for per-neuron outputs.
    pub fn decide(outputs: &[f64]) -> usize {
        if let [only] = outputs {
            return usize::from(*only < 0.5);
        }
        let mut best = 0;
        for (i, &o) in outputs.iter().enumerate() {
            if o > outputs[best] {
                best = i;
            }
        }
        best
    }

    /// Prediction under the closed-form noiseless outputs.
    pub fn predict_ideal(&self, x: &[f64]) -> Result<usize, QnnError> {
        let outputs = self
            .neurons
            .iter()
            .map(|w| neuron_output_ideal(w, x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::decide(&outputs))
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.neurons.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{w}")?;
        }
        Ok(())
    }
}

/// Model file: one neuron per line, entries `1`/`-1`; `#` comments.
pub fn parse_model(text: &str) -> Result<Model, QnnError> {
    let mut neurons = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = text_content(raw);
        if line.is_empty() {
            continue;
        }
        let w = line.parse::<WeightVector>().map_err(|e| match e {
            QnnError::Parse(p) => QnnError::Parse(ParseError::new(i + 1, p.message)),
            other => QnnError::Parse(ParseError::new(i + 1, other.to_string())),
        })?;
        neurons.push(w);
    }
    Model::new(neurons)
}

pub fn write_model(model: &Model) -> String {
    let mut out = String::new();
    for w in model.neurons() {
        let line: Vec<String> = w.as_slice().iter().map(|e| e.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Auxiliary qubits used by a neuron over `k` computing qubits.
pub fn num_aux_for(k: usize) -> usize {
    k.saturating_sub(2)
}

/// The sign-flip circuit realising `diag(w)` up to a global sign.
///
/// Entries are sign-normalised first (at most `N/2` flips). Each negative
/// index `i` becomes a CNZ over all `k` qubits wrapped in X on the qubits
/// where bit `i` is 0; X gates shared by consecutive wrappers cancel. One
/// block is recorded per flipped index.
pub fn circ_of_weights(w: &WeightVector) -> Result<Circuit, QnnError> {
    let normalized = w.normalized();
    let flips: Vec<usize> = (0..w.len())
        .filter(|&i| normalized.as_slice()[i] < 0)
        .collect();
    sign_flip_circuit(w.num_qubits(), &flips)
}

/// One X-wrapped CNZ block over `k` qubits per entry of `flips`, in order,
/// with shared X gates cancelled. Repeated indices are allowed.
pub fn sign_flip_circuit(k: usize, flips: &[usize]) -> Result<Circuit, QnnError> {
    if k == 0 {
        return Err(QnnError::NotPowerOfTwo(1));
    }
    let mut circuit = Circuit::new(k, num_aux_for(k));
    let core = match k {
        1 => Gate::z(0),
        2 => Gate::cz(0, 1),
        _ => Gate::cnz(&(0..k - 1).collect::<Vec<_>>(), k - 1),
    };
    let zero_bits =
        |i: usize| -> Vec<bool> { (0..k).map(|q| (i >> (k - 1 - q)) & 1 == 0).collect() };

    let mut open = vec![false; k];
    let mut blocks = Vec::with_capacity(flips.len());
    for (n, &i) in flips.iter().enumerate() {
        let start = circuit.len();
        let needed = zero_bits(i);
        for q in 0..k {
            if open[q] != needed[q] {
                circuit.push(Gate::x(q))?;
            }
        }
        open = needed;
        circuit.push(core.clone())?;
        if n + 1 == flips.len() {
            for (q, &o) in open.iter().enumerate() {
                if o {
                    circuit.push(Gate::x(q))?;
                }
            }
        }
        blocks.push(start..circuit.len());
    }
    circuit.set_blocks(blocks)?;
    Ok(circuit)
}

/// `circ_of_weights(w)` followed by H on every computing qubit.
pub fn neuron_circuit(w: &WeightVector) -> Result<Circuit, QnnError> {
    let mut c = circ_of_weights(w)?;
    let blocks = c.blocks().to_vec();
    for q in 0..w.num_qubits() {
        c.push(Gate::h(q))?;
    }
    c.set_blocks(blocks)?;
    Ok(c)
}

fn check_input(len: usize, x: &[f64]) -> Result<(), QnnError> {
    if x.len() != len {
        return Err(QnnError::DimensionMismatch {
            expected: len,
            got: x.len(),
        });
    }
    Ok(())
}

/// Closed form `((w . x) / sqrt(N))^2`.
pub fn neuron_output_ideal(w: &WeightVector, x: &[f64]) -> Result<f64, QnnError> {
    check_input(w.len(), x)?;
    let s = w.dot(x);
    Ok(s * s / w.len() as f64)
}

/// `x` amplitude-encoded on the computing qubits, auxiliaries in `|0>`.
pub fn input_state(x: &[f64], num_aux: usize) -> Result<StateVector, QnnError> {
    let mut amps = vec![Complex64::new(0.0, 0.0); x.len() << num_aux];
    for (i, &v) in x.iter().enumerate() {
        amps[i << num_aux] = Complex64::new(v, 0.0);
    }
    Ok(StateVector::from_amplitudes(amps)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind;
    use crate::sim::{born_distribution, run_ideal};

    fn w(v: &[i8]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn validation() {
        assert_eq!(
            WeightVector::new(vec![1, 1, 1]),
            Err(QnnError::NotPowerOfTwo(3))
        );
        assert_eq!(WeightVector::new(vec![1, 0]), Err(QnnError::BadWeight(0)));
        assert!(WeightVector::new(vec![1]).is_err());
    }

    #[test]
    fn index_round_trip() {
        for i in 0..256 {
            assert_eq!(WeightVector::from_index(i, 8).unwrap().index(), i);
        }
        assert_eq!(WeightVector::from_index(1, 4).unwrap(), w(&[1, 1, 1, -1]));
    }

    #[test]
    fn parse_forms() {
        let a: WeightVector = "[-1,-1,1,1,1,1,1,1]".parse().unwrap();
        let b: WeightVector = "-1 -1 1 1 +1 1 1 1".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "[-1,-1,1,1,1,1,1,1]");
        assert!("1 2".parse::<WeightVector>().is_err());
    }

    #[test]
    fn model_file_round_trip() {
        let text = "# baseline\n-1 -1 1 1 1 1 1 1\n1 1 1 1 1 1 1 1\n";
        let m = parse_model(text).unwrap();
        assert_eq!(m.neurons().len(), 2);
        assert_eq!(parse_model(&write_model(&m)).unwrap(), m);
        let err = parse_model("1 1\n1 x\n").unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
        assert!(parse_model("1 1\n1 1 1 1\n").is_err());
        assert!(parse_model("").is_err());
    }

    #[test]
    fn all_ones_is_empty() {
        assert!(circ_of_weights(&WeightVector::ones(8).unwrap())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn last_index_is_bare_cnz() {
        let c = circ_of_weights(&w(&[1, 1, 1, 1, 1, 1, 1, -1])).unwrap();
        assert_eq!(c.gates(), &[Gate::cnz(&[0, 1], 2)]);
        assert_eq!((c.num_computing(), c.num_aux()), (3, 1));
        assert_eq!(c.blocks().len(), 1);
        assert_eq!(c.blocks()[0], 0..1);
    }

    #[test]
    fn wrappers_merge() {
        // indices 0 (000) and 1 (001): X0 X1 X2 CNZ X2 CNZ X0 X1
        let c = circ_of_weights(&w(&[-1, -1, 1, 1, 1, 1, 1, 1])).unwrap();
        let kinds: Vec<String> = c.gates().iter().map(|g| g.to_string()).collect();
        assert_eq!(
            kinds,
            vec![
                "x 0",
                "x 1",
                "x 2",
                "cnz2 0 1 2",
                "x 2",
                "cnz2 0 1 2",
                "x 0",
                "x 1"
            ]
        );
        assert_eq!(c.blocks(), &[0..4, 4..8]);
    }

    #[test]
    fn sign_normalisation_caps_blocks() {
        let c = circ_of_weights(&w(&[-1, -1, -1, -1, -1, -1, -1, 1])).unwrap();
        assert_eq!(c.count(GateKind::Cnz(2)), 1);
    }

    #[test]
    fn small_registers() {
        let c = circ_of_weights(&w(&[-1, 1])).unwrap();
        assert_eq!(c.gates(), &[Gate::x(0), Gate::z(0), Gate::x(0)]);
        let c = circ_of_weights(&w(&[1, -1, 1, 1])).unwrap();
        assert_eq!(c.gates(), &[Gate::x(0), Gate::cz(0, 1), Gate::x(0)]);
    }

    #[test]
    fn closed_form_examples() {
        let x = vec![1.0 / 8f64.sqrt(); 8];
        assert!(
            (neuron_output_ideal(&WeightVector::ones(8).unwrap(), &x).unwrap() - 1.0).abs() < 1e-12
        );
        let half = w(&[1, -1, 1, -1, -1, 1, -1, 1]);
        assert!(neuron_output_ideal(&half, &x).unwrap().abs() < 1e-12);
        assert!(neuron_output_ideal(&half, &x[..4]).is_err());
    }

    #[test]
    fn circuit_matches_closed_form() {
        let x: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin() + 0.1).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x: Vec<f64> = x.iter().map(|v| v / norm).collect();
        for idx in [0u64, 1, 37, 128, 200, 255] {
            let wv = WeightVector::from_index(idx, 8).unwrap();
            let c = neuron_circuit(&wv).unwrap();
            let out = run_ideal(&c, &input_state(&x, c.num_aux()).unwrap()).unwrap();
            let p = born_distribution(&out, &[0, 1, 2]).prob(0);
            assert!((p - neuron_output_ideal(&wv, &x).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn decision_rule_ties_go_low() {
        assert_eq!(Model::decide(&[0.3, 0.3]), 0);
        assert_eq!(Model::decide(&[0.2, 0.3]), 1);
    }
}
