//! Execution backends: exact state-vector evolution, exact density-matrix
//! evolution for small widths, and Monte-Carlo trajectories.

mod density;
pub(crate) mod kernel;
mod trajectory;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, ParseError};

pub use density::{outcome_form, run_density, DensityMatrix, QuadraticForm};
pub use trajectory::{run_noiseless, run_trajectories, shot_rng};

/// Default width cap for state-vector simulation.
pub const STATE_WIDTH_CAP: usize = 20;
/// Width cap for the density-matrix backend (2^n x 2^n entries).
pub const DENSITY_WIDTH_CAP: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("width {width} exceeds the simulator cap of {cap} qubits")]
    WidthCap { width: usize, cap: usize },
    #[error("state has {got} qubits, circuit needs {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shots must be positive")]
    ZeroShots,
    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Pure state over `n` qubits; qubit 0 is the most significant index bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0...0> on `n` qubits.
    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        Self {
            num_qubits: n,
            amps,
        }
    }

    /// Wraps `amps`, checking the length is a power of two and the norm is 1.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(SimError::NotPowerOfTwo(len));
        }
        let state = Self {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn from_real(values: &[f64]) -> Result<Self, SimError> {
        Self::from_amplitudes(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub(crate) fn from_raw(num_qubits: usize, amps: Vec<Complex64>) -> Self {
        Self { num_qubits, amps }
    }
}

/// Amplitude file: one amplitude per line as `re` or `re im`; `#` starts a
/// comment. The vector must have power-of-two length and unit norm.
pub fn parse_amplitudes(text: &str) -> Result<StateVector, SimError> {
    let mut amps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = crate::circuit::text_content(raw);
        if line.is_empty() {
            continue;
        }
        let err = |m: String| SimError::Parse(ParseError::new(i + 1, m));
        let parts = line
            .split_whitespace()
            .map(|w| {
                w.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("bad number `{w}`")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        match parts.as_slice() {
            [re] => amps.push(Complex64::new(*re, 0.0)),
            [re, im] => amps.push(Complex64::new(*re, *im)),
            _ => return Err(err(format!("expected 1 or 2 numbers, got {}", parts.len()))),
        }
    }
    StateVector::from_amplitudes(amps)
}

/// Outcome probabilities over measured qubits; the first measured qubit is
/// the most significant bit of the outcome index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    num_bits: usize,
    probs: Vec<f64>,
}

impl Distribution {
    pub(crate) fn new(num_bits: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), 1 << num_bits);
        Self { num_bits, probs }
    }

    pub fn num_bits(&self) -> usize {
        self.num_bits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, outcome: usize) -> f64 {
        self.probs[outcome]
    }

    /// Total variation distance, half the L1 distance.
    pub fn tvd(&self, other: &Distribution) -> f64 {
        assert_eq!(
            self.num_bits, other.num_bits,
            "distributions over different widths"
        );
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
    }

    /// Non-zero outcomes keyed by bitstring.
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (bitstring(i, self.num_bits), p))
            .collect()
    }
}

/// Histogram of sampled outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    pub num_bits: usize,
    pub counts: Vec<u64>,
    pub shots: u64,
    pub seed: u64,
}

impl ShotCounts {
    pub fn count(&self, outcome: usize) -> u64 {
        self.counts[outcome]
    }

    pub fn frequency(&self, outcome: usize) -> f64 {
        self.counts[outcome] as f64 / self.shots as f64
    }

    pub fn to_map(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (bitstring(i, self.num_bits), c))
            .collect()
    }

    pub fn empirical(&self) -> Distribution {
        Distribution::new(
            self.num_bits,
            (0..self.counts.len()).map(|i| self.frequency(i)).collect(),
        )
    }
}

pub fn bitstring(index: usize, bits: usize) -> String {
    (0..bits)
        .map(|b| {
            if index >> (bits - 1 - b) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

fn check_width(width: usize, cap: usize) -> Result<(), SimError> {
    if width > cap {
        Err(SimError::WidthCap { width, cap })
    } else {
        Ok(())
    }
}

/// Applies every gate's unitary in order.
pub fn run_ideal(circuit: &Circuit, init: &StateVector) -> Result<StateVector, SimError> {
    run_ideal_capped(circuit, init, STATE_WIDTH_CAP)
}

pub fn run_ideal_capped(
    circuit: &Circuit,
    init: &StateVector,
    cap: usize,
) -> Result<StateVector, SimError> {
    let n = circuit.width();
    check_width(n, cap)?;
    if init.num_qubits != n {
        return Err(SimError::DimensionMismatch {
            expected: n,
            got: init.num_qubits,
        });
    }
    let mut amps = init.amps.clone();
    for gate in circuit.gates() {
        kernel::apply_gate(&mut amps, n, gate, 0, false);
    }
    Ok(StateVector::from_raw(n, amps))
}

/// Marginal Born distribution over `measured` qubits.
pub fn born_distribution(state: &StateVector, measured: &[usize]) -> Distribution {
    Distribution::new(
        measured.len(),
        marginal(
            state.num_qubits,
            state.amps.iter().map(|a| a.norm_sqr()),
            measured,
        ),
    )
}

/// Sums full-register probabilities onto the `measured` qubits.
pub(crate) fn marginal(n: usize, probs: impl Iterator<Item = f64>, measured: &[usize]) -> Vec<f64> {
    let m = measured.len();
    let mut out = vec![0.0; 1 << m];
    for (i, p) in probs.enumerate() {
        let mut key = 0usize;
        for &q in measured {
            key = (key << 1) | ((i >> (n - 1 - q)) & 1);
        }
        out[key] += p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn amplitude_files() {
        let s =
            parse_amplitudes("# bell\n0.7071067811865476\n0 0\n0\n0 0.7071067811865476\n").unwrap();
        assert_eq!(s.num_qubits(), 2);
        assert_eq!(s.amplitudes()[3], Complex64::new(0.0, FRAC_1_SQRT_2));
        assert_eq!(
            parse_amplitudes("1\n0\n0\n"),
            Err(SimError::NotPowerOfTwo(3))
        );
        assert!(matches!(
            parse_amplitudes("1\n1\n"),
            Err(SimError::NotNormalized(_))
        ));
        let e = parse_amplitudes("1\n0 0 0\n").unwrap_err();
        assert_eq!(e.to_string(), "line 2: expected 1 or 2 numbers, got 3");
        assert!(parse_amplitudes("inf\n0\n").is_err());
        assert_eq!(parse_amplitudes(""), Err(SimError::NotPowerOfTwo(0)));
    }

    #[test]
    fn hadamard_on_zero() {
        let c = Circuit::from_gates(1, 0, vec![Gate::h(0)]).unwrap();
        let s = run_ideal(&c, &StateVector::zero(1)).unwrap();
        assert!(close(s.amplitudes()[0].re, FRAC_1_SQRT_2));
        assert!(close(s.amplitudes()[1].re, FRAC_1_SQRT_2));
    }

    #[test]
    fn cz_flips_phase_of_11() {
        let c = Circuit::from_gates(2, 0, vec![Gate::cz(0, 1)]).unwrap();
        let s = run_ideal(&c, &StateVector::basis(2, 3)).unwrap();
        assert!(close(s.amplitudes()[3].re, -1.0));
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        let c = Circuit::from_gates(3, 0, vec![Gate::x(0)]).unwrap();
        let s = run_ideal(&c, &StateVector::zero(3)).unwrap();
        assert!(close(s.amplitudes()[0b100].re, 1.0));
    }

    #[test]
    fn born_examples() {
        let s = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let d = born_distribution(&s, &[0]);
        assert!(close(d.prob(0), 0.36) && close(d.prob(1), 0.64));
        let bell = StateVector::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap();
        let d = born_distribution(&bell, &[0]);
        assert!(close(d.prob(0), 0.5) && close(d.prob(1), 0.5));
        assert_eq!(d.to_map().len(), 2);
    }

    #[test]
    fn width_cap_and_dimension_errors() {
        let c = Circuit::new(3, 0);
        assert!(matches!(
            run_ideal_capped(&c, &StateVector::zero(3), 2),
            Err(SimError::WidthCap { width: 3, cap: 2 })
        ));
        assert!(matches!(
            run_ideal(&c, &StateVector::zero(2)),
            Err(SimError::DimensionMismatch { .. })
        ));
        assert!(StateVector::from_real(&[1.0, 0.0, 0.0]).is_err());
        assert!(StateVector::from_real(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn bitstrings() {
        assert_eq!(bitstring(5, 4), "0101");
        assert_eq!(bitstring(0, 0), "");
    }
}
