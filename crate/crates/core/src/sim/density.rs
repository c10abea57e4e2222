use num_complex::Complex64;

use crate::circuit::{Gate, GateKind};
use crate::noise::{BoundNoise, Channel, ChannelKind, ReadoutError};

use super::{
    check_width, kernel, marginal, Distribution, SimError, StateVector, DENSITY_WIDTH_CAP,
};

/// Density matrix stored as `vec(rho)` over `2n` qubits: the first `n`
/// index bits select the row, the last `n` the column.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &StateVector) -> Self {
        let amps = state.amplitudes();
        let data = amps
            .iter()
            .flat_map(|r| amps.iter().map(move |c| r * c.conj()))
            .collect();
        Self {
            num_qubits: state.num_qubits(),
            data,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row << self.num_qubits) | col]
    }

    pub fn trace(&self) -> f64 {
        (0..1usize << self.num_qubits)
            .map(|i| self.entry(i, i).re)
            .sum()
    }

    /// Diagonal of `rho` (computational-basis probabilities).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..1usize << self.num_qubits)
            .map(|i| self.entry(i, i).re)
            .collect()
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        let n = self.num_qubits;
        kernel::apply_gate(&mut self.data, 2 * n, gate, 0, false);
        kernel::apply_gate(&mut self.data, 2 * n, gate, n, true);
    }

    // P rho P^dagger for a Pauli string given as one index per qubit.
    fn conjugate_by(&self, qubits: &[usize], paulis: &[u8]) -> Vec<Complex64> {
        let n = self.num_qubits;
        let mut out = self.data.clone();
        for (&q, &p) in qubits.iter().zip(paulis) {
            kernel::apply_pauli(&mut out, 2 * n, q, p, false);
            kernel::apply_pauli(&mut out, 2 * n, q + n, p, true);
        }
        out
    }

    /// Applies a stochastic Pauli channel as an exact mixture.
    pub fn apply_channel(&mut self, channel: &Channel) {
        let p = channel.p;
        let k = channel.qubits.len();
        let terms: Vec<(f64, Vec<u8>)> = match channel.kind {
            ChannelKind::BitFlip => vec![(p, vec![1])],
            ChannelKind::PhaseFlip => vec![(p, vec![3])],
            ChannelKind::Depolarizing => {
                let count = (1usize << (2 * k)) - 1;
                (1..=count)
                    .map(|code| (p / count as f64, pauli_string(code, k)))
                    .collect()
            }
        };
        let mut mixed: Vec<Complex64> = self.data.iter().map(|v| v * (1.0 - p)).collect();
        for (weight, paulis) in terms {
            let term = self.conjugate_by(&channel.qubits, &paulis);
            for (m, t) in mixed.iter_mut().zip(term) {
                *m += t * weight;
            }
        }
        self.data = mixed;
    }
}

/// Decodes `code` in `1..4^k` into one Pauli index (0..4) per qubit, first
/// qubit in the most significant base-4 digit.
pub(crate) fn pauli_string(code: usize, k: usize) -> Vec<u8> {
    (0..k)
        .map(|j| ((code >> (2 * (k - 1 - j))) & 3) as u8)
        .collect()
}

/// Local basis index of logical basis index `i` (spare local qubits at 0).
fn local_index(bound: &BoundNoise, i: usize) -> usize {
    let (width, n) = (bound.input.len(), bound.num_qubits);
    let mut j = 0;
    for (l, &q) in bound.input.iter().enumerate() {
        if (i >> (width - 1 - l)) & 1 == 1 {
            j |= 1 << (n - 1 - q);
        }
    }
    j
}

/// Places a logical-register state onto the local qubits of `bound`.
pub(crate) fn embed(bound: &BoundNoise, init: &StateVector) -> Result<StateVector, SimError> {
    let width = bound.input.len();
    if init.num_qubits() != width {
        return Err(SimError::DimensionMismatch {
            expected: width,
            got: init.num_qubits(),
        });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << bound.num_qubits];
    for (i, &a) in init.amplitudes().iter().enumerate() {
        amps[local_index(bound, i)] = a;
    }
    Ok(StateVector::from_raw(bound.num_qubits, amps))
}

/// Applies independent per-bit readout errors to an outcome distribution.
pub(crate) fn apply_readout_matrix(probs: &mut [f64], table: &[ReadoutError]) {
    let m = table.len();
    for (j, r) in table.iter().enumerate() {
        if r.is_zero() {
            continue;
        }
        let bit = 1 << (m - 1 - j);
        for o in 0..probs.len() {
            if o & bit == 0 {
                let (p0, p1) = (probs[o], probs[o | bit]);
                probs[o] = p0 * (1.0 - r.p01) + p1 * r.p10;
                probs[o | bit] = p0 * r.p01 + p1 * (1.0 - r.p10);
            }
        }
    }
}

/// Exact noisy outcome distribution over the measured computing qubits.
pub fn run_density(bound: &BoundNoise, init: &StateVector) -> Result<Distribution, SimError> {
    check_width(bound.num_qubits, DENSITY_WIDTH_CAP)?;
    let state = embed(bound, init)?;
    let mut rho = DensityMatrix::from_pure(&state);
    let mut channels = bound.channels.iter().peekable();
    for (i, gate) in bound.gates.iter().enumerate() {
        rho.apply_gate(gate);
        while let Some(ch) = channels.next_if(|c| c.after == i) {
            rho.apply_channel(ch);
        }
    }
    let mut probs = marginal(
        bound.num_qubits,
        rho.diagonal().into_iter(),
        &bound.measured,
    );
    apply_readout_matrix(&mut probs, &bound.readout);
    Ok(Distribution::new(bound.measured.len(), probs))
}

/// Hermitian form `Q` over the logical register with
/// `<psi|Q|psi>` = probability that a noisy run from `psi` reads `outcome`.
///
/// Built by evolving the readout-weighted outcome projector backwards
/// through the adjoint circuit and channels, so one pass serves every
/// input state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    dim: usize,
    matrix: Vec<Complex64>,
}

impl QuadraticForm {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, amps: &[Complex64]) -> f64 {
        assert_eq!(amps.len(), self.dim, "state dimension");
        let mut total = Complex64::new(0.0, 0.0);
        for (i, a) in amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let row = &self.matrix[i * self.dim..(i + 1) * self.dim];
            let inner: Complex64 = row.iter().zip(amps).map(|(q, b)| q * b).sum();
            total += a.conj() * inner;
        }
        total.re
    }

    /// Same as [`eval`](Self::eval) for a real amplitude vector.
    pub fn eval_real(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "state dimension");
        let mut total = 0.0;
        for (i, &a) in x.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &self.matrix[i * self.dim..(i + 1) * self.dim];
            total += a * row.iter().zip(x).map(|(q, &b)| q.re * b).sum::<f64>();
        }
        total
    }
}

fn adjoint_gates(gate: &Gate) -> Vec<Gate> {
    let kind = match gate.kind {
        GateKind::T => GateKind::Tdg,
        GateKind::Tdg => GateKind::T,
        GateKind::S => return vec![gate.clone(), Gate::z(gate.qubits[0])],
        _ => return vec![gate.clone()],
    };
    vec![Gate {
        kind,
        qubits: gate.qubits.clone(),
        tag: None,
    }]
}

/// The exact noisy probability of `outcome` as a form in the input state.
pub fn outcome_form(bound: &BoundNoise, outcome: usize) -> Result<QuadraticForm, SimError> {
    check_width(bound.num_qubits, DENSITY_WIDTH_CAP)?;
    let n = bound.num_qubits;
    let m = bound.measured.len();
    // Readout-weighted projector: diagonal, depends on the measured bits only.
    let mut weight = vec![1.0; 1 << m];
    for (true_bits, w) in weight.iter_mut().enumerate() {
        for (j, r) in bound.readout.iter().enumerate() {
            let bit = 1 << (m - 1 - j);
            let (truth, read) = (true_bits & bit != 0, outcome & bit != 0);
            *w *= match (truth, read) {
                (false, false) => 1.0 - r.p01,
                (false, true) => r.p01,
                (true, false) => r.p10,
                (true, true) => 1.0 - r.p10,
            };
        }
    }
    let dim = 1usize << n;
    let mut obs = DensityMatrix {
        num_qubits: n,
        data: vec![Complex64::new(0.0, 0.0); dim * dim],
    };
    for i in 0..dim {
        let mut key = 0;
        for &q in &bound.measured {
            key = (key << 1) | ((i >> (n - 1 - q)) & 1);
        }
        obs.data[(i << n) | i] = Complex64::new(weight[key], 0.0);
    }

    let mut channels = bound.channels.iter().rev().peekable();
    for (i, gate) in bound.gates.iter().enumerate().rev() {
        while let Some(ch) = channels.next_if(|c| c.after == i) {
            obs.apply_channel(ch);
        }
        for g in adjoint_gates(gate) {
            obs.apply_gate(&g);
        }
    }

    let width = bound.input.len();
    let ldim = 1usize << width;
    let index: Vec<usize> = (0..ldim).map(|i| local_index(bound, i)).collect();
    let mut matrix = Vec::with_capacity(ldim * ldim);
    for &r in &index {
        for &c in &index {
            matrix.push(obs.data[(r << n) | c]);
        }
    }
    Ok(QuadraticForm { dim: ldim, matrix })
}
