//! Gate and circuit representation.
//!
//! Qubit 0 is the most significant bit of every basis-state index. Auxiliary
//! qubits are numbered after the computing qubits and are shared by every
//! block of a circuit.

mod decompose;
mod text;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decompose::{
    decompose_bridge3, decompose_ccx, decompose_cnz, decompose_swap, expand_to_basis,
    TOFFOLI_CX_COUNT, TOFFOLI_GATE_COUNT,
};
pub(crate) use text::content as text_content;
pub use text::{parse_circuit, write_circuit, ParseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("{kind} expects {expected} qubits, got {got}")]
    Arity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("qubit {qubit} is out of range for a circuit of width {width}")]
    QubitOutOfRange { qubit: usize, width: usize },
    #[error("qubit {0} appears more than once in one gate")]
    RepeatedQubit(usize),
    #[error("cnz needs at least one control")]
    NoControls,
    #[error("not enough auxiliary qubits: need {needed}, have {available}")]
    InsufficientAux { needed: usize, available: usize },
    #[error("expected a {expected} gate, got {got}")]
    WrongKind {
        expected: &'static str,
        got: GateKind,
    },
    #[error("block range {start}..{end} is invalid for {len} gates")]
    BadBlock {
        start: usize,
        end: usize,
        len: usize,
    },
}

/// Gate kinds. `Cnz(n)` carries its control count; `Cnz(1)` acts as `CZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    T,
    Tdg,
    CX,
    CZ,
    Swap,
    Bridge3,
    CCX,
    Cnz(usize),
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::X
            | GateKind::Y
            | GateKind::Z
            | GateKind::H
            | GateKind::S
            | GateKind::T
            | GateKind::Tdg => 1,
            GateKind::CX | GateKind::CZ | GateKind::Swap => 2,
            GateKind::Bridge3 | GateKind::CCX => 3,
            GateKind::Cnz(n) => n + 1,
        }
    }

    /// True for the gates left after [`expand_to_basis`].
    pub fn is_basis(self) -> bool {
        !matches!(self, GateKind::Bridge3 | GateKind::CCX | GateKind::Cnz(_))
    }

    pub fn is_single_qubit(self) -> bool {
        self.arity() == 1
    }

    /// Lowercase mnemonic used by the text format.
    pub fn mnemonic(self) -> String {
        match self {
            GateKind::X => "x".into(),
            GateKind::Y => "y".into(),
            GateKind::Z => "z".into(),
            GateKind::H => "h".into(),
            GateKind::S => "s".into(),
            GateKind::T => "t".into(),
            GateKind::Tdg => "tdg".into(),
            GateKind::CX => "cx".into(),
            GateKind::CZ => "cz".into(),
            GateKind::Swap => "swap".into(),
            GateKind::Bridge3 => "bridge".into(),
            GateKind::CCX => "ccx".into(),
            GateKind::Cnz(n) => format!("cnz{n}"),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.mnemonic())
    }
}

/// Marks a gate as part of one Toffoli network produced by [`decompose_ccx`].
///
/// `cx` is `Some(1..=6)` for the six CNOTs g1..g6 and `None` for the
/// single-qubit dressing. `operands` are the Toffoli's logical qubits
/// `[control_a, control_b, target]`; they survive routing so noise can be
/// attached to the Toffoli as one unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ToffoliTag {
    pub instance: u32,
    pub cx: Option<u8>,
    pub operands: [usize; 3],
    /// Set on the uncompute half of a CNZ ladder, where the target returns to |0>.
    pub uncompute: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    /// CX: `[control, target]`; BRIDGE3: `[control, middle, target]`;
    /// CCX and CNZ: controls then target.
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<ToffoliTag>,
}

impl Gate {
    /// Builds a gate after checking arity and distinctness.
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Result<Self, CircuitError> {
        if let GateKind::Cnz(0) = kind {
            return Err(CircuitError::NoControls);
        }
        if qubits.len() != kind.arity() {
            return Err(CircuitError::Arity {
                kind,
                expected: kind.arity(),
                got: qubits.len(),
            });
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(CircuitError::RepeatedQubit(*q));
            }
        }
        Ok(Self {
            kind,
            qubits,
            tag: None,
        })
    }

    // Internal constructor for decompositions whose operands are already valid.
    pub(crate) fn raw(kind: GateKind, qubits: &[usize]) -> Self {
        debug_assert_eq!(qubits.len(), kind.arity());
        Self {
            kind,
            qubits: qubits.to_vec(),
            tag: None,
        }
    }

    pub fn x(q: usize) -> Self {
        Self::raw(GateKind::X, &[q])
    }

    pub fn z(q: usize) -> Self {
        Self::raw(GateKind::Z, &[q])
    }

    pub fn h(q: usize) -> Self {
        Self::raw(GateKind::H, &[q])
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::raw(GateKind::CX, &[control, target])
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self::raw(GateKind::CZ, &[a, b])
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self::raw(GateKind::Swap, &[a, b])
    }

    pub fn ccx(a: usize, b: usize, target: usize) -> Self {
        Self::raw(GateKind::CCX, &[a, b, target])
    }

    pub fn bridge3(control: usize, middle: usize, target: usize) -> Self {
        Self::raw(GateKind::Bridge3, &[control, middle, target])
    }

    /// CNZ over `controls` followed by `target`.
    pub fn cnz(controls: &[usize], target: usize) -> Self {
        let mut qubits = controls.to_vec();
        qubits.push(target);
        Self::raw(GateKind::Cnz(controls.len()), &qubits)
    }

    pub fn with_tag(mut self, tag: Option<ToffoliTag>) -> Self {
        self.tag = tag;
        self
    }

    /// Same gate with every qubit index passed through `f`.
    pub fn relabel(&self, mut f: impl FnMut(usize) -> usize) -> Self {
        Self {
            kind: self.kind,
            qubits: self.qubits.iter().map(|&q| f(q)).collect(),
            tag: self.tag,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for q in &self.qubits {
            write!(f, " {q}")?;
        }
        Ok(())
    }
}

/// An ordered gate list over `num_computing + num_aux` logical qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    num_computing: usize,
    num_aux: usize,
    gates: Vec<Gate>,
    /// Gate-index ranges of the weight blocks, if the builder recorded them.
    #[serde(default)]
    blocks: Vec<Range<usize>>,
}

impl Circuit {
    pub fn new(num_computing: usize, num_aux: usize) -> Self {
        Self {
            num_computing,
            num_aux,
            gates: Vec::new(),
            blocks: Vec::new(),
        }
    }

    pub fn from_gates(
        num_computing: usize,
        num_aux: usize,
        gates: Vec<Gate>,
    ) -> Result<Self, CircuitError> {
        let mut circuit = Self::new(num_computing, num_aux);
        for gate in gates {
            circuit.push(gate)?;
        }
        Ok(circuit)
    }

    pub fn num_computing(&self) -> usize {
        self.num_computing
    }

    pub fn num_aux(&self) -> usize {
        self.num_aux
    }

    pub fn width(&self) -> usize {
        self.num_computing + self.num_aux
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    /// Auxiliary qubit indices, in order.
    pub fn aux_qubits(&self) -> Range<usize> {
        self.num_computing..self.width()
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        self.check_gate(&gate)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<(), CircuitError> {
        for gate in gates {
            self.push(gate)?;
        }
        Ok(())
    }

    pub fn set_blocks(&mut self, blocks: Vec<Range<usize>>) -> Result<(), CircuitError> {
        for b in &blocks {
            if b.start > b.end || b.end > self.gates.len() {
                return Err(CircuitError::BadBlock {
                    start: b.start,
                    end: b.end,
                    len: self.gates.len(),
                });
            }
        }
        self.blocks = blocks;
        Ok(())
    }

    fn check_gate(&self, gate: &Gate) -> Result<(), CircuitError> {
        let checked = Gate::new(gate.kind, gate.qubits.clone())?;
        for &q in &checked.qubits {
            if q >= self.width() {
                return Err(CircuitError::QubitOutOfRange {
                    qubit: q,
                    width: self.width(),
                });
            }
        }
        Ok(())
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// Largest CNZ control count in the circuit (CZ counts as one control).
    pub fn max_cnz_controls(&self) -> usize {
        self.gates
            .iter()
            .filter_map(|g| match g.kind {
                GateKind::Cnz(n) => Some(n),
                GateKind::CZ => Some(1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Circuit depth counting every gate (composites included) as one layer.
pub fn depth(width: usize, gates: &[Gate]) -> usize {
    let mut level = vec![0usize; width];
    let mut depth = 0;
    for gate in gates {
        let next = gate.qubits.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
        for &q in &gate.qubits {
            level[q] = next;
        }
        depth = depth.max(next);
    }
    depth
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arity_table() {
        assert_eq!(GateKind::Tdg.arity(), 1);
        assert_eq!(GateKind::Swap.arity(), 2);
        assert_eq!(GateKind::Bridge3.arity(), 3);
        assert_eq!(GateKind::Cnz(4).arity(), 5);
    }

    #[test]
    fn gate_rejects_bad_operands() {
        assert!(matches!(
            Gate::new(GateKind::CX, vec![0]),
            Err(CircuitError::Arity { .. })
        ));
        assert_eq!(
            Gate::new(GateKind::CCX, vec![0, 1, 0]),
            Err(CircuitError::RepeatedQubit(0))
        );
        assert_eq!(
            Gate::new(GateKind::Cnz(0), vec![0]),
            Err(CircuitError::NoControls)
        );
    }

    #[test]
    fn circuit_checks_width() {
        let mut c = Circuit::new(2, 1);
        assert!(c.push(Gate::ccx(0, 1, 2)).is_ok());
        assert_eq!(
            c.push(Gate::cx(0, 3)),
            Err(CircuitError::QubitOutOfRange { qubit: 3, width: 3 })
        );
    }

    #[test]
    fn depth_counts_layers() {
        let gates = vec![Gate::h(0), Gate::h(1), Gate::cx(0, 1), Gate::x(2)];
        assert_eq!(depth(3, &gates), 2);
    }
}
