//! Fixed-mapping compilation of C^NZ weight circuits.
//!
//! Logical qubits are laid out along a chain by interleaving computing and
//! auxiliary qubits (`q0, aux0, q1, aux1, ..., q_{n-1}, q_n`). Every CNZ
//! block is routed with a forward phase (one SWAP before g5 of each ladder
//! Toffoli) and a backward phase (one SWAP before g1 and a BRIDGE through
//! the |0> target for g5/g6 of each uncompute Toffoli). The block leaves the
//! layout exactly as it found it, so the logical-to-physical mapping at every
//! block boundary is the same for every weight vector.
//!
//! [`naive_route`] is a greedy shortest-path router kept as a baseline.

mod chain;
mod greedy;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{self, expand_to_basis, Circuit, CircuitError, Gate, GateKind};
use crate::topology::{CouplingGraph, Mapping, TopologyError};

pub use chain::route_cnz_block;
pub use greedy::naive_route;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapperError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("chain has {got} qubits, the interleaved layout needs {expected}")]
    ChainLength { expected: usize, got: usize },
    #[error("mapping is not the canonical interleaved layout")]
    MappingNotCanonical,
    #[error("gate {index} (`{gate}`) is not supported by this router")]
    UnsupportedGate { index: usize, gate: String },
    #[error("gate `{gate}` cannot be placed: physical qubits {a} and {b} are not coupled")]
    NotRoutable { gate: String, a: usize, b: usize },
    #[error("block ending at gate {0} did not restore the canonical mapping")]
    RestorationViolated(usize),
}

/// Routing counters.
///
/// `bridges` counts bridge operations: one per uncompute Toffoli whose control
/// pair is joined through its |0> target. Each operation emits two BRIDGE3
/// gates (for g5 and g6), counted in `bridge_gates`. `extra_cx` charges three
/// CNOTs per SWAP and per bridge operation; `routed_cx_overhead` is the
/// measured CNOT increase of the routed circuit over the logical one after
/// both are lowered to CX.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteStats {
    pub swaps: usize,
    pub bridges: usize,
    pub bridge_gates: usize,
    pub extra_cx: usize,
    pub routed_cx_overhead: isize,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapEvent {
    /// Index of the SWAP in `physical_gates`.
    pub gate_index: usize,
    pub a: usize,
    pub b: usize,
}

/// A BRIDGE3 together with the obligation that its middle qubit is |0>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgeRecord {
    pub gate_index: usize,
    pub control: usize,
    pub middle: usize,
    pub target: usize,
    /// Logical auxiliary sitting on `middle`, required to be |0> here.
    pub middle_logical: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedCircuit {
    pub num_computing: usize,
    pub num_aux: usize,
    pub num_physical: usize,
    pub physical_gates: Vec<Gate>,
    pub initial_mapping: Mapping,
    pub final_mapping: Mapping,
    /// Mapping after each gate of the routed logical circuit.
    pub gate_boundaries: Vec<Mapping>,
    /// Logical gate ranges of the weight blocks.
    pub blocks: Vec<std::ops::Range<usize>>,
    pub swaps: Vec<SwapEvent>,
    pub bridges: Vec<BridgeRecord>,
    pub stats: RouteStats,
}

impl MappedCircuit {
    /// Wraps a logical circuit without routing: identity mapping, gates
    /// lowered to basis gates.
    pub fn unrouted(circuit: &Circuit) -> Result<Self, MapperError> {
        let expanded = expand_to_basis(circuit)?;
        let width = circuit.width();
        let identity = Mapping::identity(width);
        Ok(Self {
            num_computing: circuit.num_computing(),
            num_aux: circuit.num_aux(),
            num_physical: width,
            physical_gates: expanded.gates().to_vec(),
            initial_mapping: identity.clone(),
            final_mapping: identity.clone(),
            gate_boundaries: vec![identity; expanded.len()],
            blocks: expanded.blocks().to_vec(),
            swaps: Vec::new(),
            bridges: Vec::new(),
            stats: RouteStats {
                depth: circuit::depth(width, expanded.gates()),
                ..RouteStats::default()
            },
        })
    }

    pub fn width(&self) -> usize {
        self.num_computing + self.num_aux
    }

    /// Mappings at the start and after every block.
    pub fn block_boundary_mappings(&self) -> Vec<&Mapping> {
        let mut out = vec![&self.initial_mapping];
        for b in &self.blocks {
            if b.end > 0 {
                out.push(&self.gate_boundaries[b.end - 1]);
            }
        }
        out
    }

    /// Checks every multi-qubit physical gate against the coupling graph.
    pub fn check_legality(&self, graph: &CouplingGraph) -> Result<(), MapperError> {
        for gate in &self.physical_gates {
            let q = &gate.qubits;
            let pairs: &[(usize, usize)] = match gate.kind.arity() {
                1 => &[],
                2 => &[(q[0], q[1])],
                _ if gate.kind == GateKind::Bridge3 => &[(q[0], q[1]), (q[1], q[2])],
                _ => {
                    return Err(MapperError::UnsupportedGate {
                        index: 0,
                        gate: gate.to_string(),
                    })
                }
            };
            for &(a, b) in pairs {
                if !graph.are_coupled(a, b)? {
                    return Err(MapperError::NotRoutable {
                        gate: gate.to_string(),
                        a,
                        b,
                    });
                }
            }
        }
        Ok(())
    }

    /// Routed circuit in the plaintext format over physical indices,
    /// followed by a `# mapping` comment block.
    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {} 0\n", self.num_physical);
        for gate in &self.physical_gates {
            let _ = writeln!(out, "{gate}");
        }
        out.push_str("# mapping\n");
        for (l, &p) in self.initial_mapping.as_slice().iter().enumerate() {
            let name = if l < self.num_computing {
                format!("q{l}")
            } else {
                format!("aux{}", l - self.num_computing)
            };
            let end = self.final_mapping.physical(l);
            let _ = writeln!(out, "# {name} -> {p} (final {end})");
        }
        out
    }

    pub(crate) fn finish_stats(&mut self, logical_cx: usize) {
        let routed_cx: usize = self
            .physical_gates
            .iter()
            .map(|g| match g.kind {
                GateKind::CX => 1,
                GateKind::Swap | GateKind::Bridge3 => 3,
                GateKind::CCX => 6,
                _ => 0,
            })
            .sum();
        self.stats.swaps = self.swaps.len();
        self.stats.bridge_gates = self.bridges.len();
        self.stats.extra_cx = 3 * (self.stats.swaps + self.stats.bridges);
        self.stats.routed_cx_overhead = routed_cx as isize - logical_cx as isize;
        self.stats.depth = circuit::depth(self.num_physical, &self.physical_gates);
    }
}

/// Logical qubits in chain order: computing and auxiliary qubits alternate
/// while both remain, then the last computing qubits, then spare auxiliaries.
pub fn interleaved_order(num_computing: usize, num_aux: usize) -> Vec<usize> {
    let interleaved_aux = num_aux.min(num_computing.saturating_sub(2));
    let mut order = Vec::with_capacity(num_computing + num_aux);
    for i in 0..interleaved_aux {
        order.push(i);
        order.push(num_computing + i);
    }
    order.extend(interleaved_aux..num_computing);
    order.extend(num_computing + interleaved_aux..num_computing + num_aux);
    order
}

fn mapping_from_order(order: &[usize], chain: &[usize]) -> Mapping {
    let mut physical = vec![0; order.len()];
    for (pos, &logical) in order.iter().enumerate() {
        physical[logical] = chain[pos];
    }
    Mapping::new(physical).expect("chain vertices are distinct")
}

/// The canonical layout for a CNZ with `n_controls` controls: `n+1`
/// computing and `n-1` auxiliary qubits interleaved along `chain`.
/// Logical indices: computing `0..=n`, auxiliaries `n+1..2n`.
pub fn initial_interleaved_mapping(
    n_controls: usize,
    chain: &[usize],
) -> Result<Mapping, MapperError> {
    let expected = 2 * n_controls;
    if n_controls == 0 || chain.len() != expected {
        return Err(MapperError::ChainLength {
            expected,
            got: chain.len(),
        });
    }
    let order = interleaved_order(n_controls + 1, n_controls - 1);
    Ok(mapping_from_order(&order, chain))
}

/// Canonical mapping of a whole circuit register onto `chain`.
pub fn canonical_mapping(num_computing: usize, num_aux: usize, chain: &[usize]) -> Mapping {
    mapping_from_order(&interleaved_order(num_computing, num_aux), chain)
}

/// Compiles a circuit of CNZ blocks and single-qubit gates onto `graph`.
///
/// CNZ gates must span all computing qubits with ascending controls and the
/// last computing qubit as target (CZ is accepted for two computing qubits).
pub fn compile(circuit: &Circuit, graph: &CouplingGraph) -> Result<MappedCircuit, MapperError> {
    let chain = graph.find_chain(circuit.width())?;
    chain::compile_on_chain(circuit, graph.num_physical(), &chain)
}

/// Which router lowers a logical circuit onto the device.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Router {
    /// [`compile`]: fixed interleaved layout, restored after every block.
    #[default]
    Fixed,
    /// [`naive_route`] over the basis-gate expansion.
    Greedy,
}

impl Router {
    pub fn route(
        self,
        circuit: &Circuit,
        graph: &CouplingGraph,
    ) -> Result<MappedCircuit, MapperError> {
        match self {
            Router::Fixed => compile(circuit, graph),
            Router::Greedy => naive_route(&expand_to_basis(circuit)?, graph),
        }
    }
}

impl std::fmt::Display for Router {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Router::Fixed => "fixed",
            Router::Greedy => "greedy",
        })
    }
}

impl std::str::FromStr for Router {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fixed" | "ours" => Ok(Router::Fixed),
            "greedy" => Ok(Router::Greedy),
            _ => Err(format!("unknown router `{s}`")),
        }
    }
}

/// Writes a chain of physical indices as `p0-p1-...`.
pub fn format_chain(chain: &[usize]) -> String {
    chain
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleaving_rule() {
        assert_eq!(interleaved_order(4, 2), vec![0, 4, 1, 5, 2, 3]);
        assert_eq!(interleaved_order(3, 1), vec![0, 3, 1, 2]);
        assert_eq!(interleaved_order(2, 0), vec![0, 1]);
        assert_eq!(interleaved_order(2, 1), vec![0, 1, 2]);
        assert_eq!(interleaved_order(1, 0), vec![0]);
    }

    #[test]
    fn canonical_mapping_for_cccz() {
        let m = initial_interleaved_mapping(3, &[0, 1, 2, 3, 4, 5]).unwrap();
        // q0, q1, q2, q3, aux0, aux1
        assert_eq!(m.as_slice(), &[0, 2, 4, 5, 1, 3]);
        let m = initial_interleaved_mapping(2, &[0, 1, 2, 3]).unwrap();
        assert_eq!(m.as_slice(), &[0, 2, 3, 1]);
        assert_eq!(
            initial_interleaved_mapping(3, &[0, 1, 2, 3, 4]),
            Err(MapperError::ChainLength {
                expected: 6,
                got: 5
            })
        );
    }
}
