use crate::circuit::{Circuit, GateKind};
use crate::topology::{CouplingGraph, Mapping};

use super::{MappedCircuit, MapperError, RouteStats, SwapEvent};

/// Greedy baseline router over an expanded circuit.
///
/// Logical qubit `i` starts on the `i`-th vertex of the first chain found in
/// `graph`. Each two-qubit gate on uncoupled qubits moves its first operand
/// along the shortest path towards the second until they touch. Nothing is
/// restored afterwards; the final permutation is in `final_mapping`.
pub fn naive_route(circuit: &Circuit, graph: &CouplingGraph) -> Result<MappedCircuit, MapperError> {
    let width = circuit.width();
    let chain = graph.find_chain(width)?;
    let initial = Mapping::new(chain.clone())?;
    // occupant[p] is the logical qubit on physical p (spare qubits get
    // placeholder labels >= width so SWAPs can move them too).
    let mut occupant: Vec<usize> = (0..graph.num_physical()).map(|p| width + p).collect();
    for (l, &p) in chain.iter().enumerate() {
        occupant[p] = l;
    }
    let mut phys = chain;

    let mut gates = Vec::with_capacity(circuit.len());
    let mut swaps = Vec::new();
    let mut boundaries = Vec::with_capacity(circuit.len());
    let mut logical_cx = 0;

    for (index, gate) in circuit.gates().iter().enumerate() {
        match gate.kind.arity() {
            1 => {}
            2 => {
                if gate.kind == GateKind::CX {
                    logical_cx += 1;
                }
                let (c, t) = (gate.qubits[0], gate.qubits[1]);
                if !graph.coupled(phys[c], phys[t]) {
                    let path = graph.shortest_path(phys[c], phys[t])?;
                    for w in path.windows(2).take(path.len() - 2) {
                        let (pa, pb) = (w[0], w[1]);
                        swaps.push(SwapEvent {
                            gate_index: gates.len(),
                            a: pa,
                            b: pb,
                        });
                        gates.push(crate::circuit::Gate::swap(pa, pb));
                        occupant.swap(pa, pb);
                        for p in [pa, pb] {
                            if occupant[p] < width {
                                phys[occupant[p]] = p;
                            }
                        }
                    }
                }
            }
            _ => {
                return Err(MapperError::UnsupportedGate {
                    index,
                    gate: gate.to_string(),
                })
            }
        }
        gates.push(gate.relabel(|q| phys[q]));
        boundaries.push(Mapping::new(phys.clone())?);
    }

    let mut mapped = MappedCircuit {
        num_computing: circuit.num_computing(),
        num_aux: circuit.num_aux(),
        num_physical: graph.num_physical(),
        physical_gates: gates,
        initial_mapping: initial,
        final_mapping: Mapping::new(phys)?,
        gate_boundaries: boundaries,
        blocks: circuit.blocks().to_vec(),
        swaps,
        bridges: Vec::new(),
        stats: RouteStats::default(),
    };
    mapped.finish_stats(logical_cx);
    Ok(mapped)
}
