use crate::circuit::{decompose_ccx, decompose_cnz, expand_to_basis, Circuit, Gate, GateKind};
use crate::topology::Mapping;

use super::{
    canonical_mapping, interleaved_order, BridgeRecord, MappedCircuit, MapperError, RouteStats,
    SwapEvent,
};

/// Router state over a chain: logical qubits sit at chain positions and the
/// physical index of position `i` is `chain[i]`.
struct ChainRouter<'a> {
    chain: &'a [usize],
    pos: Vec<usize>,
    at: Vec<usize>,
    gates: Vec<Gate>,
    swaps: Vec<SwapEvent>,
    bridges: Vec<BridgeRecord>,
    bridge_ops: usize,
    next_instance: u32,
}

impl<'a> ChainRouter<'a> {
    fn new(order: &[usize], chain: &'a [usize]) -> Self {
        let mut pos = vec![0; order.len()];
        for (p, &l) in order.iter().enumerate() {
            pos[l] = p;
        }
        Self {
            chain,
            pos,
            at: order.to_vec(),
            gates: Vec::new(),
            swaps: Vec::new(),
            bridges: Vec::new(),
            bridge_ops: 0,
            next_instance: 0,
        }
    }

    fn mapping(&self) -> Mapping {
        Mapping::new(self.pos.iter().map(|&p| self.chain[p]).collect())
            .expect("positions are distinct")
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        self.pos[a].abs_diff(self.pos[b]) == 1
    }

    fn phys(&self, logical: usize) -> usize {
        self.chain[self.pos[logical]]
    }

    fn emit(&mut self, gate: &Gate) -> Result<(), MapperError> {
        if gate.qubits.len() == 2 && !self.adjacent(gate.qubits[0], gate.qubits[1]) {
            return Err(MapperError::NotRoutable {
                gate: gate.to_string(),
                a: self.phys(gate.qubits[0]),
                b: self.phys(gate.qubits[1]),
            });
        }
        let physical = gate.relabel(|q| self.phys(q));
        self.gates.push(physical);
        Ok(())
    }

    fn swap(&mut self, a: usize, b: usize) {
        debug_assert!(self.adjacent(a, b));
        let (pa, pb) = (self.pos[a], self.pos[b]);
        let (xa, xb) = (self.chain[pa], self.chain[pb]);
        self.swaps.push(SwapEvent {
            gate_index: self.gates.len(),
            a: xa,
            b: xb,
        });
        self.gates.push(Gate::swap(xa, xb));
        self.pos.swap(a, b);
        self.at.swap(pa, pb);
    }

    fn bridge(&mut self, gate: &Gate, middle: usize) {
        let (c, t) = (gate.qubits[0], gate.qubits[1]);
        let record = BridgeRecord {
            gate_index: self.gates.len(),
            control: self.phys(c),
            middle: self.phys(middle),
            target: self.phys(t),
            middle_logical: middle,
        };
        self.bridges.push(record);
        self.gates
            .push(Gate::bridge3(record.control, record.middle, record.target).with_tag(gate.tag));
    }

    /// Routes one ladder Toffoli given as its tagged Clifford+T network.
    fn route_toffoli(&mut self, ccx: &Gate) -> Result<(), MapperError> {
        let mut tagged = ccx.clone();
        let mut tag = ccx.tag.expect("ladder CCX gates carry a tag");
        tag.instance = self.next_instance;
        self.next_instance += 1;
        tagged.tag = Some(tag);
        let uncompute = tag.uncompute;
        let [a, b, t] = tag.operands;
        let stuck = || MapperError::NotRoutable {
            gate: ccx.to_string(),
            a: 0,
            b: 0,
        };

        // Before g1: bring the target between the two controls.
        if !(self.adjacent(t, a) && self.adjacent(t, b)) {
            let inner = [a, b]
                .into_iter()
                .find(|&c| {
                    let other = if c == a { b } else { a };
                    self.adjacent(c, t) && self.adjacent(c, other)
                })
                .ok_or_else(stuck)?;
            self.swap(inner, t);
        }

        let mut bridging = false;
        for gate in decompose_ccx(&tagged)? {
            let step = gate.tag.and_then(|t| t.cx);
            if matches!(step, Some(5) | Some(6)) && !self.adjacent(a, b) {
                if !(self.adjacent(t, a) && self.adjacent(t, b)) {
                    return Err(stuck());
                }
                if uncompute {
                    // The target is back to |0> once H has been applied.
                    if step == Some(5) {
                        self.bridge_ops += 1;
                        bridging = true;
                    }
                    debug_assert!(bridging);
                    self.bridge(&gate, t);
                    continue;
                }
                // Forward phase: move the higher control next to the other one.
                let higher = if self.pos[a] > self.pos[b] { a } else { b };
                self.swap(higher, t);
            }
            self.emit(&gate)?;
        }
        Ok(())
    }

    /// Routes the CCX ladder plus apex CZ produced by `decompose_cnz`.
    fn route_block(&mut self, block: &[Gate]) -> Result<(), MapperError> {
        for gate in block {
            match gate.kind {
                GateKind::CCX if gate.tag.is_some() => self.route_toffoli(gate)?,
                GateKind::CZ => self.emit(gate)?,
                _ => {
                    return Err(MapperError::UnsupportedGate {
                        index: 0,
                        gate: gate.to_string(),
                    })
                }
            }
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    router: ChainRouter<'_>,
    num_computing: usize,
    num_aux: usize,
    num_physical: usize,
    initial: Mapping,
    gate_boundaries: Vec<Mapping>,
    blocks: Vec<std::ops::Range<usize>>,
    logical_cx: usize,
) -> MappedCircuit {
    let final_mapping = router.mapping();
    let mut mapped = MappedCircuit {
        num_computing,
        num_aux,
        num_physical,
        physical_gates: router.gates,
        initial_mapping: initial,
        final_mapping,
        gate_boundaries,
        blocks,
        swaps: router.swaps,
        bridges: router.bridges,
        stats: RouteStats {
            bridges: router.bridge_ops,
            ..RouteStats::default()
        },
    };
    mapped.finish_stats(logical_cx);
    mapped
}

fn cx_count(gates: &[Gate]) -> usize {
    gates.iter().filter(|g| g.kind == GateKind::CX).count()
}

/// Routes one CNZ block (the output of `decompose_cnz`) from the canonical
/// interleaved mapping on `chain`.
pub fn route_cnz_block(
    block: &[Gate],
    mapping: &Mapping,
    chain: &[usize],
) -> Result<MappedCircuit, MapperError> {
    let toffolis = block.iter().filter(|g| g.kind == GateKind::CCX).count();
    let n_controls = toffolis / 2 + 1;
    let num_computing = n_controls + 1;
    if chain.len() != mapping.len() || mapping.len() < num_computing + n_controls - 1 {
        return Err(MapperError::ChainLength {
            expected: 2 * n_controls,
            got: chain.len(),
        });
    }
    let num_aux = mapping.len() - num_computing;
    if *mapping != canonical_mapping(num_computing, num_aux, chain) {
        return Err(MapperError::MappingNotCanonical);
    }
    let order = interleaved_order(num_computing, num_aux);
    let mut router = ChainRouter::new(&order, chain);
    router.route_block(block)?;
    let boundary = vec![router.mapping()];
    let logical = Circuit::from_gates(num_computing, num_aux, block.to_vec())?;
    let logical_cx = cx_count(expand_to_basis(&logical)?.gates());
    // one block spanning the whole routed circuit
    #[allow(clippy::single_range_in_vec_init)]
    let blocks = vec![0..block.len()];
    Ok(finish(
        router,
        num_computing,
        num_aux,
        chain.iter().max().map_or(0, |m| m + 1),
        mapping.clone(),
        boundary,
        blocks,
        logical_cx,
    ))
}

fn is_canonical_cnz(gate: &Gate, num_computing: usize) -> bool {
    let spans_register = gate.qubits.iter().copied().eq(0..num_computing);
    match gate.kind {
        GateKind::Cnz(n) => n + 1 == num_computing && spans_register,
        GateKind::CZ => num_computing == 2 && spans_register,
        _ => false,
    }
}

pub(super) fn compile_on_chain(
    circuit: &Circuit,
    num_physical: usize,
    chain: &[usize],
) -> Result<MappedCircuit, MapperError> {
    let (nc, na) = (circuit.num_computing(), circuit.num_aux());
    let order = interleaved_order(nc, na);
    let initial = canonical_mapping(nc, na, chain);
    let aux: Vec<usize> = circuit.aux_qubits().collect();
    let mut router = ChainRouter::new(&order, chain);
    let mut boundaries = Vec::with_capacity(circuit.len());
    let mut current = initial.clone();

    for (index, gate) in circuit.gates().iter().enumerate() {
        if gate.kind.is_single_qubit() {
            router.emit(gate)?;
        } else if is_canonical_cnz(gate, nc) {
            let block = match gate.kind {
                GateKind::CZ => vec![gate.clone()],
                _ => decompose_cnz(gate, &aux)?,
            };
            router.route_block(&block)?;
            current = router.mapping();
            if current != initial {
                return Err(MapperError::RestorationViolated(index));
            }
        } else {
            return Err(MapperError::UnsupportedGate {
                index,
                gate: gate.to_string(),
            });
        }
        boundaries.push(current.clone());
    }

    let logical_cx = cx_count(expand_to_basis(circuit)?.gates());
    Ok(finish(
        router,
        nc,
        na,
        num_physical,
        initial,
        boundaries,
        circuit.blocks().to_vec(),
        logical_cx,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapper::{compile, initial_interleaved_mapping};
    use crate::topology::CouplingGraph;

    fn block(n: usize) -> Vec<Gate> {
        let controls: Vec<usize> = (0..n).collect();
        let aux: Vec<usize> = (n + 1..2 * n).collect();
        decompose_cnz(&Gate::cnz(&controls, n), &aux).unwrap()
    }

    #[test]
    fn cccz_walkthrough_counts() {
        let chain: Vec<usize> = (0..6).collect();
        let m = initial_interleaved_mapping(3, &chain).unwrap();
        let routed = route_cnz_block(&block(3), &m, &chain).unwrap();
        assert_eq!(routed.stats.swaps, 4);
        assert_eq!(routed.stats.bridges, 2);
        assert_eq!(routed.stats.bridge_gates, 4);
        assert_eq!(routed.stats.extra_cx, 18);
        assert_eq!(routed.final_mapping, routed.initial_mapping);
        // t1 swaps Q1 with AUX0 (P2, P1); t2 swaps Q2 with AUX1 (P4, P3)
        let swaps: Vec<(usize, usize)> = routed.swaps.iter().map(|s| (s.a, s.b)).collect();
        assert_eq!(swaps, vec![(2, 1), (4, 3), (3, 4), (1, 2)]);
        // t4 bridges Q2 and AUX0 through AUX1
        let b = routed.bridges[0];
        assert_eq!((b.control, b.middle, b.target), (4, 3, 2));
        assert_eq!(b.middle_logical, 5);
    }

    #[test]
    fn ccz_block_restores() {
        let chain = [0, 1, 2, 3];
        let m = initial_interleaved_mapping(2, &chain).unwrap();
        let routed = route_cnz_block(&block(2), &m, &chain).unwrap();
        assert_eq!(routed.final_mapping, m);
        assert_eq!(routed.stats.swaps, 2);
        assert_eq!(routed.stats.bridges, 1);
    }

    #[test]
    fn bare_cz_needs_nothing() {
        let chain = [0, 1];
        let m = initial_interleaved_mapping(1, &chain).unwrap();
        let routed = route_cnz_block(&[Gate::cz(0, 1)], &m, &chain).unwrap();
        assert_eq!(
            routed.stats,
            RouteStats {
                depth: 1,
                ..Default::default()
            }
        );
        assert_eq!(routed.physical_gates, vec![Gate::cz(0, 1)]);
    }

    #[test]
    fn rejects_non_canonical_mapping() {
        let chain: Vec<usize> = (0..6).collect();
        let m = Mapping::identity(6);
        assert_eq!(
            route_cnz_block(&block(3), &m, &chain).unwrap_err(),
            MapperError::MappingNotCanonical
        );
    }

    #[test]
    fn compile_rejects_partial_cnz() {
        let c = Circuit::from_gates(4, 2, vec![Gate::cnz(&[0, 1], 2)]).unwrap();
        assert!(matches!(
            compile(&c, &CouplingGraph::linear_chain(6)),
            Err(MapperError::UnsupportedGate { index: 0, .. })
        ));
    }

    #[test]
    fn compile_empty_circuit() {
        let c = Circuit::new(4, 2);
        let m = compile(&c, &CouplingGraph::linear_chain(6)).unwrap();
        assert!(m.physical_gates.is_empty());
        assert_eq!(m.initial_mapping.as_slice(), &[0, 2, 4, 5, 1, 3]);
        assert_eq!(m.final_mapping, m.initial_mapping);
    }
}
