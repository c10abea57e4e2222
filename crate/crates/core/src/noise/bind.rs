use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::circuit::{decompose_bridge3, decompose_swap, Gate, GateKind};
use crate::mapper::MappedCircuit;

use super::{NoiseModel, ReadoutError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelKind {
    /// X with probability `p` on a single qubit.
    BitFlip,
    /// Z with probability `p` on a single qubit.
    PhaseFlip,
    /// With probability `p`, one of the `4^k - 1` non-identity Paulis on the
    /// `k` listed qubits, chosen uniformly.
    Depolarizing,
}

/// A stochastic Pauli channel applied right after gate `after`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub after: usize,
    pub kind: ChannelKind,
    /// Local qubit indices.
    pub qubits: Vec<usize>,
    pub p: f64,
}

/// A noise model attached to one routed circuit.
///
/// The physical qubits the circuit touches are renumbered `0..num_qubits`
/// in ascending physical order (`physical[local]` gives the original index).
/// SWAP and BRIDGE3 gates are lowered to CX so that each of their CNOTs
/// carries its own errors; a routed Toffoli network is one noise unit whose
/// errors are attached after its last gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundNoise {
    pub num_qubits: usize,
    pub physical: Vec<usize>,
    pub gates: Vec<Gate>,
    /// Sorted by `after`.
    pub channels: Vec<Channel>,
    /// Local position of each logical qubit at the start.
    pub input: Vec<usize>,
    /// Local positions of the computing qubits at the end, in logical order.
    pub measured: Vec<usize>,
    /// Readout error of each measured qubit.
    pub readout: Vec<ReadoutError>,
}

impl BoundNoise {
    pub fn is_noiseless(&self) -> bool {
        self.channels.is_empty() && self.readout.iter().all(ReadoutError::is_zero)
    }
}

struct Binder<'a> {
    noise: &'a NoiseModel,
    local: &'a BTreeMap<usize, usize>,
    physical: &'a [usize],
    gates: Vec<Gate>,
    channels: Vec<Channel>,
}

impl Binder<'_> {
    fn push_gate(&mut self, gate: Gate) {
        let local = gate.relabel(|q| self.local[&q]);
        self.gates.push(local);
    }

    fn channel(&mut self, kind: ChannelKind, qubits: Vec<usize>, p: f64) {
        if p > 0.0 {
            self.channels.push(Channel {
                after: self.gates.len() - 1,
                kind,
                qubits,
                p,
            });
        }
    }

    /// Flip, phase and depolarizing errors after the last pushed gate, on the
    /// given local qubits.
    fn errors(&mut self, qubits: &[usize], flip: bool, phase: bool) {
        for &q in qubits {
            let phys = self.physical[q];
            if flip {
                self.channel(ChannelKind::BitFlip, vec![q], self.noise.flip_at(phys));
            }
            if phase {
                self.channel(ChannelKind::PhaseFlip, vec![q], self.noise.phase_at(phys));
            }
        }
        self.channel(
            ChannelKind::Depolarizing,
            qubits.to_vec(),
            self.noise.depol_p,
        );
    }

    fn push_cx_network(&mut self, network: Vec<Gate>) {
        for cx in network {
            self.push_gate(cx);
            let qubits = self.gates.last().expect("just pushed").qubits.clone();
            self.errors(&qubits, true, false);
        }
    }
}

/// Attaches `noise` to the physical gates of `mapped`.
///
/// Untagged gates receive flip errors after X/CX/CCX, phase errors after
/// Z/CZ and depolarizing errors after every gate. Multipliers of a physical
/// qubit scale the flip and phase rates on that qubit.
pub fn bind(noise: &NoiseModel, mapped: &MappedCircuit) -> BoundNoise {
    let mut used: BTreeSet<usize> = mapped.initial_mapping.as_slice().iter().copied().collect();
    for gate in &mapped.physical_gates {
        used.extend(gate.qubits.iter().copied());
    }
    let physical: Vec<usize> = used.into_iter().collect();
    let local: BTreeMap<usize, usize> = physical.iter().enumerate().map(|(i, &p)| (p, i)).collect();

    // Last physical gate of every Toffoli network.
    let mut last_of: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, gate) in mapped.physical_gates.iter().enumerate() {
        if let Some(tag) = gate.tag {
            last_of.insert(tag.instance, i);
        }
    }
    let swap_at: BTreeSet<usize> = mapped.swaps.iter().map(|s| s.gate_index).collect();
    // Current physical position of every logical qubit.
    let mut current = mapped.initial_mapping.clone();

    let mut binder = Binder {
        noise,
        local: &local,
        physical: &physical,
        gates: Vec::with_capacity(mapped.physical_gates.len()),
        channels: Vec::new(),
    };

    for (i, gate) in mapped.physical_gates.iter().enumerate() {
        match gate.kind {
            GateKind::Swap => {
                binder.push_cx_network(decompose_swap(gate).expect("swap has two qubits"))
            }
            GateKind::Bridge3 => {
                binder.push_cx_network(decompose_bridge3(gate).expect("bridge has three qubits"))
            }
            _ if gate.tag.is_some() => binder.push_gate(gate.clone()),
            kind => {
                binder.push_gate(gate.clone());
                let qubits = binder.gates.last().expect("just pushed").qubits.clone();
                let flip = matches!(kind, GateKind::X | GateKind::CX | GateKind::CCX);
                let phase = matches!(kind, GateKind::Z | GateKind::CZ);
                binder.errors(&qubits, flip, phase);
            }
        }
        if let Some(tag) = gate.tag {
            if last_of[&tag.instance] == i {
                let qubits: Vec<usize> = tag
                    .operands
                    .iter()
                    .map(|&l| local[&current.physical(l)])
                    .collect();
                binder.errors(&qubits, true, false);
            }
        }
        if swap_at.contains(&i) {
            current.swap_physical(gate.qubits[0], gate.qubits[1]);
        }
    }

    let Binder {
        gates, channels, ..
    } = binder;
    let final_map = mapped.final_mapping.as_slice();
    BoundNoise {
        num_qubits: physical.len(),
        gates,
        channels,
        input: mapped
            .initial_mapping
            .as_slice()
            .iter()
            .map(|p| local[p])
            .collect(),
        measured: (0..mapped.num_computing)
            .map(|l| local[&final_map[l]])
            .collect(),
        readout: (0..mapped.num_computing)
            .map(|l| noise.readout_at(final_map[l]))
            .collect(),
        physical,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::mapper::{compile, naive_route};
    use crate::topology::CouplingGraph;

    #[test]
    fn noiseless_binds_no_channels() {
        let c = Circuit::from_gates(4, 2, vec![Gate::cnz(&[0, 1, 2], 3)]).unwrap();
        let m = compile(&c, &CouplingGraph::linear_chain(6)).unwrap();
        let b = bind(&NoiseModel::noiseless(), &m);
        assert!(b.channels.is_empty());
        assert!(b.is_noiseless());
        assert_eq!(b.num_qubits, 6);
    }

    #[test]
    fn single_x_gets_one_flip_channel() {
        let c = Circuit::from_gates(4, 0, vec![Gate::x(3)]).unwrap();
        let m = MappedCircuit::unrouted(&c).unwrap();
        let b = bind(
            &NoiseModel {
                flip_p: 0.01,
                ..NoiseModel::default()
            },
            &m,
        );
        assert_eq!(
            b.channels,
            vec![Channel {
                after: 0,
                kind: ChannelKind::BitFlip,
                qubits: vec![3],
                p: 0.01
            }]
        );
    }

    #[test]
    fn phase_only_on_z_family() {
        let c = Circuit::from_gates(2, 0, vec![Gate::x(0), Gate::h(1), Gate::cz(0, 1)]).unwrap();
        let m = MappedCircuit::unrouted(&c).unwrap();
        let b = bind(
            &NoiseModel {
                phase_p: 0.2,
                ..NoiseModel::default()
            },
            &m,
        );
        let kinds: Vec<_> = b.channels.iter().map(|c| (c.after, c.kind)).collect();
        assert_eq!(
            kinds,
            vec![(2, ChannelKind::PhaseFlip), (2, ChannelKind::PhaseFlip)]
        );
    }

    #[test]
    fn toffoli_network_is_one_unit() {
        let c = Circuit::from_gates(3, 0, vec![Gate::ccx(0, 1, 2)]).unwrap();
        let m = MappedCircuit::unrouted(&c).unwrap();
        let b = bind(
            &NoiseModel {
                flip_p: 0.1,
                depol_p: 0.1,
                ..NoiseModel::default()
            },
            &m,
        );
        assert_eq!(b.gates.len(), 15);
        assert!(b.channels.iter().all(|c| c.after == 14));
        assert_eq!(b.channels.len(), 4);
        assert_eq!(b.channels[3].qubits, vec![0, 1, 2]);
    }

    #[test]
    fn routing_cx_are_charged() {
        let c = Circuit::from_gates(4, 2, vec![Gate::cnz(&[0, 1, 2], 3)]).unwrap();
        let m = compile(&c, &CouplingGraph::linear_chain(6)).unwrap();
        let b = bind(
            &NoiseModel {
                flip_p: 0.01,
                ..NoiseModel::default()
            },
            &m,
        );
        // 4 SWAP + 4 BRIDGE3 gates, 3 CX each with 2 flips; 4 Toffolis with 3 flips.
        let flips = b.channels.len();
        assert_eq!(flips, (4 + 4) * 3 * 2 + 4 * 3);
        assert!(b
            .gates
            .iter()
            .all(|g| !matches!(g.kind, GateKind::Swap | GateKind::Bridge3)));
    }

    #[test]
    fn multipliers_and_readout_follow_physical_qubits() {
        let c = Circuit::from_gates(2, 0, vec![Gate::cz(0, 1)]).unwrap();
        let g = CouplingGraph::new(3, [(2, 1), (1, 0)]).unwrap();
        let m = compile(&c, &g).unwrap();
        let mut noise = NoiseModel {
            phase_p: 0.1,
            ..NoiseModel::default()
        };
        noise.qubit_multipliers.insert(1, 2.0);
        noise.readout.insert(1, ReadoutError { p01: 0.3, p10: 0.0 });
        let b = bind(&noise, &m);
        assert_eq!(b.physical, vec![0, 1]);
        assert_eq!(b.channels[1].p, 0.2);
        assert_eq!(b.readout[1].p01, 0.3);
    }

    #[test]
    fn identical_mapped_circuits_bind_identically() {
        let c = Circuit::from_gates(4, 2, vec![Gate::x(0), Gate::cnz(&[0, 1, 2], 3)]).unwrap();
        let g = CouplingGraph::linear_chain(6);
        let noise = NoiseModel::flip_phase(0.05);
        assert_eq!(
            bind(&noise, &compile(&c, &g).unwrap()),
            bind(&noise, &compile(&c, &g).unwrap())
        );
    }

    #[test]
    fn greedy_measurement_follows_final_mapping() {
        let c = Circuit::from_gates(3, 0, vec![Gate::cx(0, 2)]).unwrap();
        let m = naive_route(&c, &CouplingGraph::linear_chain(3)).unwrap();
        let b = bind(&NoiseModel::noiseless(), &m);
        assert_eq!(b.measured, vec![1, 0, 2]);
    }
}
