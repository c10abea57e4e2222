use super::{Circuit, CircuitError, Gate, GateKind, ToffoliTag};

/// CNOTs in the Clifford+T Toffoli network.
pub const TOFFOLI_CX_COUNT: usize = 6;
/// All gates (6 CX + 9 single-qubit) in the Clifford+T Toffoli network.
pub const TOFFOLI_GATE_COUNT: usize = 15;

fn expect_kind(gate: &Gate, kind: GateKind, name: &'static str) -> Result<(), CircuitError> {
    if gate.kind != kind {
        return Err(CircuitError::WrongKind {
            expected: name,
            got: gate.kind,
        });
    }
    Gate::new(gate.kind, gate.qubits.clone()).map(|_| ())
}

/// Expands a CNZ into a CCX ladder that computes the AND of the controls into
/// `aux`, applies CZ between the last auxiliary and the target, and
/// uncomputes the ladder in reverse.
///
/// Every ladder CCX is tagged with `uncompute` set on the second half; the
/// router relies on that to know when a Toffoli target returns to |0>.
pub fn decompose_cnz(gate: &Gate, aux: &[usize]) -> Result<Vec<Gate>, CircuitError> {
    let n = match gate.kind {
        GateKind::Cnz(n) => n,
        other => {
            return Err(CircuitError::WrongKind {
                expected: "cnz",
                got: other,
            })
        }
    };
    Gate::new(gate.kind, gate.qubits.clone())?;
    let (controls, target) = gate.qubits.split_at(n);
    let target = target[0];
    if n == 1 {
        return Ok(vec![Gate::cz(controls[0], target)]);
    }
    let needed = n - 1;
    if aux.len() < needed {
        return Err(CircuitError::InsufficientAux {
            needed,
            available: aux.len(),
        });
    }
    let aux = &aux[..needed];
    if let Some(&q) = aux.iter().find(|q| gate.qubits.contains(q)) {
        return Err(CircuitError::RepeatedQubit(q));
    }

    let mut ladder = Vec::with_capacity(needed);
    ladder.push([controls[0], controls[1], aux[0]]);
    for j in 1..needed {
        ladder.push([controls[j + 1], aux[j - 1], aux[j]]);
    }

    let ladder_gate = |ops: [usize; 3], uncompute: bool| {
        Gate::ccx(ops[0], ops[1], ops[2]).with_tag(Some(ToffoliTag {
            instance: 0,
            cx: None,
            operands: ops,
            uncompute,
        }))
    };
    let mut out = Vec::with_capacity(2 * needed + 1);
    out.extend(ladder.iter().map(|&ops| ladder_gate(ops, false)));
    out.push(Gate::cz(aux[needed - 1], target));
    out.extend(ladder.iter().rev().map(|&ops| ladder_gate(ops, true)));
    Ok(out)
}

/// Clifford+T Toffoli network with six CNOTs tagged g1..g6.
///
/// g1..g4 alternate between `{b,t}` and `{a,t}`; g5 and g6 act on the control
/// pair `{a,b}`. The target is fully computed (H applied) before g5.
pub fn decompose_ccx(gate: &Gate) -> Result<Vec<Gate>, CircuitError> {
    expect_kind(gate, GateKind::CCX, "ccx")?;
    let (a, b, t) = (gate.qubits[0], gate.qubits[1], gate.qubits[2]);
    let uncompute = gate.tag.is_some_and(|tag| tag.uncompute);
    let instance = gate.tag.map_or(0, |tag| tag.instance);
    let one = |kind: GateKind, q: usize| Gate::raw(kind, &[q]);
    let net = [
        (one(GateKind::H, t), None),
        (Gate::cx(b, t), Some(1)),
        (one(GateKind::Tdg, t), None),
        (Gate::cx(a, t), Some(2)),
        (one(GateKind::T, t), None),
        (Gate::cx(b, t), Some(3)),
        (one(GateKind::Tdg, t), None),
        (Gate::cx(a, t), Some(4)),
        (one(GateKind::T, b), None),
        (one(GateKind::T, t), None),
        (one(GateKind::H, t), None),
        (Gate::cx(a, b), Some(5)),
        (one(GateKind::T, a), None),
        (one(GateKind::Tdg, b), None),
        (Gate::cx(a, b), Some(6)),
    ];
    Ok(net
        .into_iter()
        .map(|(g, cx)| {
            g.with_tag(Some(ToffoliTag {
                instance,
                cx,
                operands: [a, b, t],
                uncompute,
            }))
        })
        .collect())
}

/// SWAP as three alternating CNOTs.
pub fn decompose_swap(gate: &Gate) -> Result<Vec<Gate>, CircuitError> {
    expect_kind(gate, GateKind::Swap, "swap")?;
    let (a, b) = (gate.qubits[0], gate.qubits[1]);
    Ok(vec![Gate::cx(a, b), Gate::cx(b, a), Gate::cx(a, b)]
        .into_iter()
        .map(|g| g.with_tag(gate.tag))
        .collect())
}

/// Three-CNOT bridge. Acts as CX(control, target) only while the middle
/// qubit is |0>; the middle is returned to |0>.
pub fn decompose_bridge3(gate: &Gate) -> Result<Vec<Gate>, CircuitError> {
    expect_kind(gate, GateKind::Bridge3, "bridge")?;
    let (c, m, t) = (gate.qubits[0], gate.qubits[1], gate.qubits[2]);
    Ok(vec![Gate::cx(c, m), Gate::cx(m, t), Gate::cx(c, m)]
        .into_iter()
        .map(|g| g.with_tag(gate.tag))
        .collect())
}

/// Lowers CNZ, CCX and BRIDGE3 gates until only basis gates remain.
///
/// Toffoli instances are numbered in order of appearance, continuing after
/// any instance numbers already present. Block ranges are carried over.
pub fn expand_to_basis(circuit: &Circuit) -> Result<Circuit, CircuitError> {
    let aux: Vec<usize> = circuit.aux_qubits().collect();
    let mut next_instance = circuit
        .gates()
        .iter()
        .filter(|g| g.kind.is_basis())
        .filter_map(|g| g.tag.map(|t| t.instance + 1))
        .max()
        .unwrap_or(0);
    let mut out = Circuit::new(circuit.num_computing(), circuit.num_aux());
    // new_start[i] is the output index where input gate i begins.
    let mut new_start = Vec::with_capacity(circuit.len() + 1);

    let mut lower_ccx = |g: &Gate, out: &mut Circuit| -> Result<(), CircuitError> {
        let mut tagged = g.clone();
        let tag = g.tag.unwrap_or(ToffoliTag {
            instance: 0,
            cx: None,
            operands: [g.qubits[0], g.qubits[1], g.qubits[2]],
            uncompute: false,
        });
        tagged.tag = Some(ToffoliTag {
            instance: next_instance,
            ..tag
        });
        next_instance += 1;
        out.extend(decompose_ccx(&tagged)?)
    };

    for gate in circuit.gates() {
        new_start.push(out.len());
        match gate.kind {
            GateKind::Cnz(_) => {
                for g in decompose_cnz(gate, &aux)? {
                    if g.kind == GateKind::CCX {
                        lower_ccx(&g, &mut out)?;
                    } else {
                        out.push(g)?;
                    }
                }
            }
            GateKind::CCX => lower_ccx(gate, &mut out)?,
            GateKind::Bridge3 => out.extend(decompose_bridge3(gate)?)?,
            _ => out.push(gate.clone())?,
        }
    }
    new_start.push(out.len());
    let blocks = circuit
        .blocks()
        .iter()
        .map(|b| new_start[b.start]..new_start[b.end])
        .collect();
    out.set_blocks(blocks)?;
    Ok(out)
}
