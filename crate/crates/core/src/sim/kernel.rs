//! In-place gate kernels on a flat amplitude buffer of `n` qubits.
//!
//! Qubit `q` is bit `n - 1 - q` of the index. The density-matrix backend
//! reuses these kernels on the vectorised matrix, applying the conjugated
//! gate to the column qubits.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::circuit::{Gate, GateKind};

pub(crate) type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
fn mask(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

pub(crate) fn single_qubit_matrix(kind: GateKind) -> Option<Matrix2> {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let t = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    Some(match kind {
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Y => [[ZERO, -I], [I, ZERO]],
        GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateKind::H => [[h, h], [h, -h]],
        GateKind::S => [[ONE, ZERO], [ZERO, I]],
        GateKind::T => [[ONE, ZERO], [ZERO, t]],
        GateKind::Tdg => [[ONE, ZERO], [ZERO, t.conj()]],
        _ => return None,
    })
}

pub(crate) fn apply_matrix(amps: &mut [Complex64], n: usize, q: usize, m: &Matrix2) {
    let bit = mask(n, q);
    for i0 in 0..amps.len() {
        if i0 & bit != 0 {
            continue;
        }
        let i1 = i0 | bit;
        let (a0, a1) = (amps[i0], amps[i1]);
        amps[i0] = m[0][0] * a0 + m[0][1] * a1;
        amps[i1] = m[1][0] * a0 + m[1][1] * a1;
    }
}

pub(crate) fn apply_x(amps: &mut [Complex64], n: usize, q: usize) {
    let bit = mask(n, q);
    for i in 0..amps.len() {
        if i & bit == 0 {
            amps.swap(i, i | bit);
        }
    }
}

pub(crate) fn apply_z(amps: &mut [Complex64], n: usize, q: usize) {
    let bit = mask(n, q);
    for (i, a) in amps.iter_mut().enumerate() {
        if i & bit != 0 {
            *a = -*a;
        }
    }
}

/// Multi-controlled X; `controls` may be empty.
pub(crate) fn apply_mcx(amps: &mut [Complex64], n: usize, controls: &[usize], target: usize) {
    let cmask: usize = controls.iter().map(|&c| mask(n, c)).sum();
    let tbit = mask(n, target);
    for i in 0..amps.len() {
        if i & cmask == cmask && i & tbit == 0 {
            amps.swap(i, i | tbit);
        }
    }
}

/// Negates every amplitude whose index has all `qubits` set.
pub(crate) fn apply_mcz(amps: &mut [Complex64], n: usize, qubits: &[usize]) {
    let m: usize = qubits.iter().map(|&q| mask(n, q)).sum();
    for (i, a) in amps.iter_mut().enumerate() {
        if i & m == m {
            *a = -*a;
        }
    }
}

pub(crate) fn apply_swap(amps: &mut [Complex64], n: usize, a: usize, b: usize) {
    let (ba, bb) = (mask(n, a), mask(n, b));
    for i in 0..amps.len() {
        if i & ba != 0 && i & bb == 0 {
            amps.swap(i, (i & !ba) | bb);
        }
    }
}

/// Applies `gate` with qubit indices shifted by `offset`. With `conjugate`
/// the complex conjugate of the gate's matrix is applied instead.
pub(crate) fn apply_gate(
    amps: &mut [Complex64],
    n: usize,
    gate: &Gate,
    offset: usize,
    conjugate: bool,
) {
    let q = |i: usize| gate.qubits[i] + offset;
    match gate.kind {
        GateKind::X => apply_x(amps, n, q(0)),
        GateKind::Z => apply_z(amps, n, q(0)),
        GateKind::Y | GateKind::H | GateKind::S | GateKind::T | GateKind::Tdg => {
            let mut m = single_qubit_matrix(gate.kind).expect("single-qubit kind");
            if conjugate {
                for row in &mut m {
                    for v in row.iter_mut() {
                        *v = v.conj();
                    }
                }
            }
            apply_matrix(amps, n, q(0), &m);
        }
        GateKind::CX => apply_mcx(amps, n, &[q(0)], q(1)),
        GateKind::CZ => apply_mcz(amps, n, &[q(0), q(1)]),
        GateKind::Swap => apply_swap(amps, n, q(0), q(1)),
        GateKind::CCX => apply_mcx(amps, n, &[q(0), q(1)], q(2)),
        GateKind::Bridge3 => {
            let (c, m, t) = (q(0), q(1), q(2));
            apply_mcx(amps, n, &[c], m);
            apply_mcx(amps, n, &[m], t);
            apply_mcx(amps, n, &[c], m);
        }
        GateKind::Cnz(_) => {
            let qs: Vec<usize> = gate.qubits.iter().map(|&x| x + offset).collect();
            apply_mcz(amps, n, &qs);
        }
    }
}

/// Pauli index: 0 = I, 1 = X, 2 = Y, 3 = Z.
pub(crate) fn apply_pauli(amps: &mut [Complex64], n: usize, q: usize, pauli: u8, conjugate: bool) {
    match pauli {
        0 => {}
        1 => apply_x(amps, n, q),
        2 => {
            // Y = i X Z
            apply_z(amps, n, q);
            apply_x(amps, n, q);
            let phase = if conjugate { -I } else { I };
            for a in amps.iter_mut() {
                *a *= phase;
            }
        }
        3 => apply_z(amps, n, q),
        _ => unreachable!("pauli index {pauli}"),
    }
}
