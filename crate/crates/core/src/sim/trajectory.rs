use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::noise::{apply_readout, BoundNoise, ChannelKind};

use super::density::{embed, pauli_string};
use super::{check_width, kernel, marginal, Distribution, ShotCounts, SimError, STATE_WIDTH_CAP};

// Error patterns seen more often than this are not worth caching beyond.
const CACHE_LIMIT: usize = 4096;

/// The random stream of one shot: ChaCha8 keyed by `seed`, stream `shot`.
/// Shots are independent of each other and of how they are scheduled.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

/// (channel index, Pauli code) of every error that fired in a shot.
type Pattern = Vec<(u32, u8)>;

fn evolve(bound: &BoundNoise, init: &[Complex64], pattern: &Pattern) -> Vec<f64> {
    let n = bound.num_qubits;
    let mut amps = init.to_vec();
    let mut errors = pattern.iter().peekable();
    for (i, gate) in bound.gates.iter().enumerate() {
        kernel::apply_gate(&mut amps, n, gate, 0, false);
        while let Some(&&(ci, code)) = errors.peek() {
            let ch = &bound.channels[ci as usize];
            if ch.after != i {
                break;
            }
            errors.next();
            let paulis = pauli_string(code as usize, ch.qubits.len());
            for (&q, &p) in ch.qubits.iter().zip(&paulis) {
                kernel::apply_pauli(&mut amps, n, q, p, false);
            }
        }
    }
    marginal(n, amps.iter().map(|a| a.norm_sqr()), &bound.measured)
}

/// Outcome distribution of the bound circuit with every channel and readout
/// error switched off.
pub fn run_noiseless(
    bound: &BoundNoise,
    init: &super::StateVector,
) -> Result<Distribution, SimError> {
    check_width(bound.num_qubits, STATE_WIDTH_CAP)?;
    let start = embed(bound, init)?.into_amplitudes();
    Ok(Distribution::new(
        bound.measured.len(),
        evolve(bound, &start, &Vec::new()),
    ))
}

fn sample(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (o, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = o;
            if u < acc {
                return o;
            }
        }
    }
    last
}

/// Monte-Carlo trajectories: per shot, sample which channels fire, evolve
/// the state vector with those Paulis inserted, sample the computing qubits
/// and apply readout flips. Draw order within a shot is: one uniform per
/// channel (plus one Pauli choice for each firing depolarizing channel), one
/// for the measurement, one per measured bit for readout.
pub fn run_trajectories(
    bound: &BoundNoise,
    init: &super::StateVector,
    shots: u64,
    seed: u64,
) -> Result<ShotCounts, SimError> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    check_width(bound.num_qubits, STATE_WIDTH_CAP)?;
    let start = embed(bound, init)?.into_amplitudes();
    let ideal = evolve(bound, &start, &Vec::new());
    let outcomes = 1usize << bound.measured.len();

    let counts = (0..shots)
        .into_par_iter()
        .fold(
            || (HashMap::<Pattern, Vec<f64>>::new(), vec![0u64; outcomes]),
            |(mut cache, mut counts), shot| {
                let mut rng = shot_rng(seed, shot);
                let mut pattern = Pattern::new();
                for (ci, ch) in bound.channels.iter().enumerate() {
                    if rng.gen::<f64>() < ch.p {
                        let code = match ch.kind {
                            ChannelKind::BitFlip => 1,
                            ChannelKind::PhaseFlip => 3,
                            ChannelKind::Depolarizing => {
                                rng.gen_range(1..1usize << (2 * ch.qubits.len())) as u8
                            }
                        };
                        pattern.push((ci as u32, code));
                    }
                }
                let u = rng.gen::<f64>();
                let outcome = if pattern.is_empty() {
                    sample(&ideal, u)
                } else if let Some(probs) = cache.get(&pattern) {
                    sample(probs, u)
                } else {
                    let probs = evolve(bound, &start, &pattern);
                    let o = sample(&probs, u);
                    if cache.len() < CACHE_LIMIT {
                        cache.insert(pattern, probs);
                    }
                    o
                };
                counts[apply_readout(outcome, &bound.readout, &mut rng)] += 1;
                (cache, counts)
            },
        )
        .map(|(_, counts)| counts)
        .reduce(
            || vec![0u64; outcomes],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    Ok(ShotCounts {
        num_bits: bound.measured.len(),
        counts,
        shots,
        seed,
    })
}
