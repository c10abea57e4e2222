//! Compile-latency benchmarks and router comparisons.
//!
//! Benchmark circuits are runs of X-wrapped CNZ(3) blocks on four computing
//! and two auxiliary qubits. The three complexity classes hold 1, 3 and 5
//! blocks.

use std::fmt;
use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::mapper::{MapperError, Router};
use crate::noise::NoiseModel;
use crate::qnn::{neuron_circuit, sign_flip_circuit, Backend, Dataset, Evaluator, Model, QnnError};
use crate::topology::CouplingGraph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("repetitions must be positive")]
    ZeroRepetitions,
    #[error("a linear fit needs at least two distinct block counts")]
    TooFewPoints,
    #[error(transparent)]
    Mapper(#[from] MapperError),
    #[error(transparent)]
    Qnn(#[from] QnnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityClass {
    Simple,
    Middle,
    Complex,
}

impl ComplexityClass {
    pub const ALL: [ComplexityClass; 3] = [Self::Simple, Self::Middle, Self::Complex];

    pub fn blocks(self) -> usize {
        match self {
            Self::Simple => 1,
            Self::Middle => 3,
            Self::Complex => 5,
        }
    }
}

impl fmt::Display for ComplexityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Simple => "simple",
            Self::Middle => "middle",
            Self::Complex => "complex",
        })
    }
}

/// `blocks` CNZ(3) blocks; block `b` flips basis index `(15 + 7b) mod 16`,
/// so consecutive blocks need different X wrappers.
pub fn bench_circuit(blocks: usize) -> Circuit {
    let flips: Vec<usize> = (0..blocks).map(|b| (15 + 7 * b) % 16).collect();
    sign_flip_circuit(4, &flips).expect("four qubits")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub median_ms: f64,
    pub p95_ms: f64,
    pub repetitions: usize,
}

impl LatencyStats {
    fn from_samples(mut ms: Vec<f64>) -> Self {
        ms.sort_by(f64::total_cmp);
        let n = ms.len();
        let median = if n % 2 == 1 {
            ms[n / 2]
        } else {
            (ms[n / 2 - 1] + ms[n / 2]) / 2.0
        };
        // nearest rank
        let p95 = ms[((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1];
        Self {
            median_ms: median,
            p95_ms: p95,
            repetitions: n,
        }
    }
}

/// Routes `circuit` `repetitions` times and summarises the wall-clock times.
pub fn time_compile(
    circuit: &Circuit,
    graph: &CouplingGraph,
    router: Router,
    repetitions: usize,
) -> Result<LatencyStats, BenchError> {
    Ok(time_interleaved(std::slice::from_ref(circuit), graph, router, repetitions)?.remove(0))
}

/// Times every circuit once per round, for `repetitions` rounds, so a slow
/// stretch of wall-clock time affects all circuits alike.
fn time_interleaved(
    circuits: &[Circuit],
    graph: &CouplingGraph,
    router: Router,
    repetitions: usize,
) -> Result<Vec<LatencyStats>, BenchError> {
    if repetitions == 0 {
        return Err(BenchError::ZeroRepetitions);
    }
    let mut samples = vec![Vec::with_capacity(repetitions); circuits.len()];
    for _ in 0..repetitions {
        for (c, out) in circuits.iter().zip(&mut samples) {
            let t = Instant::now();
            black_box(router.route(black_box(c), graph)?);
            out.push(t.elapsed().as_secs_f64() * 1e3);
        }
    }
    Ok(samples
        .into_iter()
        .map(LatencyStats::from_samples)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub class: ComplexityClass,
    pub blocks: usize,
    pub fixed: LatencyStats,
    pub greedy: LatencyStats,
    pub fixed_swaps: usize,
    pub greedy_swaps: usize,
}

/// Latency of both routers on each complexity class.
pub fn bench_compile(
    graph: &CouplingGraph,
    repetitions: usize,
) -> Result<Vec<BenchRow>, BenchError> {
    ComplexityClass::ALL
        .iter()
        .map(|&class| {
            let circuit = bench_circuit(class.blocks());
            Ok(BenchRow {
                class,
                blocks: class.blocks(),
                fixed: time_compile(&circuit, graph, Router::Fixed, repetitions)?,
                greedy: time_compile(&circuit, graph, Router::Greedy, repetitions)?,
                fixed_swaps: Router::Fixed.route(&circuit, graph)?.stats.swaps,
                greedy_swaps: Router::Greedy.route(&circuit, graph)?.stats.swaps,
            })
        })
        .collect()
}

/// Least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, BenchError> {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if n < 2.0 || sxx == 0.0 {
        return Err(BenchError::TooFewPoints);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub blocks: Vec<usize>,
    pub median_ms: Vec<f64>,
    pub fit: LinearFit,
}

/// Median fixed-router latency for `1..=max_blocks` blocks and a line
/// through it. Block counts are timed round-robin.
pub fn compile_scaling(
    graph: &CouplingGraph,
    max_blocks: usize,
    repetitions: usize,
) -> Result<ScalingReport, BenchError> {
    let blocks: Vec<usize> = (1..=max_blocks).collect();
    let circuits: Vec<Circuit> = blocks.iter().map(|&b| bench_circuit(b)).collect();
    let median_ms: Vec<f64> = time_interleaved(&circuits, graph, Router::Fixed, repetitions)?
        .iter()
        .map(|s| s.median_ms)
        .collect();
    let xs: Vec<f64> = blocks.iter().map(|&b| b as f64).collect();
    let fit = linear_fit(&xs, &median_ms)?;
    Ok(ScalingReport {
        blocks,
        median_ms,
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterRow {
    pub router: Router,
    /// `baseline` or `searched`.
    pub model: String,
    pub weights: Vec<crate::qnn::WeightVector>,
    pub accuracy: f64,
    /// SWAPs inserted over all neuron circuits of the model.
    pub swaps: usize,
    /// Time to route all neuron circuits once.
    pub compile_ms: f64,
}

/// Accuracy and routing cost for fixed x baseline, greedy x searched and
/// fixed x searched, all simulated under the same noise and seed.
pub fn router_comparison(
    baseline: &Model,
    searched: &Model,
    data: &Dataset,
    graph: &CouplingGraph,
    noise: &NoiseModel,
    backend: Backend,
    seed: u64,
) -> Result<Vec<RouterRow>, BenchError> {
    let cases = [
        (Router::Fixed, "baseline", baseline),
        (Router::Greedy, "searched", searched),
        (Router::Fixed, "searched", searched),
    ];
    cases
        .iter()
        .map(|&(router, name, model)| {
            let circuits = model
                .neurons()
                .iter()
                .map(neuron_circuit)
                .collect::<Result<Vec<_>, _>>()?;
            let t = Instant::now();
            let routed = circuits
                .iter()
                .map(|c| router.route(c, graph))
                .collect::<Result<Vec<_>, _>>()?;
            let compile_ms = t.elapsed().as_secs_f64() * 1e3;
            let evaluator =
                Evaluator::new(graph.clone(), noise.clone(), backend, seed).with_router(router);
            Ok(RouterRow {
                router,
                model: name.to_string(),
                weights: model.neurons().to_vec(),
                accuracy: evaluator.accuracy(model, data)?,
                swaps: routed.iter().map(|m| m.stats.swaps).sum(),
                compile_ms,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes_have_the_stated_block_counts() {
        for class in ComplexityClass::ALL {
            let c = bench_circuit(class.blocks());
            assert_eq!(c.blocks().len(), class.blocks());
            assert_eq!((c.num_computing(), c.num_aux()), (4, 2));
        }
    }

    #[test]
    fn zero_repetitions_is_an_error() {
        let g = CouplingGraph::linear_chain(6);
        assert_eq!(
            time_compile(&bench_circuit(1), &g, Router::Fixed, 0),
            Err(BenchError::ZeroRepetitions)
        );
    }

    #[test]
    fn percentiles() {
        let s = LatencyStats::from_samples((1..=20).map(f64::from).collect());
        assert_eq!(s.median_ms, 10.5);
        assert_eq!(s.p95_ms, 19.0);
        let s = LatencyStats::from_samples(vec![3.0]);
        assert_eq!((s.median_ms, s.p95_ms), (3.0, 3.0));
    }

    #[test]
    fn exact_line_fits_perfectly() {
        let fit = linear_fit(&[1.0, 2.0, 3.0], &[5.0, 7.0, 9.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(
            linear_fit(&[1.0, 1.0], &[1.0, 2.0]),
            Err(BenchError::TooFewPoints)
        );
    }

    #[test]
    fn fixed_router_needs_fewer_swaps() {
        let rows = bench_compile(&CouplingGraph::linear_chain(6), 3).unwrap();
        for r in rows {
            assert_eq!(r.fixed_swaps, 4 * r.blocks);
            assert!(r.fixed_swaps < r.greedy_swaps);
        }
    }
}
