//! Error-aware weight search.
//!
//! Every proposal is compiled onto the device, bound to the noise model and
//! simulated, so the search optimises accuracy under the errors the fixed
//! mapping places on each physical qubit.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::NoiseModel;
use crate::qnn::{
    accuracy_from_outputs, best_joint_model, derive_seed, Backend, Dataset, Evaluator, Model,
    QnnError, WeightVector,
};
use crate::topology::CouplingGraph;

/// Largest joint weight space (in bits) the exhaustive strategy accepts.
pub const EXHAUSTIVE_MAX_BITS: usize = 20;
pub const DEFAULT_PATIENCE: u64 = 64;

// Keeps the proposal stream apart from the trajectory seeds.
const PROPOSAL_STREAM: u64 = 0x0074_7261_696e;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error(
        "exhaustive search over {bits} weight bits exceeds the limit of {EXHAUSTIVE_MAX_BITS}"
    )]
    TooLarge { bits: usize },
    #[error("max_iters must be positive")]
    ZeroIters,
    #[error("error rate {0} is outside [0, 1]")]
    BadRate(f64),
    #[error("sweep needs a noise template with at least one non-zero rate")]
    EmptyTemplate,
    #[error(transparent)]
    Qnn(#[from] QnnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Exhaustive,
    HillClimb,
    RandomSearch,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Exhaustive => "exhaustive",
            Strategy::HillClimb => "hill_climb",
            Strategy::RandomSearch => "random_search",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exhaustive" => Ok(Strategy::Exhaustive),
            "hill_climb" | "hill-climb" => Ok(Strategy::HillClimb),
            "random_search" | "random-search" | "random" => Ok(Strategy::RandomSearch),
            _ => Err(format!("unknown strategy `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub strategy: Strategy,
    /// Proposal budget. Exhaustive search ignores it.
    pub max_iters: u64,
    /// Stop after this many consecutive proposals without a new best.
    /// `None` disables the check. Exhaustive search ignores it.
    pub patience: Option<u64>,
    pub seed: u64,
    pub backend: Backend,
    pub noise: NoiseModel,
    /// The baseline model; also the starting point of hill climbing.
    pub initial: Model,
}

impl TrainConfig {
    pub fn new(strategy: Strategy, initial: Model, noise: NoiseModel, seed: u64) -> Self {
        Self {
            strategy,
            max_iters: 10_000,
            patience: Some(DEFAULT_PATIENCE),
            seed,
            backend: Backend::Density,
            noise,
            initial,
        }
    }
}

/// One evaluated proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iter: u64,
    pub weights: Vec<WeightVector>,
    pub accuracy: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub baseline_ms: f64,
    pub search_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub best: Model,
    pub best_accuracy: f64,
    pub baseline_accuracy: f64,
    /// Proposals examined, counting repeats served from the cache.
    pub iterations: u64,
    /// Distinct weight vectors that were compiled and simulated.
    pub evaluations: usize,
    /// Random restarts taken by hill climbing.
    pub restarts: u64,
    pub log: Vec<LogEntry>,
    pub timings: Timings,
}

struct Search<'a> {
    evaluator: Evaluator,
    data: &'a Dataset,
    labels: Vec<usize>,
    cache: HashMap<WeightVector, Arc<Vec<f64>>>,
    start: Instant,
    max_iters: u64,
    patience: Option<u64>,
    iter: u64,
    stale: u64,
    best: Model,
    best_correct: usize,
    restarts: u64,
    log: Vec<LogEntry>,
    on_event: &'a mut dyn FnMut(&LogEntry),
}

impl Search<'_> {
    fn outputs(&mut self, w: &WeightVector) -> Result<Arc<Vec<f64>>, QnnError> {
        if let Some(o) = self.cache.get(w) {
            return Ok(Arc::clone(o));
        }
        let o = Arc::new(self.evaluator.neuron_outputs(w, self.data)?);
        self.cache.insert(w.clone(), Arc::clone(&o));
        Ok(o)
    }

    /// Fills the cache for many weight vectors at once.
    fn prefetch(&mut self, ws: &[WeightVector]) -> Result<(), QnnError> {
        let missing: Vec<&WeightVector> =
            ws.iter().filter(|w| !self.cache.contains_key(*w)).collect();
        let fresh = missing
            .par_iter()
            .map(|w| self.evaluator.neuron_outputs(w, self.data))
            .collect::<Result<Vec<_>, _>>()?;
        for (w, o) in missing.into_iter().zip(fresh) {
            self.cache.insert(w.clone(), Arc::new(o));
        }
        Ok(())
    }

    fn correct(&mut self, model: &Model) -> Result<usize, QnnError> {
        let outputs = model
            .neurons()
            .iter()
            .map(|w| self.outputs(w))
            .collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<&[f64]> = outputs.iter().map(|o| o.as_slice()).collect();
        let acc = accuracy_from_outputs(&refs, &self.labels);
        Ok((acc * self.labels.len() as f64).round() as usize)
    }

    fn record(&mut self, model: &Model, correct: usize) {
        let entry = LogEntry {
            iter: self.iter,
            weights: model.neurons().to_vec(),
            accuracy: correct as f64 / self.labels.len() as f64,
            elapsed_ms: self.start.elapsed().as_secs_f64() * 1e3,
        };
        (self.on_event)(&entry);
        self.log.push(entry);
    }

    /// Evaluates one proposal and keeps it if it beats the incumbent.
    fn propose(&mut self, model: &Model) -> Result<usize, QnnError> {
        self.iter += 1;
        let correct = self.correct(model)?;
        self.record(model, correct);
        if correct > self.best_correct {
            self.best = model.clone();
            self.best_correct = correct;
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        Ok(correct)
    }

    fn done(&self) -> bool {
        self.iter >= self.max_iters || self.patience.is_some_and(|p| self.stale >= p)
    }

    fn random_model(&self, rng: &mut ChaCha8Rng) -> Model {
        let len = self.best.input_len();
        let neurons = (0..self.best.neurons().len())
            .map(|_| WeightVector::from_index(rng.gen_range(0..1u64 << len), len).expect("valid"))
            .collect();
        Model::new(neurons).expect("uniform lengths")
    }
}

fn all_weights(len: usize) -> Vec<WeightVector> {
    (0..1u64 << len)
        .map(|i| WeightVector::from_index(i, len).expect("valid length"))
        .collect()
}

fn exhaustive(search: &mut Search<'_>) -> Result<(), TrainError> {
    let len = search.best.input_len();
    let neurons = search.best.neurons().len();
    let bits = len * neurons;
    if bits > EXHAUSTIVE_MAX_BITS {
        return Err(TrainError::TooLarge { bits });
    }
    let candidates = all_weights(len);
    search.prefetch(&candidates)?;
    let table: Vec<Vec<f64>> = candidates
        .iter()
        .map(|w| search.cache[w].as_ref().clone())
        .collect();
    let found = best_joint_model(&table, &search.labels, neurons);
    search.iter = 1u64 << bits;
    if found.correct > search.best_correct {
        let model = Model::new(
            found
                .choice
                .iter()
                .map(|&c| candidates[c].clone())
                .collect(),
        )?;
        search.best = model.clone();
        search.best_correct = found.correct;
        search.record(&model, found.correct);
    }
    Ok(())
}

/// First-improvement single-entry flips, lowest index first, with random
/// restarts at local optima.
fn hill_climb(search: &mut Search<'_>, rng: &mut ChaCha8Rng) -> Result<(), TrainError> {
    let mut current = search.best.clone();
    let mut current_correct = search.best_correct;
    let width = current.input_len();
    while !search.done() {
        let mut moved = false;
        'scan: for n in 0..current.neurons().len() {
            for j in 0..width {
                if search.done() {
                    break 'scan;
                }
                let mut neurons = current.neurons().to_vec();
                neurons[n] = neurons[n].flipped(j);
                let candidate = Model::new(neurons)?;
                let c = search.propose(&candidate)?;
                if c > current_correct {
                    current = candidate;
                    current_correct = c;
                    moved = true;
                    break 'scan;
                }
            }
        }
        if !moved && !search.done() {
            search.restarts += 1;
            current = search.random_model(rng);
            current_correct = search.propose(&current)?;
        }
    }
    Ok(())
}

fn random_search(search: &mut Search<'_>, rng: &mut ChaCha8Rng) -> Result<(), TrainError> {
    while !search.done() {
        let model = search.random_model(rng);
        search.propose(&model)?;
    }
    Ok(())
}

/// Runs the configured search on `data` over `graph`.
pub fn train(
    config: &TrainConfig,
    data: &Dataset,
    graph: &CouplingGraph,
) -> Result<TrainResult, TrainError> {
    train_with_events(config, data, graph, &mut |_| {})
}

/// [`train`], calling `on_event` for every log entry as it is produced.
pub fn train_with_events(
    config: &TrainConfig,
    data: &Dataset,
    graph: &CouplingGraph,
    on_event: &mut dyn FnMut(&LogEntry),
) -> Result<TrainResult, TrainError> {
    if config.max_iters == 0 && config.strategy != Strategy::Exhaustive {
        return Err(TrainError::ZeroIters);
    }
    if config.initial.input_len() != data.dim() {
        return Err(QnnError::DimensionMismatch {
            expected: config.initial.input_len(),
            got: data.dim(),
        }
        .into());
    }
    let labels = data.labels();
    crate::qnn::check_labels(&labels, config.initial.num_classes())?;

    let start = Instant::now();
    let mut search = Search {
        evaluator: Evaluator::new(
            graph.clone(),
            config.noise.clone(),
            config.backend,
            config.seed,
        ),
        data,
        labels,
        cache: HashMap::new(),
        start,
        max_iters: config.max_iters,
        patience: config.patience,
        iter: 0,
        stale: 0,
        best: config.initial.clone(),
        best_correct: 0,
        restarts: 0,
        log: Vec::new(),
        on_event,
    };
    let baseline_correct = search.correct(&config.initial)?;
    search.best_correct = baseline_correct;
    search.record(&config.initial, baseline_correct);
    let baseline_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[config.seed, PROPOSAL_STREAM]));
    match config.strategy {
        Strategy::Exhaustive => exhaustive(&mut search)?,
        Strategy::HillClimb => hill_climb(&mut search, &mut rng)?,
        Strategy::RandomSearch => random_search(&mut search, &mut rng)?,
    }

    let n = data.len() as f64;
    Ok(TrainResult {
        best_accuracy: search.best_correct as f64 / n,
        baseline_accuracy: baseline_correct as f64 / n,
        best: search.best,
        iterations: search.iter,
        evaluations: search.cache.len(),
        restarts: search.restarts,
        log: search.log,
        timings: Timings {
            baseline_ms,
            search_ms: start.elapsed().as_secs_f64() * 1e3 - baseline_ms,
        },
    })
}

/// One row of an accuracy-versus-error-rate sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rate: f64,
    pub baseline_accuracy: f64,
    pub searched_accuracy: f64,
    pub searched: Vec<WeightVector>,
}

/// Trains once per rate. Each rate replaces the non-zero rates of
/// `config.noise`; every row uses the same evaluation seed.
pub fn sweep(
    rates: &[f64],
    config: &TrainConfig,
    data: &Dataset,
    graph: &CouplingGraph,
) -> Result<Vec<SweepRow>, TrainError> {
    if let Some(&bad) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(TrainError::BadRate(bad));
    }
    if config.noise.with_rate(1.0).is_noiseless() {
        return Err(TrainError::EmptyTemplate);
    }
    rates
        .iter()
        .map(|&rate| {
            let cfg = TrainConfig {
                noise: config.noise.with_rate(rate),
                ..config.clone()
            };
            let r = train(&cfg, data, graph)?;
            Ok(SweepRow {
                rate,
                baseline_accuracy: r.baseline_accuracy,
                searched_accuracy: r.best_accuracy,
                searched: r.best.neurons().to_vec(),
            })
        })
        .collect()
}

/// The best two-class model under noiseless evaluation: exhaustive search
/// from the all-ones model, so ties resolve to the lowest assignment.
pub fn noiseless_optimum(data: &Dataset, graph: &CouplingGraph) -> Result<Model, TrainError> {
    let ones = WeightVector::ones(data.dim())?;
    let config = TrainConfig {
        backend: Backend::Ideal,
        ..TrainConfig::new(
            Strategy::Exhaustive,
            Model::new(vec![ones.clone(), ones])?,
            NoiseModel::noiseless(),
            0,
        )
    };
    Ok(train(&config, data, graph)?.best)
}
