mod inputs;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qnz_core::bench::{bench_compile, compile_scaling, router_comparison};
use qnz_core::circuit::parse_circuit;
use qnz_core::mapper::{MappedCircuit, Router};
use qnz_core::noise::{bind, NoiseModel};
use qnz_core::qnn::{Backend, Evaluator, Model};
use qnz_core::sim::{bitstring, run_density, run_noiseless, run_trajectories};
use qnz_core::trainer::{
    noiseless_optimum, sweep, train_with_events, Strategy, TrainConfig, DEFAULT_PATIENCE,
};

use inputs::{relative_to, InputRecord, Inputs};

#[derive(Debug, Parser)]
#[command(
    name = "qnz",
    version,
    about = "Fixed-mapping compiler, noisy simulator and error-aware trainer for C^NZ quantum neurons"
)]
struct Cli {
    /// Seed for every random choice. Required whenever noise or sampling is involved.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write the full JSON run report (input hashes, timings) here.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "QNZ_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Route a circuit onto a topology.
    Compile {
        #[arg(long)]
        circuit: PathBuf,
        /// `chain:<n>`, `falcon27` or a topology file.
        #[arg(long, default_value = "chain:6")]
        topology: String,
        #[arg(long, default_value = "fixed")]
        router: Router,
    },
    /// Run a circuit and report the distribution over its computing qubits.
    Simulate {
        #[arg(long)]
        circuit: PathBuf,
        /// Route onto this topology first; without it the logical circuit runs as is.
        #[arg(long)]
        topology: Option<String>,
        #[arg(long, default_value = "fixed")]
        router: Router,
        /// Calibration file or shorthand such as `flip:0.01,phase:0.01`.
        #[arg(long, default_value = "none")]
        noise: String,
        /// `ideal`, `density` or `traj:<shots>`.
        #[arg(long, default_value = "density")]
        backend: Backend,
        /// `basis:<i>` or `amplitudes:<file>` over all logical qubits.
        #[arg(long, default_value = "basis:0")]
        init: String,
        /// Shorthand for `--backend traj:<shots>`.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        shots: Option<u64>,
    },
    /// Classify a dataset with a model.
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "none")]
        noise: String,
        #[arg(long, default_value = "chain:6")]
        topology: String,
        #[arg(long, default_value = "density")]
        backend: Backend,
        /// Shorthand for `--backend traj:<shots>`.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        shots: Option<u64>,
    },
    /// Search for weights that stay accurate under the configured noise.
    Train {
        /// JSON training configuration.
        #[arg(long)]
        config: PathBuf,
        /// Stream one JSON line per evaluated proposal here (default: stderr).
        /// Exhaustive search logs the starting model and each improvement only.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Train once per error rate and tabulate baseline against searched accuracy.
    ///
    /// Each rate replaces the non-zero rates of the configured noise; a
    /// noiseless configuration sweeps flip+phase noise.
    Sweep {
        /// Comma-separated error rates in [0, 1].
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<f64>,
        #[arg(long)]
        config: PathBuf,
    },
    /// Compile-latency and router benchmarks.
    ///
    /// Complexity classes are runs of CNZ(3) blocks on four computing and two
    /// auxiliary qubits: simple = 1 block, middle = 3, complex = 5.
    Bench {
        #[arg(long, value_enum, default_value_t = BenchTable::Compile)]
        table: BenchTable,
        #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u64).range(1..))]
        repetitions: u64,
        #[arg(long, default_value = "chain:6")]
        topology: String,
        /// Largest block count of the scaling table.
        #[arg(long, default_value_t = 10)]
        max_blocks: usize,
        /// Router table: the baseline model.
        #[arg(long, required_if_eq("table", "routers"))]
        baseline: Option<PathBuf>,
        /// Router table: the searched model.
        #[arg(long, required_if_eq("table", "routers"))]
        searched: Option<PathBuf>,
        #[arg(long, required_if_eq("table", "routers"))]
        dataset: Option<PathBuf>,
        #[arg(long, default_value = "none")]
        noise: String,
        #[arg(long, default_value = "density")]
        backend: Backend,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchTable {
    /// Median and p95 latency of both routers per complexity class.
    Compile,
    /// Fixed-router latency against block count with a linear fit.
    Scaling,
    /// Accuracy, SWAPs and compile time per router and model.
    Routers,
}

/// Training configuration file. Paths are relative to the file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainFile {
    dataset: PathBuf,
    /// Baseline model; defaults to the noiseless optimum on the dataset.
    model: Option<PathBuf>,
    #[serde(default = "default_topology")]
    topology: String,
    #[serde(default = "default_noise")]
    noise: String,
    #[serde(default = "default_strategy")]
    strategy: Strategy,
    #[serde(default = "default_max_iters")]
    max_iters: u64,
    /// 0 disables the patience check.
    #[serde(default = "default_patience")]
    patience: u64,
    #[serde(default = "default_backend")]
    backend: String,
    seed: Option<u64>,
}

fn default_topology() -> String {
    "chain:6".into()
}
fn default_noise() -> String {
    "none".into()
}
fn default_strategy() -> Strategy {
    Strategy::Exhaustive
}
fn default_max_iters() -> u64 {
    10_000
}
fn default_patience() -> u64 {
    DEFAULT_PATIENCE
}
fn default_backend() -> String {
    "density".into()
}

#[derive(Debug, Serialize)]
struct RunReport {
    subcommand: &'static str,
    tool_version: &'static str,
    seed: Option<u64>,
    inputs: Vec<InputRecord>,
    outputs: Vec<String>,
    timings_ms: BTreeMap<String, f64>,
    result: Value,
}

/// What a subcommand produced: a JSON result and the same data as a table.
struct Output {
    result: Value,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

struct Run {
    inputs: Inputs,
    timings: BTreeMap<String, f64>,
}

impl Run {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let v = f();
        *self.timings.entry(stage.to_string()).or_default() += t.elapsed().as_secs_f64() * 1e3;
        v
    }
}

/// Invocation mistakes found after argument parsing; reported with exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn require_seed(seed: Option<u64>, why: &str) -> Result<u64> {
    seed.ok_or_else(|| UsageError(format!("--seed is required because {why}")).into())
}

fn with_shots(backend: Backend, shots: Option<u64>) -> Backend {
    shots.map_or(backend, |shots| Backend::Trajectories { shots })
}

/// Seed for a run; mandatory when anything random or noisy is involved.
fn seed_for(seed: Option<u64>, noise: &NoiseModel, backend: Backend) -> Result<u64> {
    if backend.is_stochastic() {
        return require_seed(seed, "the trajectory backend samples shots");
    }
    if !noise.is_noiseless() {
        return require_seed(seed, "the run is noisy");
    }
    Ok(seed.unwrap_or(0))
}

fn cell(v: impl ToString) -> String {
    v.to_string()
}

fn mapped_summary(mapped: &MappedCircuit) -> Value {
    json!({
        "stats": mapped.stats,
        "initial_mapping": mapped.initial_mapping.as_slice(),
        "final_mapping": mapped.final_mapping.as_slice(),
        "circuit": mapped.to_text(),
    })
}

fn route(
    run: &mut Run,
    circuit: &qnz_core::circuit::Circuit,
    topology: Option<&str>,
    router: Router,
) -> Result<MappedCircuit> {
    match topology {
        Some(spec) => {
            let graph = run.inputs.topology(spec)?;
            Ok(run.time("compile", || router.route(circuit, &graph))?)
        }
        None => Ok(MappedCircuit::unrouted(circuit)?),
    }
}

fn cmd_compile(run: &mut Run, circuit: &Path, topology: &str, router: Router) -> Result<Output> {
    let text = run.inputs.read("circuit", circuit)?;
    let circuit =
        parse_circuit(&text).with_context(|| format!("in circuit file {}", circuit.display()))?;
    let mapped = route(run, &circuit, Some(topology), router)?;
    let s = mapped.stats;
    Ok(Output {
        result: mapped_summary(&mapped),
        header: [
            "swaps",
            "bridges",
            "bridge_gates",
            "extra_cx",
            "routed_cx_overhead",
            "depth",
        ]
        .map(String::from)
        .to_vec(),
        rows: vec![vec![
            cell(s.swaps),
            cell(s.bridges),
            cell(s.bridge_gates),
            cell(s.extra_cx),
            cell(s.routed_cx_overhead),
            cell(s.depth),
        ]],
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    run: &mut Run,
    seed: Option<u64>,
    circuit: &Path,
    topology: Option<&str>,
    router: Router,
    noise: &str,
    backend: Backend,
    init: &str,
) -> Result<Output> {
    let text = run.inputs.read("circuit", circuit)?;
    let circuit =
        parse_circuit(&text).with_context(|| format!("in circuit file {}", circuit.display()))?;
    let noise = run.inputs.noise(noise)?;
    let seed = seed_for(seed, &noise, backend)?;
    let init = run.inputs.init(init, circuit.width())?;
    let mapped = route(run, &circuit, topology, router)?;
    let bound = bind(&noise, &mapped);
    let bits = bound.measured.len();
    let header = vec!["outcome".to_string(), "probability".to_string()];
    match backend {
        Backend::Trajectories { shots } => {
            let counts = run.time("simulate", || run_trajectories(&bound, &init, shots, seed))?;
            let rows = (0..counts.counts.len())
                .filter(|&o| counts.count(o) > 0)
                .map(|o| {
                    vec![
                        bitstring(o, bits),
                        cell(counts.frequency(o)),
                        cell(counts.count(o)),
                    ]
                })
                .collect();
            Ok(Output {
                result: json!({ "backend": backend, "shots": shots, "counts": counts.to_map() }),
                header: vec!["outcome".into(), "probability".into(), "count".into()],
                rows,
            })
        }
        _ => {
            let dist = run.time("simulate", || match backend {
                Backend::Ideal => run_noiseless(&bound, &init),
                _ => run_density(&bound, &init),
            })?;
            let rows = dist
                .to_map()
                .into_iter()
                .map(|(k, p)| vec![k, cell(p)])
                .collect();
            Ok(Output {
                result: json!({ "backend": backend, "probabilities": dist.to_map() }),
                header,
                rows,
            })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_infer(
    run: &mut Run,
    seed: Option<u64>,
    model: &Path,
    dataset: &Path,
    noise: &str,
    topology: &str,
    backend: Backend,
) -> Result<Output> {
    let model = run.inputs.model("model", model)?;
    let data = run.inputs.dataset(dataset)?;
    let noise = run.inputs.noise(noise)?;
    let graph = run.inputs.topology(topology)?;
    let seed = seed_for(seed, &noise, backend)?;
    let evaluator = Evaluator::new(graph, noise, backend, seed);
    let outputs = run.time("simulate", || evaluator.model_outputs(&model, &data))?;
    let labels = data.labels();
    let mut correct = 0;
    let mut rows = Vec::with_capacity(data.len());
    let mut predictions = Vec::with_capacity(data.len());
    for (i, &label) in labels.iter().enumerate() {
        let per: Vec<f64> = outputs.iter().map(|o| o[i]).collect();
        let predicted = Model::decide(&per);
        correct += usize::from(predicted == label);
        predictions.push(predicted);
        let mut row = vec![cell(i), cell(label), cell(predicted)];
        row.extend(per.iter().map(cell));
        rows.push(row);
    }
    let accuracy = correct as f64 / data.len() as f64;
    let mut header: Vec<String> = ["sample", "label", "predicted"].map(String::from).to_vec();
    header.extend((0..outputs.len()).map(|n| format!("output{n}")));
    Ok(Output {
        result: json!({
            "backend": backend,
            "accuracy": accuracy,
            "predictions": predictions,
            "outputs": outputs,
        }),
        header,
        rows,
    })
}

struct Training {
    config: TrainConfig,
    data: qnz_core::qnn::Dataset,
    graph: qnz_core::topology::CouplingGraph,
}

fn load_training(
    run: &mut Run,
    path: &Path,
    seed: Option<u64>,
    sweeping: bool,
) -> Result<Training> {
    let text = run.inputs.read("config", path)?;
    let file: TrainFile = serde_json::from_str(&text)
        .with_context(|| format!("in training config {}", path.display()))?;
    let data = run.inputs.dataset(&relative_to(path, &file.dataset))?;
    let graph = run.inputs.topology(&file.topology)?;
    let noise_spec = if file.noise.contains(':') || matches!(file.noise.as_str(), "none" | "ideal")
    {
        file.noise.clone()
    } else {
        relative_to(path, Path::new(&file.noise))
            .display()
            .to_string()
    };
    let mut noise = run.inputs.noise(&noise_spec)?;
    if sweeping && noise.is_noiseless() {
        noise = NoiseModel::flip_phase(1.0);
    }
    let backend: Backend = file
        .backend
        .parse()
        .map_err(anyhow::Error::msg)
        .context("in training config")?;
    let seed = seed.or(file.seed);
    let seed = if file.strategy != Strategy::Exhaustive {
        require_seed(seed, "the search strategy draws random proposals")?
    } else {
        seed_for(seed, &noise, backend)?
    };
    let initial = match &file.model {
        Some(m) => run.inputs.model("model", &relative_to(path, m))?,
        None => run.time("baseline", || noiseless_optimum(&data, &graph))?,
    };
    Ok(Training {
        config: TrainConfig {
            strategy: file.strategy,
            max_iters: file.max_iters,
            patience: (file.patience > 0).then_some(file.patience),
            seed,
            backend,
            noise,
            initial,
        },
        data,
        graph,
    })
}

fn cmd_train(
    run: &mut Run,
    seed: Option<u64>,
    config: &Path,
    log: Option<&Path>,
) -> Result<Output> {
    let t = load_training(run, config, seed, false)?;
    let mut sink: Box<dyn Write> = match log {
        Some(p) => Box::new(io::BufWriter::new(
            File::create(p).with_context(|| format!("cannot create log {}", p.display()))?,
        )),
        None => Box::new(io::stderr()),
    };
    let mut write_err = None;
    let result = run.time("train", || {
        train_with_events(&t.config, &t.data, &t.graph, &mut |e| {
            if write_err.is_none() {
                if let Err(err) = serde_json::to_writer(&mut sink, e)
                    .map_err(io::Error::from)
                    .and_then(|_| writeln!(sink))
                {
                    write_err = Some(err);
                }
            }
        })
    })?;
    if let Some(err) = write_err {
        return Err(err).context("cannot write the training log");
    }
    sink.flush()?;
    let header = [
        "baseline_accuracy",
        "best_accuracy",
        "iterations",
        "evaluations",
        "baseline",
        "best",
    ]
    .map(String::from)
    .to_vec();
    let rows = vec![vec![
        cell(result.baseline_accuracy),
        cell(result.best_accuracy),
        cell(result.iterations),
        cell(result.evaluations),
        cell(&t.config.initial),
        cell(&result.best),
    ]];
    Ok(Output {
        result: json!({
            "strategy": t.config.strategy,
            "backend": t.config.backend,
            "baseline": t.config.initial,
            "best": result.best,
            "baseline_accuracy": result.baseline_accuracy,
            "best_accuracy": result.best_accuracy,
            "iterations": result.iterations,
            "evaluations": result.evaluations,
            "timings": result.timings,
        }),
        header,
        rows,
    })
}

fn cmd_sweep(run: &mut Run, seed: Option<u64>, rates: &[f64], config: &Path) -> Result<Output> {
    let t = load_training(run, config, seed, true)?;
    let rows = run.time("sweep", || sweep(rates, &t.config, &t.data, &t.graph))?;
    let table = rows
        .iter()
        .map(|r| {
            let weights: Vec<String> = r.searched.iter().map(|w| w.to_string()).collect();
            vec![
                cell(r.rate),
                cell(r.baseline_accuracy),
                cell(r.searched_accuracy),
                weights.join(" "),
            ]
        })
        .collect();
    Ok(Output {
        result: json!({ "baseline": t.config.initial, "rows": rows }),
        header: [
            "rate",
            "baseline_accuracy",
            "searched_accuracy",
            "searched_weights",
        ]
        .map(String::from)
        .to_vec(),
        rows: table,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    run: &mut Run,
    seed: Option<u64>,
    table: BenchTable,
    repetitions: usize,
    topology: &str,
    max_blocks: usize,
    models: (Option<&Path>, Option<&Path>, Option<&Path>),
    noise: &str,
    backend: Backend,
) -> Result<Output> {
    let graph = run.inputs.topology(topology)?;
    match table {
        BenchTable::Compile => {
            let rows = run.time("bench", || bench_compile(&graph, repetitions))?;
            let table = rows
                .iter()
                .map(|r| {
                    vec![
                        cell(r.class),
                        cell(r.blocks),
                        cell(r.fixed.median_ms),
                        cell(r.fixed.p95_ms),
                        cell(r.greedy.median_ms),
                        cell(r.greedy.p95_ms),
                        cell(r.fixed_swaps),
                        cell(r.greedy_swaps),
                    ]
                })
                .collect();
            Ok(Output {
                result: json!({ "repetitions": repetitions, "rows": rows }),
                header: [
                    "class",
                    "blocks",
                    "fixed_median_ms",
                    "fixed_p95_ms",
                    "greedy_median_ms",
                    "greedy_p95_ms",
                    "fixed_swaps",
                    "greedy_swaps",
                ]
                .map(String::from)
                .to_vec(),
                rows: table,
            })
        }
        BenchTable::Scaling => {
            let report = run.time("bench", || compile_scaling(&graph, max_blocks, repetitions))?;
            let rows = report
                .blocks
                .iter()
                .zip(&report.median_ms)
                .map(|(b, m)| vec![cell(b), cell(m)])
                .collect();
            Ok(Output {
                result: serde_json::to_value(&report)?,
                header: vec!["blocks".into(), "median_ms".into()],
                rows,
            })
        }
        BenchTable::Routers => {
            let (Some(baseline), Some(searched), Some(dataset)) = models else {
                bail!("the routers table needs --baseline, --searched and --dataset");
            };
            let baseline = run.inputs.model("baseline", baseline)?;
            let searched = run.inputs.model("searched", searched)?;
            let data = run.inputs.dataset(dataset)?;
            let noise = run.inputs.noise(noise)?;
            let seed = seed_for(seed, &noise, backend)?;
            let rows = run.time("bench", || {
                router_comparison(&baseline, &searched, &data, &graph, &noise, backend, seed)
            })?;
            let table = rows
                .iter()
                .map(|r| {
                    let weights: Vec<String> = r.weights.iter().map(|w| w.to_string()).collect();
                    vec![
                        cell(r.router),
                        r.model.clone(),
                        cell(r.accuracy),
                        cell(r.swaps),
                        cell(r.compile_ms),
                        weights.join(" "),
                    ]
                })
                .collect();
            Ok(Output {
                result: json!({ "rows": rows }),
                header: [
                    "router",
                    "model",
                    "accuracy",
                    "swaps",
                    "compile_ms",
                    "weights",
                ]
                .map(String::from)
                .to_vec(),
                rows: table,
            })
        }
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Compile { .. } => "compile",
        Command::Simulate { .. } => "simulate",
        Command::Infer { .. } => "infer",
        Command::Train { .. } => "train",
        Command::Sweep { .. } => "sweep",
        Command::Bench { .. } => "bench",
    }
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    let mut run = Run {
        inputs: Inputs::default(),
        timings: BTreeMap::new(),
    };
    let start = Instant::now();
    let output = match &cli.command {
        Command::Compile {
            circuit,
            topology,
            router,
        } => cmd_compile(&mut run, circuit, topology, *router)?,
        Command::Simulate {
            circuit,
            topology,
            router,
            noise,
            backend,
            init,
            shots,
        } => cmd_simulate(
            &mut run,
            cli.seed,
            circuit,
            topology.as_deref(),
            *router,
            noise,
            with_shots(*backend, *shots),
            init,
        )?,
        Command::Infer {
            model,
            dataset,
            noise,
            topology,
            backend,
            shots,
        } => cmd_infer(
            &mut run,
            cli.seed,
            model,
            dataset,
            noise,
            topology,
            with_shots(*backend, *shots),
        )?,
        Command::Train { config, log } => cmd_train(&mut run, cli.seed, config, log.as_deref())?,
        Command::Sweep { rates, config } => cmd_sweep(&mut run, cli.seed, rates, config)?,
        Command::Bench {
            table,
            repetitions,
            topology,
            max_blocks,
            baseline,
            searched,
            dataset,
            noise,
            backend,
        } => cmd_bench(
            &mut run,
            cli.seed,
            *table,
            *repetitions as usize,
            topology,
            *max_blocks,
            (baseline.as_deref(), searched.as_deref(), dataset.as_deref()),
            noise,
            *backend,
        )?,
    };
    run.timings
        .insert("total".into(), start.elapsed().as_secs_f64() * 1e3);

    let outputs = [cli.out.as_ref(), cli.report.as_ref()]
        .into_iter()
        .flatten()
        .map(|p| p.display().to_string())
        .collect();
    let report = RunReport {
        subcommand: subcommand_name(&cli.command),
        tool_version: env!("CARGO_PKG_VERSION"),
        seed: cli.seed,
        inputs: run.inputs.records,
        outputs,
        timings_ms: run.timings,
        result: output.result,
    };
    let mut report_json = serde_json::to_vec_pretty(&report)?;
    report_json.push(b'\n');
    match cli.format {
        Format::Json => emit(cli.out.as_deref(), &report_json)?,
        Format::Csv => emit(
            cli.out.as_deref(),
            &csv_bytes(&output.header, &output.rows)?,
        )?,
    }
    if let Some(p) = &cli.report {
        emit(Some(p), &report_json)?;
    }
    Ok(())
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let line = json!({ "error": message, "kind": kind });
    eprintln!("{line}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    ExitCode::from(2)
                } else {
                    ExitCode::SUCCESS
                };
            }
            // clap's first paragraph is the message; the rest is usage help
            let rendered = e.render().to_string();
            let message = rendered
                .split("\n\n")
                .next()
                .unwrap_or("usage error")
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ");
            let message = message.trim_start_matches("error: ");
            return fail("usage", message, 2);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => fail("usage", &e.to_string(), 2),
        Err(e) => fail("error", &format!("{e:#}"), 1),
    }
}
