use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qnir::benchmarks::{TaskBundle, TaskSource};
use qnir::metrics::{memory_profile, MetricReport};
use qnir::optimizer::{dual_annealing, evolutionary_optimize, random_init, OptimizationResult, StopReason};
use qnir::pipeline::{evaluate, Evaluation, ReservoirObjective};
use qnir::readout::SplitSpec;
use qnir::reservoir::{EntanglementScheme, NoiseParams};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, OptimizerKind};
use crate::error::CliError;
use crate::manifest::{config_hash, now, RunManifest};

/// Collects output files of one command and writes the manifest last.
struct Outputs {
    dir: PathBuf,
    names: Vec<String>,
    started: String,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            names: Vec::new(),
            started: now(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        if !self.names.iter().any(|n| n == name) {
            self.names.push(name.to_string());
        }
        Ok(BufWriter::new(file))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::usage(e.to_string()))?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))
    }

    fn finish(mut self, command: &str, config: &ExperimentConfig) -> Result<(), CliError> {
        self.json("config.json", config)?;
        // keep earlier commands' files in the inventory
        if let Ok(text) = std::fs::read_to_string(self.dir.join("manifest.json")) {
            if let Ok(prev) = serde_json::from_str::<RunManifest>(&text) {
                for f in prev.files {
                    if !self.names.contains(&f.name) && self.dir.join(&f.name).is_file() {
                        self.names.push(f.name);
                    }
                }
            }
        }
        self.names.sort();
        let manifest = RunManifest::new(command, config_hash(config)?, self.started.clone(), &self.dir, &self.names)?;
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::usage(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TaskSidecar {
    name: String,
    len: usize,
    split: SplitSpec,
    source: Option<TaskSource>,
}

/// Noise probabilities on disk, tagged with the register they belong to.
#[derive(Debug, Serialize, Deserialize)]
pub struct ParamsFile {
    pub scheme: EntanglementScheme,
    pub qubits: usize,
    pub p: NoiseParams,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsFile {
    pub task: String,
    pub scheme: EntanglementScheme,
    pub qubits: usize,
    pub degenerate: bool,
    #[serde(flatten)]
    pub report: MetricReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OptimizationSummary {
    pub optimizer: OptimizerKind,
    pub evaluations: usize,
    pub best_mse: f64,
    pub initial_mse: f64,
    pub improvement_orders: f64,
    pub stop_reason: StopReason,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MemoryFile {
    pub capacity: f64,
    pub trials: usize,
    pub max_delay: usize,
    pub probe_range: (f64, f64),
}

fn load_task(cfg: &ExperimentConfig) -> Result<TaskBundle, CliError> {
    let bench = cfg.benchmark()?;
    let Some(path) = &cfg.task.file else {
        return Ok(bench.task(cfg.task.len)?);
    };
    let file = File::open(path).map_err(|e| CliError::missing(path, e))?;
    let len_hint = cfg.task.len;
    // the split follows the sidecar when present, else the benchmark rule
    let sidecar = path.with_extension("json");
    let split = match std::fs::read_to_string(&sidecar) {
        Ok(text) => {
            serde_json::from_str::<TaskSidecar>(&text)
                .map_err(|e| CliError::usage(format!("{}: {e}", sidecar.display())))?
                .split
        }
        Err(_) => {
            let rows = csv_rows(path)?;
            bench.split_for(len_hint.unwrap_or(rows))?
        }
    };
    Ok(TaskBundle::read_csv(file, bench.name(), split)?)
}

fn csv_rows(path: &Path) -> Result<usize, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::missing(path, e))?;
    Ok(text.lines().count().saturating_sub(1))
}

fn load_params(cfg: &ExperimentConfig, path: &Path) -> Result<NoiseParams, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::missing(path, e))?;
    let file: ParamsFile =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let rc = cfg.reservoir_config();
    if file.scheme != rc.scheme || file.qubits != rc.qubits {
        return Err(CliError::usage(format!(
            "{} holds parameters for {} qubits ({}), config asks for {} ({})",
            path.display(),
            file.qubits,
            file.scheme,
            rc.qubits,
            rc.scheme
        )));
    }
    if file.p.len() != rc.parameter_count() {
        return Err(CliError::usage(format!(
            "{} has {} probabilities, expected {}",
            path.display(),
            file.p.len(),
            rc.parameter_count()
        )));
    }
    Ok(file.p)
}

fn params_file(cfg: &ExperimentConfig, p: NoiseParams) -> ParamsFile {
    let rc = cfg.reservoir_config();
    ParamsFile {
        scheme: rc.scheme,
        qubits: rc.qubits,
        p,
    }
}

pub fn generate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let task = cfg.benchmark()?.task(cfg.task.len)?;
    let mut out = Outputs::new(&cfg.out)?;
    let w = out.create("task.csv")?;
    task.write_csv(w)?;
    out.json(
        "task.json",
        &TaskSidecar {
            name: task.name.clone(),
            len: task.len(),
            split: task.split,
            source: task.source.clone(),
        },
    )?;
    out.finish("generate", cfg)?;
    println!("wrote {} samples of {} to {}", task.len(), task.name, cfg.out.display());
    Ok(())
}

fn write_evaluation(out: &mut Outputs, cfg: &ExperimentConfig, task: &TaskBundle, ev: &Evaluation) -> Result<(), CliError> {
    let rc = cfg.reservoir_config();
    let w = out.create("features.csv")?;
    ev.features.write_csv(w, cfg.readout.intercept)?;
    out.json("weights.json", &ev.model)?;
    out.json(
        "metrics.json",
        &MetricsFile {
            task: task.name.clone(),
            scheme: rc.scheme,
            qubits: rc.qubits,
            degenerate: ev.degenerate,
            report: ev.metrics,
        },
    )?;
    let path = cfg.out.join("predictions.csv");
    let mut csv = csv::Writer::from_writer(out.create("predictions.csv")?);
    let header = ["t".to_string(), "y".to_string(), "yhat".to_string()];
    let rows = task
        .split
        .test()
        .zip(&ev.predictions)
        .map(|(t, yhat)| [t.to_string(), task.target[t].to_string(), yhat.to_string()]);
    std::iter::once(header)
        .chain(rows)
        .try_for_each(|r| csv.write_record(&r))
        .and_then(|_| csv.flush().map_err(Into::into))
        .map_err(|e| CliError::io(&path, std::io::Error::other(e)))
}

fn print_metrics(ev: &Evaluation) {
    let m = &ev.metrics;
    println!("{:<8} {:>12} {:>12}", "metric", "model", "naive");
    for (name, a, b) in [
        ("MSE", m.model.mse, m.naive.mse),
        ("NMSE", m.model.nmse, m.naive.nmse),
        ("NRMSE", m.model.nrmse, m.naive.nrmse),
        ("MASE", m.model.mase, m.naive.mase),
    ] {
        println!("{name:<8} {a:>12.4e} {b:>12.4e}");
    }
    if ev.degenerate {
        println!("warning: all reservoir features are zero");
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let task = load_task(cfg)?;
    let rc = cfg.reservoir_config();
    let p = match &cfg.params {
        Some(path) => load_params(cfg, path)?,
        None => random_init(rc.parameter_count(), cfg.seed),
    };
    let ev = evaluate(&task, &rc, &p, &cfg.readout)?;
    let mut out = Outputs::new(&cfg.out)?;
    write_evaluation(&mut out, cfg, &task, &ev)?;
    out.json("params.json", &params_file(cfg, p))?;
    out.finish("run", cfg)?;
    print_metrics(&ev);
    Ok(())
}

pub fn optimize(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let task = load_task(cfg)?;
    let rc = cfg.reservoir_config();
    let objective = ReservoirObjective::new(&task, rc, cfg.readout, cfg.optimizer.cost)?;
    let kind = cfg.optimizer_kind();
    let result: OptimizationResult = match kind {
        OptimizerKind::DualAnnealing => dual_annealing(&objective, &cfg.optimizer.anneal)?,
        OptimizerKind::Evolutionary => evolutionary_optimize(&objective, &cfg.optimizer.evo)?,
    };
    let ev = evaluate(&task, &rc, &result.best, &cfg.readout)?;

    let mut out = Outputs::new(&cfg.out)?;
    let w = out.create("costs.csv")?;
    result.write_history_csv(w)?;
    write_evaluation(&mut out, cfg, &task, &ev)?;
    out.json("params.json", &params_file(cfg, result.best.clone()))?;
    out.json(
        "optimization.json",
        &OptimizationSummary {
            optimizer: kind,
            evaluations: result.evaluations,
            best_mse: result.best_cost,
            initial_mse: result.history[0],
            improvement_orders: result.improvement_orders(),
            stop_reason: result.stop_reason,
        },
    )?;
    out.finish("optimize", cfg)?;
    println!(
        "{} evaluations, best MSE {:.4e} ({:.2} orders below the initial cost), stop: {:?}",
        result.evaluations,
        result.best_cost,
        result.improvement_orders(),
        result.stop_reason
    );
    print_metrics(&ev);
    Ok(())
}

pub fn mc(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let path = cfg.params.clone().unwrap_or_else(|| cfg.out.join("params.json"));
    let p = load_params(cfg, &path)?;
    let task = load_task(cfg)?;
    let range = task.input_range();
    let settings = cfg.memory_settings(range);
    let profile = memory_profile(&cfg.reservoir_config(), &p, &settings)?;

    let mut out = Outputs::new(&cfg.out)?;
    let w = out.create("mf.csv")?;
    profile.write_csv(w)?;
    out.json(
        "mc.json",
        &MemoryFile {
            capacity: profile.capacity,
            trials: profile.trials,
            max_delay: settings.max_delay,
            probe_range: range,
        },
    )?;
    out.finish("mc", cfg)?;
    println!("MC = {:.4} over {} trials (d = 1..={})", profile.capacity, profile.trials, settings.max_delay);
    Ok(())
}

pub fn report(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let dir = &cfg.out;
    let path = dir.join("metrics.json");
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::missing(&path, e))?;
    let metrics: MetricsFile =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let m = &metrics.report;
    println!("task {} | {} qubits ({})", metrics.task, metrics.qubits, metrics.scheme);
    println!("{:<8} {:>12} {:>12}", "metric", "QNIR", "Naive");
    for (name, a, b) in [
        ("NMSE", m.model.nmse, m.naive.nmse),
        ("NRMSE", m.model.nrmse, m.naive.nrmse),
        ("MASE", m.model.mase, m.naive.mase),
    ] {
        println!("{name:<8} {a:>12.4e} {b:>12.4e}");
    }
    if let Ok(text) = std::fs::read_to_string(dir.join("optimization.json")) {
        if let Ok(o) = serde_json::from_str::<OptimizationSummary>(&text) {
            println!(
                "optimizer {:?}: {} evaluations, MSE {:.3e} -> {:.3e} ({:.2} orders)",
                o.optimizer, o.evaluations, o.initial_mse, o.best_mse, o.improvement_orders
            );
        }
    }
    if let Ok(text) = std::fs::read_to_string(dir.join("mc.json")) {
        if let Ok(mc) = serde_json::from_str::<MemoryFile>(&text) {
            println!("memory capacity {:.3} ({} trials, d <= {})", mc.capacity, mc.trials, mc.max_delay);
        }
    }
    Ok(())
}
