use std::path::{Path, PathBuf};

use qnir::benchmarks::Benchmark;
use qnir::metrics::MemorySettings;
use qnir::optimizer::{AnnealSettings, EvoSettings};
use qnir::pipeline::CostSplit;
use qnir::readout::ReadoutConfig;
use qnir::reservoir::{EntanglementScheme, ReservoirConfig, ScalingMap};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    /// Dual annealing
    #[value(name = "da")]
    #[serde(alias = "da")]
    DualAnnealing,
    /// (μ+λ) evolutionary optimization
    #[value(name = "eo")]
    #[serde(alias = "eo")]
    Evolutionary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskSection {
    pub name: String,
    /// Sample count; the benchmark default when absent.
    pub len: Option<usize>,
    /// Read `t,u,y` rows from this file instead of generating.
    pub file: Option<PathBuf>,
}

impl Default for TaskSection {
    fn default() -> Self {
        Self {
            name: "narma2".into(),
            len: None,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReservoirSection {
    /// 12 for NARMA, 32 for Mackey-Glass when absent.
    pub qubits: Option<usize>,
    pub scheme: EntanglementScheme,
    pub washout: usize,
    pub scaling: ScalingMap,
}

impl Default for ReservoirSection {
    fn default() -> Self {
        Self {
            qubits: None,
            scheme: EntanglementScheme::PairSeparable,
            washout: 20,
            scaling: ScalingMap::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    /// Dual annealing for NARMA, evolutionary for Mackey-Glass when absent.
    pub kind: Option<OptimizerKind>,
    pub cost: CostSplit,
    pub anneal: AnnealSettings,
    pub evo: EvoSettings,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            kind: None,
            cost: CostSplit::Test,
            anneal: AnnealSettings::default(),
            evo: EvoSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MemorySection {
    pub max_delay: usize,
    pub trials: usize,
    pub probe_len: usize,
    pub train_fraction: f64,
}

impl Default for MemorySection {
    fn default() -> Self {
        let d = MemorySettings::default();
        Self {
            max_delay: d.max_delay,
            trials: d.trials,
            probe_len: d.probe_len,
            train_fraction: d.train_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub task: TaskSection,
    pub reservoir: ReservoirSection,
    pub readout: ReadoutConfig,
    pub optimizer: OptimizerSection,
    pub memory: MemorySection,
    /// Noise probabilities JSON for `run` and `mc`.
    pub params: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: TaskSection::default(),
            reservoir: ReservoirSection::default(),
            readout: ReadoutConfig::default(),
            optimizer: OptimizerSection::default(),
            memory: MemorySection::default(),
            params: None,
            seed: 0,
            out: PathBuf::from("qnir-out"),
        }
    }
}

/// Command-line values that override config keys.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub task: Option<String>,
    pub scheme: Option<EntanglementScheme>,
    pub qubits: Option<usize>,
    pub optimizer: Option<OptimizerKind>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub len: Option<usize>,
    pub params: Option<PathBuf>,
    pub trials: Option<usize>,
    pub max_delay: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::missing(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    /// Applies overrides, fills task-dependent defaults and validates.
    pub fn resolve(mut self, o: Overrides) -> Result<Self, CliError> {
        if let Some(t) = o.task {
            self.task.name = t;
        }
        if let Some(s) = o.scheme {
            self.reservoir.scheme = s;
        }
        if let Some(q) = o.qubits {
            self.reservoir.qubits = Some(q);
        }
        if let Some(k) = o.optimizer {
            self.optimizer.kind = Some(k);
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = o.out {
            self.out = d;
        }
        if let Some(n) = o.len {
            self.task.len = Some(n);
        }
        if let Some(p) = o.params {
            self.params = Some(p);
        }
        if let Some(t) = o.trials {
            self.memory.trials = t;
        }
        if let Some(d) = o.max_delay {
            self.memory.max_delay = d;
        }

        let bench = self.benchmark()?;
        self.task.name = bench.name().to_string();
        self.reservoir.qubits.get_or_insert(if bench.is_narma() { 12 } else { 32 });
        self.optimizer.kind.get_or_insert(if bench.is_narma() {
            OptimizerKind::DualAnnealing
        } else {
            OptimizerKind::Evolutionary
        });
        self.optimizer.anneal.seed = self.seed;
        self.optimizer.evo.seed = self.seed;
        self.reservoir_config().validate()?;
        if self.memory.trials == 0 || self.memory.max_delay == 0 {
            return Err(CliError::usage("memory trials and max_delay must be positive"));
        }
        Ok(self)
    }

    pub fn benchmark(&self) -> Result<Benchmark, CliError> {
        self.task
            .name
            .parse()
            .map_err(|_| CliError::usage(format!("unknown task `{}` (expected narma2, narma5, narma10, mg19 or mg25)", self.task.name)))
    }

    pub fn reservoir_config(&self) -> ReservoirConfig {
        ReservoirConfig {
            qubits: self.reservoir.qubits.unwrap_or(12),
            scheme: self.reservoir.scheme,
            scaling: self.reservoir.scaling,
            washout: self.reservoir.washout,
        }
    }

    pub fn optimizer_kind(&self) -> OptimizerKind {
        self.optimizer.kind.unwrap_or(OptimizerKind::DualAnnealing)
    }

    pub fn memory_settings(&self, range: (f64, f64)) -> MemorySettings {
        MemorySettings {
            max_delay: self.memory.max_delay,
            trials: self.memory.trials,
            probe_len: self.memory.probe_len,
            range,
            washout: self.reservoir.washout,
            train_fraction: self.memory.train_fraction,
            readout: self.readout,
            seed: self.seed,
        }
    }
}
