//! Campaign configuration (TOML).
//!
//! Every optional key is filled in during [`parse_config`] so the resolved
//! configuration written next to the results lists each value actually used.

use std::fs;
use std::path::{Path, PathBuf};

use activo_core::evolutionary::{DeParams, MicroGaParams, PsoParams};
use activo_core::problems::{engine_design_space, CosineMixture, EvaluatorMode, COSINE_MIXTURE_OPTIMUM};
use activo_core::sampler::SamplerConfig;
use activo_core::space::Dimension;
use activo_core::strong::NetworkConfig;
use activo_core::weak::WeakHyperparams;
use activo_core::{DesignSpace, Sense};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub optimizer: OptimizerConfig,
    /// Filled from the problem when it has a natural domain.
    pub space: Option<SpaceConfig>,
    pub batch_size: usize,
    /// Maximum evaluations per trial.
    pub budget: usize,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// ActivO stagnation tolerance; defaults per problem.
    pub epsilon: Option<f64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// End a trial once its best fitness reaches this value.
    pub stop_at: Option<f64>,
    #[serde(default)]
    pub summary: SummaryConfig,
    /// Exit with a distinct nonzero code when a trial neither converges nor
    /// reaches the success threshold.
    #[serde(default = "yes")]
    pub unconverged_is_error: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_output() -> PathBuf {
    PathBuf::from("activo-output")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    CosineMixture {
        #[serde(default = "two")]
        dim: usize,
    },
    External {
        command: Vec<String>,
        /// Base directory for protocol files; each trial gets a subdirectory.
        workdir: Option<PathBuf>,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
        #[serde(default = "default_mode")]
        mode: EvaluatorMode,
        #[serde(default = "maximize")]
        sense: Sense,
    },
}

fn two() -> usize {
    2
}

fn default_timeout() -> f64 {
    3600.0
}

fn default_mode() -> EvaluatorMode {
    EvaluatorMode::Fitness
}

fn maximize() -> Sense {
    Sense::Maximize
}

impl ProblemConfig {
    pub fn sense(&self) -> Sense {
        match self {
            ProblemConfig::CosineMixture { .. } => Sense::Maximize,
            ProblemConfig::External { sense, .. } => *sense,
        }
    }

    fn default_epsilon(&self) -> f64 {
        match self {
            ProblemConfig::CosineMixture { .. } => 1e-3,
            ProblemConfig::External { mode: EvaluatorMode::EngineMetrics, .. } => 0.1,
            ProblemConfig::External { .. } => 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    /// Name of a built-in space (`engine` or `cosine-mixture`).
    pub builtin: Option<String>,
    pub dimensions: Option<Vec<Dimension<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OptimizerConfig {
    Activo(ActivoSettings),
    MicroGa(MicroGaParams),
    Pso(PsoParams),
    De(DeParams),
}

impl OptimizerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Activo(_) => "activo",
            OptimizerConfig::MicroGa(_) => "micro-ga",
            OptimizerConfig::Pso(_) => "pso",
            OptimizerConfig::De(_) => "de",
        }
    }
}

/// ActivO tunables not already covered by the top-level keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivoSettings {
    pub monitor_count: usize,
    pub committee_size: usize,
    pub stop_on_convergence: bool,
    pub sampler: SamplerConfig,
    pub weak: WeakHyperparams,
    pub network: NetworkConfig,
    pub surrogate_search: DeParams,
}

impl Default for ActivoSettings {
    fn default() -> Self {
        let base = activo_core::ActivoConfig::default();
        Self {
            monitor_count: base.controller.monitor_count,
            committee_size: base.committee_size,
            stop_on_convergence: base.controller.stop_on_convergence,
            sampler: base.sampler,
            weak: base.weak,
            network: base.network,
            surrogate_search: base.surrogate_search,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummaryConfig {
    /// Thresholds for the evaluations-to-threshold table.
    pub thresholds: Vec<f64>,
    /// Known optimum of the problem, if any.
    pub optimum: Option<f64>,
    /// A trial has converged once its best is within this of the optimum.
    pub tolerance: f64,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        Self { thresholds: Vec::new(), optimum: None, tolerance: 0.002 }
    }
}

impl SummaryConfig {
    /// Fitness a trial must reach to count as converged to the optimum.
    pub fn success_threshold(&self, sense: Sense) -> Option<f64> {
        self.optimum.map(|o| match sense {
            Sense::Maximize => o - self.tolerance,
            Sense::Minimize => o + self.tolerance,
        })
    }
}

impl RunConfig {
    pub fn design_space(&self) -> Result<DesignSpace, CliError> {
        let space = self.space.as_ref().ok_or_else(|| CliError::Config("missing key `space`".into()))?;
        match (&space.builtin, &space.dimensions) {
            (Some(name), None) => builtin_space(name, &self.problem),
            (None, Some(dims)) => DesignSpace::new(dims.clone()).map_err(|e| CliError::Config(format!("space: {e}"))),
            _ => Err(CliError::Config("space: give exactly one of `builtin` or `dimensions`".into())),
        }
    }

    pub fn max_iterations(&self) -> usize {
        self.budget / self.batch_size
    }

    pub fn sense(&self) -> Sense {
        self.problem.sense()
    }

    fn materialize(&mut self) {
        if self.space.is_none() {
            let builtin = match &self.problem {
                ProblemConfig::CosineMixture { .. } => Some("cosine-mixture"),
                ProblemConfig::External { mode: EvaluatorMode::EngineMetrics, .. } => Some("engine"),
                ProblemConfig::External { .. } => None,
            };
            self.space = builtin.map(|b| SpaceConfig { builtin: Some(b.to_string()), dimensions: None });
        }
        if self.epsilon.is_none() {
            self.epsilon = Some(self.problem.default_epsilon());
        }
        if let ProblemConfig::CosineMixture { .. } = self.problem {
            if self.summary.optimum.is_none() {
                self.summary.optimum = Some(COSINE_MIXTURE_OPTIMUM);
            }
            if self.summary.thresholds.is_empty() {
                self.summary.thresholds = vec![0.1, 0.15, 0.198];
            }
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, msg: &str| Err(CliError::Config(format!("`{key}`: {msg}")));
        if self.batch_size == 0 {
            return bad("batch_size", "must be positive");
        }
        if self.budget < self.batch_size {
            return bad("budget", "must be at least batch_size");
        }
        if self.trials == 0 {
            return bad("trials", "must be positive");
        }
        if !(self.epsilon.unwrap_or(0.0) >= 0.0) {
            return bad("epsilon", "must be non-negative");
        }
        if !(self.summary.tolerance >= 0.0) {
            return bad("summary.tolerance", "must be non-negative");
        }
        let space = self.design_space()?;
        if let ProblemConfig::CosineMixture { dim } = &self.problem {
            if *dim == 0 {
                return bad("problem.dim", "must be positive");
            }
            if space.len() != *dim {
                return bad("space", "dimension count differs from problem.dim");
            }
        }
        if let ProblemConfig::External { command, timeout_secs, .. } = &self.problem {
            let spec = activo_core::problems::EvaluatorSpec {
                command: command.clone(),
                workdir: PathBuf::new(),
                timeout_secs: *timeout_secs,
                mode: EvaluatorMode::Fitness,
            };
            spec.validate().map_err(|e| CliError::Config(format!("problem: {e}")))?;
        }
        let check = |key: &str, r: activo_core::Result<()>| r.map_err(|e| CliError::Config(format!("`{key}`: {e}")));
        match &self.optimizer {
            OptimizerConfig::Activo(a) => {
                check("optimizer", self.activo_config(a).validate())?;
            }
            OptimizerConfig::MicroGa(p) => {
                check("optimizer", p.validate())?;
                if self.budget < p.population {
                    return bad("budget", "must be at least the micro-GA population");
                }
            }
            OptimizerConfig::Pso(p) => {
                check("optimizer", p.validate())?;
                if self.budget < p.swarm {
                    return bad("budget", "must be at least the swarm size");
                }
            }
            OptimizerConfig::De(p) => {
                check("optimizer", p.validate())?;
                if self.budget < p.population {
                    return bad("budget", "must be at least the DE population");
                }
            }
        }
        Ok(())
    }

    pub fn activo_config(&self, a: &ActivoSettings) -> activo_core::ActivoConfig {
        activo_core::ActivoConfig {
            controller: activo_core::ControllerConfig {
                batch_size: self.batch_size,
                monitor_count: a.monitor_count,
                epsilon: self.epsilon.unwrap_or_else(|| self.problem.default_epsilon()),
                max_iterations: self.max_iterations(),
                sense: self.sense(),
                stop_on_convergence: a.stop_on_convergence,
            },
            sampler: a.sampler.clone(),
            weak: a.weak,
            network: a.network.clone(),
            committee_size: a.committee_size,
            surrogate_search: a.surrogate_search.clone(),
        }
    }

    /// Serialize with every default spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration is always representable as TOML")
    }
}

fn builtin_space(name: &str, problem: &ProblemConfig) -> Result<DesignSpace, CliError> {
    match name {
        "engine" => Ok(engine_design_space()),
        "cosine-mixture" => {
            let dim = match problem {
                ProblemConfig::CosineMixture { dim } => *dim,
                _ => 2,
            };
            Ok(CosineMixture::new(dim).space())
        }
        other => Err(CliError::Config(format!("space.builtin: unknown space `{other}`"))),
    }
}

/// Parse TOML text. Baseline populations default to `batch_size`.
pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let mut value: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    let batch = value.get("batch_size").and_then(toml::Value::as_integer);
    if let (Some(batch), Some(toml::Value::Table(opt))) = (batch, value.get_mut("optimizer")) {
        let key = match opt.get("name").and_then(toml::Value::as_str) {
            Some("micro-ga") | Some("de") => Some("population"),
            Some("pso") => Some("swarm"),
            _ => None,
        };
        if let Some(key) = key {
            opt.entry(key).or_insert(toml::Value::Integer(batch));
        }
    }
    let mut cfg: RunConfig = value.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    cfg.materialize();
    cfg.validate()?;
    Ok(cfg)
}

/// Read, default and validate a configuration file. Relative paths inside
/// it are taken relative to the file's directory and made absolute.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config_str(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let base = std::path::absolute(path.parent().unwrap_or(Path::new(".")))?;
    cfg.output_dir = base.join(&cfg.output_dir);
    if let ProblemConfig::External { workdir: Some(w), .. } = &mut cfg.problem {
        *w = base.join(&*w);
    }
    Ok(cfg)
}
