//! One trial: optimizer state, evaluator, and the files written after every
//! iteration (`history.csv`, `run.json`, `checkpoint.json`).

use std::fs;
use std::path::{Path, PathBuf};

use activo_core::dataset::Sense;
use activo_core::problems::{CosineMixture, EvaluatorSpec, ExternalEvaluator};
use activo_core::DesignPoint;
use activo_core::{Activo, BatchEvaluator, DeOptimizer, MicroGa, Optimizer, Pso, RngStream, RunHistory};
use serde::{Deserialize, Serialize};

use crate::config::{OptimizerConfig, ProblemConfig, RunConfig};
use crate::error::CliError;
use crate::history_csv::emit_history;

pub const HISTORY_FILE: &str = "history.csv";
pub const RECORD_FILE: &str = "run.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerState {
    Activo(Activo),
    MicroGa(MicroGa),
    Pso(Pso),
    De(DeOptimizer),
}

impl OptimizerState {
    pub fn new(cfg: &RunConfig, seed: u64) -> Result<Self, CliError> {
        let space = cfg.design_space()?;
        let rng = RngStream::new(seed, 0);
        let sense = cfg.sense();
        Ok(match &cfg.optimizer {
            OptimizerConfig::Activo(a) => OptimizerState::Activo(Activo::new(space, cfg.activo_config(a), rng)?),
            OptimizerConfig::MicroGa(p) => OptimizerState::MicroGa(MicroGa::new(space, p.clone(), cfg.budget, rng, sense)?),
            OptimizerConfig::Pso(p) => OptimizerState::Pso(Pso::new(space, p.clone(), cfg.budget, rng, sense)?),
            OptimizerConfig::De(p) => OptimizerState::De(DeOptimizer::new(space, p.clone(), cfg.budget, rng, sense)?),
        })
    }

    pub fn optimizer(&mut self) -> &mut dyn Optimizer<f64> {
        match self {
            OptimizerState::Activo(o) => o,
            OptimizerState::MicroGa(o) => o,
            OptimizerState::Pso(o) => o,
            OptimizerState::De(o) => o,
        }
    }

    pub fn is_finished(&self) -> bool {
        match self {
            OptimizerState::Activo(o) => o.is_finished(),
            OptimizerState::MicroGa(o) => o.is_finished(),
            OptimizerState::Pso(o) => o.is_finished(),
            OptimizerState::De(o) => o.is_finished(),
        }
    }

    pub fn history(&self) -> &RunHistory {
        match self {
            OptimizerState::Activo(o) => o.history(),
            OptimizerState::MicroGa(o) => o.history(),
            OptimizerState::Pso(o) => o.history(),
            OptimizerState::De(o) => o.history(),
        }
    }
}

/// Everything needed to continue a trial exactly where it stopped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub trial: usize,
    pub seed: u64,
    pub state: OptimizerState,
}

/// Per-trial outcome written to `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub optimizer: String,
    pub finished: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub best: Option<f64>,
    pub converged: bool,
    pub convergence_iteration: Option<usize>,
    pub convergence_reason: Option<String>,
    pub reached_stop_at: bool,
    pub error: Option<String>,
}

enum TrialEvaluator {
    Cosine(CosineMixture),
    External(ExternalEvaluator<f64>),
}

impl BatchEvaluator<f64> for TrialEvaluator {
    fn evaluate(&mut self, batch: &[DesignPoint], iteration: usize) -> activo_core::Result<Vec<f64>> {
        match self {
            TrialEvaluator::Cosine(e) => e.evaluate(batch, iteration),
            TrialEvaluator::External(e) => e.evaluate(batch, iteration),
        }
    }
}

pub fn trial_dir(output: &Path, trial: usize) -> PathBuf {
    output.join(format!("trial_{trial:03}"))
}

fn evaluator(cfg: &RunConfig, trial: usize) -> Result<TrialEvaluator, CliError> {
    Ok(match &cfg.problem {
        ProblemConfig::CosineMixture { dim } => TrialEvaluator::Cosine(CosineMixture::new(*dim)),
        ProblemConfig::External { command, workdir, timeout_secs, mode, .. } => {
            let base = workdir.clone().unwrap_or_else(|| cfg.output_dir.join("evaluations"));
            TrialEvaluator::External(ExternalEvaluator {
                spec: EvaluatorSpec {
                    command: command.clone(),
                    workdir: base.join(format!("trial_{trial:03}")),
                    timeout_secs: *timeout_secs,
                    mode: *mode,
                },
                space: cfg.design_space()?,
            })
        }
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn reached(sense: Sense, best: Option<f64>, target: Option<f64>) -> bool {
    matches!((best, target), (Some(b), Some(t)) if sense.reaches(b, t))
}

/// Runs a trial from a fresh or restored state.
pub struct TrialRunner {
    pub checkpoint: Checkpoint,
    dir: PathBuf,
}

impl TrialRunner {
    pub fn fresh(cfg: &RunConfig, trial: usize) -> Result<Self, CliError> {
        let seed = cfg.base_seed.wrapping_add(trial as u64);
        let state = OptimizerState::new(cfg, seed)?;
        let dir = trial_dir(&cfg.output_dir, trial);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        Ok(Self { checkpoint: Checkpoint { config: cfg.clone(), trial, seed, state }, dir })
    }

    /// Restore from a checkpoint file; `output` overrides the recorded
    /// campaign directory.
    pub fn restore(path: &Path, output: Option<&Path>) -> Result<Self, CliError> {
        let mut checkpoint: Checkpoint = serde_json::from_slice(&fs::read(path)?)?;
        let output = match output {
            Some(o) => o.to_path_buf(),
            None => path
                .parent()
                .and_then(Path::parent)
                .map(Path::to_path_buf)
                .unwrap_or_else(|| checkpoint.config.output_dir.clone()),
        };
        checkpoint.config.output_dir = output;
        let dir = trial_dir(&checkpoint.config.output_dir, checkpoint.trial);
        Ok(Self { checkpoint, dir })
    }

    fn is_done(&self) -> bool {
        let cfg = &self.checkpoint.config;
        let hist = self.checkpoint.state.history();
        reached(cfg.sense(), hist.best(), cfg.stop_at) || self.checkpoint.state.is_finished()
    }

    fn record(&self, error: Option<String>) -> TrialRecord {
        let cfg = &self.checkpoint.config;
        let h = self.checkpoint.state.history();
        TrialRecord {
            trial: self.checkpoint.trial,
            seed: self.checkpoint.seed,
            optimizer: cfg.optimizer.name().to_string(),
            finished: error.is_none() && self.is_done(),
            iterations: h.iterations.len(),
            evaluations: h.evaluations(),
            best: h.best(),
            converged: h.converged,
            convergence_iteration: h.convergence_iteration,
            convergence_reason: h.convergence_reason.clone(),
            reached_stop_at: reached(cfg.sense(), h.best(), cfg.stop_at),
            error,
        }
    }

    fn persist(&self, error: Option<String>) -> Result<TrialRecord, CliError> {
        emit_history(self.checkpoint.state.history(), &self.dir.join(HISTORY_FILE))?;
        write_atomic(&self.dir.join(CHECKPOINT_FILE), &serde_json::to_vec(&self.checkpoint)?)?;
        let record = self.record(error);
        write_atomic(&self.dir.join(RECORD_FILE), &serde_json::to_vec_pretty(&record)?)?;
        Ok(record)
    }

    /// Step until the trial finishes or `stop_after` more iterations ran.
    /// Evaluation failures are recorded in `run.json`; the checkpoint keeps
    /// the last completed iteration.
    pub fn run(mut self, stop_after: Option<usize>) -> Result<TrialRecord, CliError> {
        fs::create_dir_all(&self.dir)?;
        let mut eval = evaluator(&self.checkpoint.config, self.checkpoint.trial)?;
        let mut steps = 0;
        if self.checkpoint.state.history().iterations.is_empty() {
            self.persist(None)?;
        }
        while !self.is_done() && stop_after.is_none_or(|s| steps < s) {
            if let Err(e) = self.checkpoint.state.optimizer().step(&mut eval) {
                return self.persist(Some(e.to_string()));
            }
            steps += 1;
            self.persist(None)?;
        }
        self.persist(None)
    }
}
