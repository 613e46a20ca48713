//! Campaign statistics, computed only from the files a campaign writes.

use std::fs;
use std::path::Path;

use activo_core::Sense;
use serde::{Deserialize, Serialize};

use crate::config::{parse_config, RunConfig};
use crate::error::CliError;
use crate::history_csv::parse_history;
use crate::trial::{trial_dir, TrialRecord, HISTORY_FILE, RECORD_FILE};

pub const CONFIG_FILE: &str = "config.toml";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStats {
    pub threshold: f64,
    /// Evaluations each trial needed to reach the threshold.
    pub evaluations: Vec<Option<usize>>,
    pub reached: usize,
    /// Median over all trials, counting misses as never; absent when more
    /// than half missed.
    pub median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    pub evaluations: usize,
    pub best: Option<f64>,
    /// Convergence iteration declared by the optimizer's own criterion.
    pub convergence_iteration: Option<usize>,
    /// First evaluation at which the best came within tolerance of the
    /// optimum.
    pub success_evaluation: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub optimizer: String,
    pub trials: usize,
    pub budget: usize,
    pub batch_size: usize,
    pub failed_trials: usize,
    pub success_threshold: Option<f64>,
    pub success_count: Option<usize>,
    /// Mean running best after each evaluation over the trials without
    /// errors; a trial that stopped early holds its final best.
    pub mean_best: Vec<f64>,
    pub evaluations_to_threshold: Vec<ThresholdStats>,
    /// Fraction of trials within tolerance of the optimum after each
    /// evaluation.
    pub convergence_probability: Option<Vec<f64>>,
    pub per_trial: Vec<TrialSummary>,
}

impl Summary {
    /// Trials that neither converged by their own criterion nor reached the
    /// success threshold (failed trials excluded).
    pub fn unconverged(&self) -> usize {
        self.per_trial
            .iter()
            .filter(|t| t.error.is_none() && t.convergence_iteration.is_none() && t.success_evaluation.is_none())
            .count()
    }
}

pub(crate) fn median(mut values: Vec<Option<usize>>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by_key(|v| v.unwrap_or(usize::MAX));
    let n = values.len();
    let pick = |i: usize| values[i].map(|v| v as f64);
    if n % 2 == 1 {
        pick(n / 2)
    } else {
        Some((pick(n / 2 - 1)? + pick(n / 2)?) / 2.0)
    }
}

fn first_reaching(best: &[f64], sense: Sense, threshold: f64) -> Option<usize> {
    best.iter().position(|&b| sense.reaches(b, threshold)).map(|i| i + 1)
}

/// Read a campaign directory back and compute its summary.
pub fn summarize_dir(dir: &Path) -> Result<Summary, CliError> {
    let cfg = parse_config(&dir.join(CONFIG_FILE))?;
    summarize_with(&cfg, dir)
}

pub(crate) fn summarize_with(cfg: &RunConfig, dir: &Path) -> Result<Summary, CliError> {
    let sense = cfg.sense();
    let success = cfg.summary.success_threshold(sense);
    let mut per_trial = Vec::new();
    let mut curves: Vec<Vec<f64>> = Vec::new();
    for t in 0..cfg.trials {
        let tdir = trial_dir(dir, t);
        let record: TrialRecord = serde_json::from_slice(&fs::read(tdir.join(RECORD_FILE))?)?;
        let rows = parse_history(&tdir.join(HISTORY_FILE))?;
        let best: Vec<f64> = rows.iter().map(|r| r.best_so_far).collect();
        if record.error.is_none() {
            curves.push(best.clone());
        }
        per_trial.push((
            TrialSummary {
                trial: t,
                seed: record.seed,
                evaluations: rows.len(),
                best: best.last().copied(),
                convergence_iteration: record.convergence_iteration,
                success_evaluation: success.and_then(|s| first_reaching(&best, sense, s)),
                error: record.error.clone(),
            },
            best,
        ));
    }

    let len = curves.iter().map(Vec::len).max().unwrap_or(0);
    let at = |c: &Vec<f64>, e: usize| c.get(e).or(c.last()).copied();
    let mean_best = (0..len)
        .map(|e| {
            let vals: Vec<f64> = curves.iter().filter_map(|c| at(c, e)).collect();
            vals.iter().sum::<f64>() / vals.len().max(1) as f64
        })
        .collect();
    let convergence_probability = success.map(|s| {
        (0..len)
            .map(|e| {
                let hit = per_trial.iter().filter(|(_, b)| at(b, e).is_some_and(|v| sense.reaches(v, s))).count();
                hit as f64 / cfg.trials as f64
            })
            .collect()
    });
    let evaluations_to_threshold = cfg
        .summary
        .thresholds
        .iter()
        .map(|&threshold| {
            let evaluations: Vec<Option<usize>> =
                per_trial.iter().map(|(_, b)| first_reaching(b, sense, threshold)).collect();
            ThresholdStats {
                threshold,
                reached: evaluations.iter().flatten().count(),
                median: median(evaluations.clone()),
                evaluations,
            }
        })
        .collect();
    let per_trial: Vec<TrialSummary> = per_trial.into_iter().map(|(s, _)| s).collect();
    Ok(Summary {
        optimizer: cfg.optimizer.name().to_string(),
        trials: cfg.trials,
        budget: cfg.budget,
        batch_size: cfg.batch_size,
        failed_trials: per_trial.iter().filter(|t| t.error.is_some()).count(),
        success_threshold: success,
        success_count: success.map(|_| per_trial.iter().filter(|t| t.success_evaluation.is_some()).count()),
        mean_best,
        evaluations_to_threshold,
        convergence_probability,
        per_trial,
    })
}

pub fn write_summary(summary: &Summary, dir: &Path) -> Result<(), CliError> {
    fs::write(dir.join(SUMMARY_FILE), serde_json::to_vec_pretty(summary)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::median;

    #[test]
    fn median_counts_misses_as_never() {
        assert_eq!(median(vec![Some(3), Some(1), Some(2)]), Some(2.0));
        assert_eq!(median(vec![Some(3), None, Some(1)]), Some(3.0));
        assert_eq!(median(vec![None, None, Some(1)]), None);
        assert_eq!(median(vec![Some(4), Some(2)]), Some(3.0));
        assert_eq!(median(vec![]), None);
    }
}
