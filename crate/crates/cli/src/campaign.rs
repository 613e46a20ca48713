//! Repeated independent trials of one configuration.
//!
//! Layout of the output directory:
//!
//! ```text
//! config.toml            resolved configuration
//! summary.json           statistics recomputed from the trial files
//! trial_000/history.csv  one row per evaluation
//! trial_000/run.json     trial outcome
//! trial_000/checkpoint.json
//! ```
//!
//! Trial `t` uses seed `base_seed + t`.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::summary::{summarize_with, write_summary, Summary, CONFIG_FILE};
use crate::trial::{trial_dir, TrialRecord, TrialRunner, CHECKPOINT_FILE, RECORD_FILE};

#[derive(Debug, Clone, Default)]
pub struct CampaignOptions {
    /// Worker threads; all available cores when absent.
    pub threads: Option<usize>,
    /// Leave every trial after this many iterations (for later resumption).
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub summary: Summary,
    pub records: Vec<TrialRecord>,
}

impl CampaignOutcome {
    /// Map the outcome to an error carrying the right exit code.
    pub fn check(&self, cfg: &RunConfig) -> Result<(), CliError> {
        let failed: Vec<&TrialRecord> = self.records.iter().filter(|r| r.error.is_some()).collect();
        if let Some(first) = failed.first() {
            return Err(CliError::TrialsFailed {
                failed: failed.len(),
                total: self.records.len(),
                first: format!("trial {}: {}", first.trial, first.error.as_deref().unwrap_or_default()),
            });
        }
        let unfinished = self.records.iter().any(|r| !r.finished);
        let unconverged = self.summary.unconverged();
        if cfg.unconverged_is_error && !unfinished && unconverged > 0 {
            return Err(CliError::Unconverged(unconverged));
        }
        Ok(())
    }
}

fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn finish(cfg: &RunConfig, records: Vec<Result<TrialRecord, CliError>>) -> Result<CampaignOutcome, CliError> {
    let records = records.into_iter().collect::<Result<Vec<_>, _>>()?;
    let summary = summarize_with(cfg, &cfg.output_dir)?;
    write_summary(&summary, &cfg.output_dir)?;
    Ok(CampaignOutcome { summary, records })
}

/// Run every trial from scratch.
pub fn run_campaign(cfg: &RunConfig, opts: &CampaignOptions) -> Result<CampaignOutcome, CliError> {
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join(CONFIG_FILE), cfg.to_toml())?;
    let records = with_pool(opts.threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| TrialRunner::fresh(cfg, t)?.run(opts.stop_after))
            .collect::<Vec<_>>()
    })?;
    finish(cfg, records)
}

/// Continue a campaign directory: finished trials are kept, interrupted
/// ones resume from their checkpoint, missing ones start fresh.
pub fn resume_campaign(dir: &Path, opts: &CampaignOptions) -> Result<(RunConfig, CampaignOutcome), CliError> {
    let mut cfg = crate::config::parse_config(&dir.join(CONFIG_FILE))?;
    cfg.output_dir = dir.to_path_buf();
    let records = with_pool(opts.threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let tdir = trial_dir(dir, t);
                let record = tdir.join(RECORD_FILE);
                if record.exists() {
                    let rec: TrialRecord = serde_json::from_slice(&fs::read(&record)?)?;
                    if rec.finished {
                        return Ok(rec);
                    }
                }
                let checkpoint = tdir.join(CHECKPOINT_FILE);
                if checkpoint.exists() {
                    TrialRunner::restore(&checkpoint, Some(dir))?.run(opts.stop_after)
                } else {
                    TrialRunner::fresh(&cfg, t)?.run(opts.stop_after)
                }
            })
            .collect::<Vec<_>>()
    })?;
    let outcome = finish(&cfg, records)?;
    Ok((cfg, outcome))
}

/// Continue one trial from its checkpoint file and refresh the campaign
/// summary.
pub fn resume_checkpoint(path: &Path, opts: &CampaignOptions) -> Result<(RunConfig, CampaignOutcome), CliError> {
    let runner = TrialRunner::restore(path, None)?;
    let cfg = runner.checkpoint.config.clone();
    let dir = cfg.output_dir.clone();
    let trial = runner.checkpoint.trial;
    let record = with_pool(opts.threads, || runner.run(opts.stop_after))??;
    let mut records = Vec::new();
    for t in 0..cfg.trials {
        if t == trial {
            records.push(Ok(record.clone()));
            continue;
        }
        let path = trial_dir(&dir, t).join(RECORD_FILE);
        records.push(fs::read(&path).map_err(CliError::from).and_then(|b| Ok(serde_json::from_slice(&b)?)));
    }
    let outcome = finish(&cfg, records)?;
    Ok((cfg, outcome))
}
