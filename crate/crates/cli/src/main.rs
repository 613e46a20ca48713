use std::path::PathBuf;
use std::process::ExitCode;

use activo_cli::summary::write_summary;
use activo_cli::{
    exit_code, parse_config, resume_campaign, resume_checkpoint, run_campaign, summarize_dir, CampaignOptions, CliError,
    Summary,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "activo", version, about = "Ensemble-surrogate active optimization campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign described by a TOML configuration.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Continue a campaign directory or a single trial checkpoint.
    Resume {
        path: PathBuf,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Recompute summary.json from a campaign directory.
    Summarize { dir: PathBuf },
}

#[derive(Args)]
struct ExecArgs {
    /// Worker threads for concurrent trials.
    #[arg(long)]
    threads: Option<usize>,
    /// Stop each trial after this many further iterations.
    #[arg(long)]
    stop_after: Option<usize>,
}

impl ExecArgs {
    fn options(&self) -> CampaignOptions {
        CampaignOptions { threads: self.threads, stop_after: self.stop_after }
    }
}

fn report(summary: &Summary) {
    println!("optimizer {}: {} trials, {} failed", summary.optimizer, summary.trials, summary.failed_trials);
    if let (Some(t), Some(n)) = (summary.success_threshold, summary.success_count) {
        println!("reached {t}: {n}/{}", summary.trials);
    }
    for s in &summary.evaluations_to_threshold {
        let median = s.median.map_or("-".to_string(), |m| m.to_string());
        println!("threshold {}: reached {}/{}, median evaluations {median}", s.threshold, s.reached, summary.trials);
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, seed, trials, output, exec } => {
            let mut cfg = parse_config(&config)?;
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(t) = trials {
                if t == 0 {
                    return Err(CliError::Config("`--trials` must be positive".into()));
                }
                cfg.trials = t;
            }
            if let Some(o) = output {
                cfg.output_dir = std::path::absolute(o)?;
            }
            let outcome = run_campaign(&cfg, &exec.options())?;
            report(&outcome.summary);
            outcome.check(&cfg)
        }
        Command::Resume { path, exec } => {
            let (cfg, outcome) = if path.is_dir() {
                resume_campaign(&path, &exec.options())?
            } else {
                resume_checkpoint(&path, &exec.options())?
            };
            report(&outcome.summary);
            outcome.check(&cfg)
        }
        Command::Summarize { dir } => {
            let summary = summarize_dir(&dir)?;
            write_summary(&summary, &dir)?;
            report(&summary);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::from(exit_code::SUCCESS as u8),
        Err(e) => {
            eprintln!("activo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
