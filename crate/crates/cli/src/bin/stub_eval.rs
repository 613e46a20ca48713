//! Stand-in simulator speaking the request/result file protocol.
//!
//! `activo-stub-eval sum|cosine|engine <requests.csv> <results.csv>`

use std::path::PathBuf;
use std::process::ExitCode;

use activo_core::problems::{cosine_mixture, AnalyticEngine};
use activo_core::space::DesignPoint;
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// fitness = sum of coordinates
    Sum,
    /// fitness = cosine mixture
    Cosine,
    /// engine metrics from the analytic engine model
    Engine,
}

#[derive(Parser)]
#[command(name = "activo-stub-eval", about = "Analytic stand-in for an external simulator")]
struct Args {
    mode: Mode,
    requests: PathBuf,
    results: PathBuf,
    /// Sleep this many seconds before answering.
    #[arg(long, default_value_t = 0.0)]
    sleep: f64,
}

fn run(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    if args.sleep > 0.0 {
        std::thread::sleep(std::time::Duration::from_secs_f64(args.sleep));
    }
    let mut rdr = csv::Reader::from_path(&args.requests)?;
    let mut w = csv::Writer::from_path(&args.results)?;
    match args.mode {
        Mode::Engine => w.write_record(["id", "isfc", "p_max", "mprr", "m_soot", "m_nox"])?,
        _ => w.write_record(["id", "fitness"])?,
    }
    for row in rdr.records() {
        let row = row?;
        let id = row[0].to_string();
        let coords = row.iter().skip(1).map(str::parse::<f64>).collect::<Result<Vec<_>, _>>()?;
        match args.mode {
            Mode::Sum => w.write_record([id, coords.iter().sum::<f64>().to_string()])?,
            Mode::Cosine => w.write_record([id, cosine_mixture(&coords)?.to_string()])?,
            Mode::Engine => {
                let m = AnalyticEngine.metrics(&DesignPoint::new(coords))?;
                w.write_record([id, m.isfc.to_string(), m.p_max.to_string(), m.mprr.to_string(), m.m_soot.to_string(), m.m_nox.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("activo-stub-eval: {e}");
            ExitCode::FAILURE
        }
    }
}
