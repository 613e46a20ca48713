//! Per-evaluation history table.
//!
//! Header: `iteration,eval_index,source,<dimension names>,fitness,best_so_far,omega,phase`.
//! `eval_index` counts evaluations from 0 across the whole run;
//! `best_so_far` is the running best after that evaluation. `omega` and
//! `phase` are blank where the optimizer has none.

use std::path::Path;

use activo_core::{RunHistory, Source};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub iteration: usize,
    pub eval_index: usize,
    pub source: Source,
    pub coords: Vec<f64>,
    pub fitness: f64,
    pub best_so_far: f64,
    pub omega: Option<f64>,
    pub phase: Option<String>,
}

pub fn header(dim_names: &[String]) -> Vec<String> {
    let mut h = vec!["iteration".to_string(), "eval_index".into(), "source".into()];
    h.extend(dim_names.iter().cloned());
    h.extend(["fitness", "best_so_far", "omega", "phase"].map(String::from));
    h
}

pub fn emit_history(history: &RunHistory, path: &Path) -> Result<(), CliError> {
    let names: Vec<String> = history.space.names().map(str::to_string).collect();
    let tmp = path.with_extension("csv.tmp");
    let mut w = csv::Writer::from_path(&tmp)?;
    w.write_record(header(&names))?;
    let mut best = history.sense.worst::<f64>();
    let mut index = 0;
    for rec in &history.iterations {
        let omega = rec.omega.map(|o| o.to_string()).unwrap_or_default();
        let phase = rec.phase.map(|p| p.as_str()).unwrap_or_default();
        for d in &rec.designs {
            best = history.sense.best_of(best, d.fitness);
            let mut row = vec![rec.iteration.to_string(), index.to_string(), d.source.as_str().to_string()];
            row.extend(d.point.coords.iter().map(f64::to_string));
            row.extend([d.fitness.to_string(), best.to_string(), omega.clone(), phase.to_string()]);
            w.write_record(&row)?;
            index += 1;
        }
    }
    w.flush()?;
    drop(w);
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn parse_history(path: &Path) -> Result<Vec<HistoryRow>, CliError> {
    let bad = |message: String| CliError::Malformed { path: path.display().to_string(), message };
    let mut rdr = csv::Reader::from_path(path)?;
    let head: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let n = head.len();
    if n < 7 || head[..3] != ["iteration", "eval_index", "source"] || head[n - 4..] != ["fitness", "best_so_far", "omega", "phase"] {
        return Err(bad(format!("unexpected header {head:?}")));
    }
    let dim = n - 7;
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, CliError> {
            rec[i].parse().map_err(|_| bad(format!("row {line}: bad number `{}` in `{}`", &rec[i], head[i])))
        };
        let int = |i: usize| -> Result<usize, CliError> {
            rec[i].parse().map_err(|_| bad(format!("row {line}: bad integer `{}` in `{}`", &rec[i], head[i])))
        };
        rows.push(HistoryRow {
            iteration: int(0)?,
            eval_index: int(1)?,
            source: Source::parse(&rec[2]).ok_or_else(|| bad(format!("row {line}: unknown source `{}`", &rec[2])))?,
            coords: (3..3 + dim).map(num).collect::<Result<_, _>>()?,
            fitness: num(n - 4)?,
            best_so_far: num(n - 3)?,
            omega: if rec[n - 2].is_empty() { None } else { Some(num(n - 2)?) },
            phase: if rec[n - 1].is_empty() { None } else { Some(rec[n - 1].to_string()) },
        });
    }
    Ok(rows)
}
