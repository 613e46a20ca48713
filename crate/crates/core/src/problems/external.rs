//! File-based batch protocol for driving an external simulator.
//!
//! For iteration `i` the evaluator writes `requests_<i>.csv` (`id,<dim…>`,
//! physical units, 0-based ids) into the working directory, runs the
//! configured command once with `{in}`/`{out}` replaced by the absolute
//! request and result paths, and reads `results_<i>.csv` back: either
//! `id,fitness` or `id,isfc,p_max,mprr,m_soot,m_nox`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::engine::{engine_merit, EngineMetrics};
use crate::error::{Error, Result};
use crate::evaluator::BatchEvaluator;
use crate::scalar::Scalar;
use crate::space::{DesignPoint, DesignSpace};

pub const IN_PLACEHOLDER: &str = "{in}";
pub const OUT_PLACEHOLDER: &str = "{out}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluatorMode {
    /// Result rows carry the fitness directly.
    Fitness,
    /// Result rows carry engine metrics; fitness is their merit.
    EngineMetrics,
}

impl EvaluatorMode {
    fn header(self) -> &'static [&'static str] {
        match self {
            EvaluatorMode::Fitness => &["id", "fitness"],
            EvaluatorMode::EngineMetrics => &["id", "isfc", "p_max", "mprr", "m_soot", "m_nox"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluatorSpec {
    /// Program followed by its arguments; must mention `{in}` and `{out}`.
    pub command: Vec<String>,
    pub workdir: PathBuf,
    pub timeout_secs: f64,
    pub mode: EvaluatorMode,
}

impl EvaluatorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.command.is_empty() {
            return Err(Error::domain("evaluator command is empty"));
        }
        for ph in [IN_PLACEHOLDER, OUT_PLACEHOLDER] {
            if !self.command.iter().any(|a| a.contains(ph)) {
                return Err(Error::domain(format!("evaluator command must contain the {ph} placeholder")));
            }
        }
        if !(self.timeout_secs > 0.0) {
            return Err(Error::domain("evaluator timeout must be positive"));
        }
        Ok(())
    }

    pub fn request_path(&self, iteration: usize) -> PathBuf {
        self.workdir.join(format!("requests_{iteration}.csv"))
    }

    pub fn result_path(&self, iteration: usize) -> PathBuf {
        self.workdir.join(format!("results_{iteration}.csv"))
    }
}

/// Evaluate one batch through the external command.
pub fn external_evaluate<T: Scalar>(
    batch: &[DesignPoint<T>],
    space: &DesignSpace<T>,
    spec: &EvaluatorSpec,
    iteration: usize,
) -> Result<Vec<T>> {
    spec.validate()?;
    if batch.is_empty() {
        return Err(Error::domain("empty evaluation batch"));
    }
    fs::create_dir_all(&spec.workdir)?;
    let workdir = fs::canonicalize(&spec.workdir)?;
    let request = workdir.join(format!("requests_{iteration}.csv"));
    let result = workdir.join(format!("results_{iteration}.csv"));
    write_requests(&request, batch, space)?;
    if result.exists() {
        fs::remove_file(&result)?;
    }
    run_command(spec, &workdir, &request, &result, iteration)?;
    read_results(&result, batch.len(), spec.mode, iteration)
}

fn write_requests<T: Scalar>(path: &Path, batch: &[DesignPoint<T>], space: &DesignSpace<T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend(space.names().map(str::to_string));
    w.write_record(&header)?;
    for (id, p) in batch.iter().enumerate() {
        if p.coords.len() != space.len() {
            return Err(Error::domain(format!("design {id} has wrong dimension")));
        }
        let mut row = vec![id.to_string()];
        row.extend(p.coords.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn run_command(spec: &EvaluatorSpec, workdir: &Path, request: &Path, result: &Path, iteration: usize) -> Result<()> {
    let subst = |a: &String| {
        a.replace(IN_PLACEHOLDER, &request.to_string_lossy()).replace(OUT_PLACEHOLDER, &result.to_string_lossy())
    };
    let args: Vec<String> = spec.command.iter().map(subst).collect();
    let log = File::create(workdir.join(format!("evaluator_{iteration}.log")))?;
    let eval_err = |message: String| Error::Evaluation { iteration, message };
    let mut child = Command::new(&args[0])
        .args(&args[1..])
        .current_dir(workdir)
        .stdin(Stdio::null())
        .stdout(log.try_clone()?)
        .stderr(log)
        .spawn()
        .map_err(|e| eval_err(format!("cannot start `{}`: {e}", args[0])))?;
    let status = match child.wait_timeout(Duration::from_secs_f64(spec.timeout_secs))? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(eval_err(format!("command timed out after {} s", spec.timeout_secs)));
        }
    };
    if !status.success() {
        return Err(eval_err(format!("command exited with {status}")));
    }
    Ok(())
}

fn read_results<T: Scalar>(path: &Path, expected: usize, mode: EvaluatorMode, iteration: usize) -> Result<Vec<T>> {
    let proto = |message: String| Error::Protocol { iteration, message };
    if !path.exists() {
        return Err(proto(format!("result file {} was not written", path.display())));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != mode.header() {
        return Err(proto(format!("result header {:?}, expected {:?}", header, mode.header())));
    }
    let mut values: BTreeMap<usize, T> = BTreeMap::new();
    let mut duplicates = Vec::new();
    let mut unknown = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let id: usize = row[0].parse().map_err(|_| proto(format!("malformed id `{}`", &row[0])))?;
        let num = |i: usize| -> Result<f64> {
            row[i].parse::<f64>().map_err(|_| proto(format!("id {id}: malformed number `{}`", &row[i])))
        };
        let fitness = match mode {
            EvaluatorMode::Fitness => num(1)?,
            EvaluatorMode::EngineMetrics => {
                let m = EngineMetrics { isfc: num(1)?, p_max: num(2)?, mprr: num(3)?, m_soot: num(4)?, m_nox: num(5)? };
                engine_merit(&m).map_err(|e| proto(format!("id {id}: {e}")))?
            }
        };
        if !fitness.is_finite() {
            return Err(proto(format!("id {id}: non-finite fitness {fitness}")));
        }
        if id >= expected {
            unknown.push(id);
        } else if values.insert(id, T::lit(fitness)).is_some() {
            duplicates.push(id);
        }
    }
    let missing: Vec<usize> = (0..expected).filter(|i| !values.contains_key(i)).collect();
    if !missing.is_empty() || !duplicates.is_empty() || !unknown.is_empty() {
        return Err(proto(format!(
            "result ids do not match the request: missing {missing:?}, duplicated {duplicates:?}, unexpected {unknown:?}"
        )));
    }
    Ok(values.into_values().collect())
}

/// [`BatchEvaluator`] backed by [`external_evaluate`].
#[derive(Debug, Clone)]
pub struct ExternalEvaluator<T: Scalar> {
    pub spec: EvaluatorSpec,
    pub space: DesignSpace<T>,
}

impl<T: Scalar> BatchEvaluator<T> for ExternalEvaluator<T> {
    fn evaluate(&mut self, batch: &[DesignPoint<T>], iteration: usize) -> Result<Vec<T>> {
        external_evaluate(batch, &self.space, &self.spec, iteration)
    }
}
