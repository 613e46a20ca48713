//! Evaluated designs and the append-only dataset the learners train on.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::{DesignPoint, DesignSpace};

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    #[default]
    Maximize,
    Minimize,
}

impl Sense {
    /// True when `a` is strictly better than `b`.
    #[inline]
    pub fn better<T: Scalar>(self, a: T, b: T) -> bool {
        match self {
            Sense::Maximize => a > b,
            Sense::Minimize => a < b,
        }
    }

    /// The better of two values (`a` on ties).
    #[inline]
    pub fn best_of<T: Scalar>(self, a: T, b: T) -> T {
        if self.better(b, a) {
            b
        } else {
            a
        }
    }

    /// Worst possible value in this sense.
    pub fn worst<T: Scalar>(self) -> T {
        match self {
            Sense::Maximize => T::neg_infinity(),
            Sense::Minimize => T::infinity(),
        }
    }

    /// True when `value` reaches `threshold` (>= for maximize, <= for minimize).
    pub fn reaches<T: Scalar>(self, value: T, threshold: T) -> bool {
        match self {
            Sense::Maximize => value >= threshold,
            Sense::Minimize => value <= threshold,
        }
    }
}

/// Which mechanism proposed a design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// Uniform random batch of iteration 0.
    Initial,
    /// Weak-learner nominee selection.
    Weak,
    /// Optimum of the strong-learner surface.
    Strong,
    /// Offspring of a baseline population optimizer.
    Evolved,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Initial => "initial",
            Source::Weak => "weak",
            Source::Strong => "strong",
            Source::Evolved => "evolved",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "initial" => Source::Initial,
            "weak" => Source::Weak,
            "strong" => Source::Strong,
            "evolved" => Source::Evolved,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EvaluatedDesign<T: Scalar> {
    pub point: DesignPoint<T>,
    pub fitness: T,
    pub iteration: usize,
    pub source: Source,
}

impl<T: Scalar> EvaluatedDesign<T> {
    /// Rejects non-finite fitness.
    pub fn new(point: DesignPoint<T>, fitness: T, iteration: usize, source: Source) -> Result<Self> {
        if !fitness.is_finite() {
            return Err(Error::domain(format!(
                "non-finite fitness {fitness} at iteration {iteration}"
            )));
        }
        Ok(Self { point, fitness, iteration, source })
    }
}

/// Append-only record of every evaluation of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Dataset<T: Scalar> {
    space: DesignSpace<T>,
    sense: Sense,
    records: Vec<EvaluatedDesign<T>>,
    /// Normalized inputs, kept in step with `records`.
    unit: Vec<Vec<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(space: DesignSpace<T>, sense: Sense) -> Self {
        Self { space, sense, records: Vec::new(), unit: Vec::new() }
    }

    pub fn push(&mut self, record: EvaluatedDesign<T>) -> Result<()> {
        let u = self.space.normalize(&record.point)?;
        if !record.fitness.is_finite() {
            return Err(Error::domain("non-finite fitness"));
        }
        self.records.push(record);
        self.unit.push(u);
        Ok(())
    }

    pub fn space(&self) -> &DesignSpace<T> {
        &self.space
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn records(&self) -> &[EvaluatedDesign<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Normalized inputs, one per record.
    pub fn unit_inputs(&self) -> &[Vec<T>] {
        &self.unit
    }

    pub fn fitness(&self) -> Vec<T> {
        self.records.iter().map(|r| r.fitness).collect()
    }

    pub fn best(&self) -> Option<&EvaluatedDesign<T>> {
        let mut best: Option<&EvaluatedDesign<T>> = None;
        for r in &self.records {
            if best.is_none_or(|b| self.sense.better(r.fitness, b.fitness)) {
                best = Some(r);
            }
        }
        best
    }

    /// Running best over the record sequence.
    pub fn best_so_far(&self) -> Vec<T> {
        let mut acc = self.sense.worst::<T>();
        self.records
            .iter()
            .map(|r| {
                acc = self.sense.best_of(acc, r.fitness);
                acc
            })
            .collect()
    }
}

/// Nearest-rank percentile: the `ceil(k/100 * n)`-th smallest value.
pub fn percentile<T: Scalar>(values: &[T], k: f64) -> Result<T> {
    if values.is_empty() {
        return Err(Error::domain("percentile of an empty list"));
    }
    if !(k > 0.0 && k <= 100.0) {
        return Err(Error::domain(format!("percentile rank {k} outside (0, 100]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = sorted.len();
    let rank = ((k / 100.0) * n as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}
