//! Per-iteration run records shared by ActivO and the baseline optimizers.

use serde::{Deserialize, Serialize};

use crate::controller::Phase;
use crate::dataset::{EvaluatedDesign, Sense, Source};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::space::{DesignPoint, DesignSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct IterationRecord<T: Scalar> {
    pub iteration: usize,
    pub designs: Vec<EvaluatedDesign<T>>,
    /// Best fitness over all evaluations up to and including this iteration.
    pub best_so_far: T,
    pub omega: Option<T>,
    pub phase: Option<Phase>,
}

impl<T: Scalar> IterationRecord<T> {
    pub fn count(&self, source: Source) -> usize {
        self.designs.iter().filter(|d| d.source == source).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RunHistory<T: Scalar> {
    pub space: DesignSpace<T>,
    pub sense: Sense,
    pub iterations: Vec<IterationRecord<T>>,
    pub converged: bool,
    /// Iteration at which convergence was first declared.
    pub convergence_iteration: Option<usize>,
    pub convergence_reason: Option<String>,
}

impl<T: Scalar> RunHistory<T> {
    pub fn new(space: DesignSpace<T>, sense: Sense) -> Self {
        Self { space, sense, iterations: Vec::new(), converged: false, convergence_iteration: None, convergence_reason: None }
    }

    pub fn evaluations(&self) -> usize {
        self.iterations.iter().map(|r| r.designs.len()).sum()
    }

    pub fn best(&self) -> Option<T> {
        self.iterations.last().map(|r| r.best_so_far)
    }

    pub fn best_history(&self) -> Vec<T> {
        self.iterations.iter().map(|r| r.best_so_far).collect()
    }

    /// Every evaluated design in evaluation order.
    pub fn designs(&self) -> impl Iterator<Item = &EvaluatedDesign<T>> {
        self.iterations.iter().flat_map(|r| r.designs.iter())
    }

    /// Running best after each evaluation.
    pub fn best_per_evaluation(&self) -> Vec<T> {
        let mut acc = self.sense.worst::<T>();
        self.designs()
            .map(|d| {
                acc = self.sense.best_of(acc, d.fitness);
                acc
            })
            .collect()
    }

    /// 1-based evaluation count at which the running best first reaches
    /// `threshold`.
    pub fn evaluations_to(&self, threshold: T) -> Option<usize> {
        self.best_per_evaluation().iter().position(|&b| self.sense.reaches(b, threshold)).map(|i| i + 1)
    }

    /// Append one evaluated batch.
    pub fn record(
        &mut self,
        iteration: usize,
        points: Vec<DesignPoint<T>>,
        fitness: &[T],
        sources: &[Source],
        omega: Option<T>,
        phase: Option<Phase>,
    ) -> Result<&IterationRecord<T>> {
        let mut best = self.best().unwrap_or_else(|| self.sense.worst());
        let mut designs = Vec::with_capacity(points.len());
        for ((p, &f), &s) in points.into_iter().zip(fitness).zip(sources) {
            best = self.sense.best_of(best, f);
            designs.push(EvaluatedDesign::new(p, f, iteration, s)?);
        }
        self.iterations.push(IterationRecord { iteration, designs, best_so_far: best, omega, phase });
        Ok(self.iterations.last().expect("just pushed"))
    }
}
