//! DE/rand/1/bin.

use serde::{Deserialize, Serialize};

use crate::dataset::{Sense, Source};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate_checked, BatchEvaluator};
use crate::history::RunHistory;
use crate::optimizer::Optimizer;
use crate::rng::{RngStream, StreamRng};
use crate::scalar::Scalar;
use crate::space::{DesignPoint, DesignSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeParams {
    pub population: usize,
    pub weight: f64,
    pub crossover: f64,
    pub generations: usize,
}

impl Default for DeParams {
    fn default() -> Self {
        Self { population: 50, weight: 0.8, crossover: 0.9, generations: 200 }
    }
}

impl DeParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::domain(format!("DE population must be at least 4, got {}", self.population)));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(Error::domain(format!("DE crossover rate must lie in [0, 1], got {}", self.crossover)));
        }
        if !(self.weight > 0.0) {
            return Err(Error::domain("DE weight must be positive"));
        }
        Ok(())
    }
}

/// Unit-cube population with its fitness values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
struct Population<T: Scalar> {
    members: Vec<Vec<T>>,
    fitness: Vec<T>,
}

impl<T: Scalar> Population<T> {
    fn best_index(&self, sense: Sense) -> usize {
        let mut b = 0;
        for i in 1..self.fitness.len() {
            if sense.better(self.fitness[i], self.fitness[b]) {
                b = i;
            }
        }
        b
    }

    /// One trial vector per member: mutant a + F(b − c), binomial crossover
    /// with one forced coordinate, clipped to the unit cube.
    fn trials(&self, params: &DeParams, rng: &mut StreamRng) -> Vec<Vec<T>> {
        let np = self.members.len();
        let dim = self.members[0].len();
        let f = T::lit(params.weight);
        (0..np)
            .map(|i| {
                let mut pick = |taken: &[usize]| loop {
                    let r = rng.index(np);
                    if r != i && !taken.contains(&r) {
                        break r;
                    }
                };
                let a = pick(&[]);
                let b = pick(&[a]);
                let c = pick(&[a, b]);
                let forced = rng.index(dim);
                (0..dim)
                    .map(|j| {
                        if j == forced || rng.unit::<f64>() < params.crossover {
                            let v = self.members[a][j] + f * (self.members[b][j] - self.members[c][j]);
                            v.max(T::zero()).min(T::one())
                        } else {
                            self.members[i][j]
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Greedy one-to-one replacement; ties go to the trial.
    fn select(&mut self, trials: Vec<Vec<T>>, trial_fitness: &[T], sense: Sense) {
        for (i, (t, &ft)) in trials.into_iter().zip(trial_fitness).enumerate() {
            if !sense.better(self.fitness[i], ft) {
                self.members[i] = t;
                self.fitness[i] = ft;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeResult<T: Scalar> {
    pub best_point: DesignPoint<T>,
    pub best_value: T,
    /// Population best after initialization and after each generation.
    pub history: Vec<T>,
}

/// Optimize a cheap pointwise objective over `space`.
pub fn de_optimize<T: Scalar, F>(
    objective: F,
    space: &DesignSpace<T>,
    params: &DeParams,
    rng: RngStream,
    sense: Sense,
) -> Result<DeResult<T>>
where
    F: Fn(&[T]) -> T,
{
    params.validate()?;
    let dim = space.len();
    let eval = |u: &[T]| -> Result<T> {
        let p = space.denormalize(u)?;
        Ok(objective(&p.coords))
    };
    let mut r = rng.rng();
    let members: Vec<Vec<T>> = (0..params.population).map(|_| r.unit_vector(dim)).collect();
    let fitness = members.iter().map(|u| eval(u)).collect::<Result<Vec<_>>>()?;
    let mut pop = Population { members, fitness };
    let mut history = vec![pop.fitness[pop.best_index(sense)]];
    for _ in 0..params.generations {
        let trials = pop.trials(params, &mut r);
        let tf = trials.iter().map(|u| eval(u)).collect::<Result<Vec<_>>>()?;
        pop.select(trials, &tf, sense);
        history.push(pop.fitness[pop.best_index(sense)]);
    }
    let b = pop.best_index(sense);
    Ok(DeResult { best_point: space.denormalize(&pop.members[b])?, best_value: pop.fitness[b], history })
}

/// DE as a batch optimizer: one generation per design iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DeOptimizer<T: Scalar> {
    params: DeParams,
    budget: usize,
    rng: RngStream,
    population: Option<Population<T>>,
    history: RunHistory<T>,
}

impl<T: Scalar> DeOptimizer<T> {
    pub fn new(space: DesignSpace<T>, params: DeParams, budget: usize, rng: RngStream, sense: Sense) -> Result<Self> {
        params.validate()?;
        if budget < params.population {
            return Err(Error::domain("budget smaller than one DE generation"));
        }
        Ok(Self { params, budget, rng, population: None, history: RunHistory::new(space, sense) })
    }
}

impl<T: Scalar> Optimizer<T> for DeOptimizer<T> {
    fn step(&mut self, evaluator: &mut dyn BatchEvaluator<T>) -> Result<()> {
        let iteration = self.history.iterations.len();
        let space = self.history.space.clone();
        let sense = self.history.sense;
        let mut r = self.rng.child(iteration as u64).rng();
        let (units, source) = match &self.population {
            None => ((0..self.params.population).map(|_| r.unit_vector(space.len())).collect(), Source::Initial),
            Some(pop) => (pop.trials(&self.params, &mut r), Source::Evolved),
        };
        let points = units.iter().map(|u| space.denormalize(u)).collect::<Result<Vec<_>>>()?;
        let fitness = evaluate_checked(evaluator, &points, iteration)?;
        let sources = vec![source; points.len()];
        self.history.record(iteration, points, &fitness, &sources, None, None)?;
        match &mut self.population {
            None => self.population = Some(Population { members: units, fitness }),
            Some(pop) => pop.select(units, &fitness, sense),
        }
        Ok(())
    }

    fn history(&self) -> &RunHistory<T> {
        &self.history
    }

    fn is_finished(&self) -> bool {
        self.history.evaluations() + self.params.population > self.budget
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::FnEvaluator;

    #[test]
    fn constant_objective() {
        let s = DesignSpace::cube(3, -1.0, 1.0).unwrap();
        let r = de_optimize(|_: &[f64]| 7.5, &s, &DeParams::default(), RngStream::new(0, 0), Sense::Minimize).unwrap();
        assert_eq!(r.best_value, 7.5);
    }

    #[test]
    fn one_dimensional_parabola() {
        let s = DesignSpace::cube(1, 0.0, 10.0).unwrap();
        let r = de_optimize(|x: &[f64]| (x[0] - 3.0).powi(2), &s, &DeParams::default(), RngStream::new(1, 0), Sense::Minimize)
            .unwrap();
        assert!((r.best_point.coords[0] - 3.0).abs() < 1e-6, "{:?}", r.best_point);
    }

    #[test]
    fn sphere_5d() {
        let s = DesignSpace::cube(5, -5.0, 5.0).unwrap();
        let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let r = de_optimize(sphere, &s, &DeParams::default(), RngStream::new(2, 0), Sense::Minimize).unwrap();
        assert!(r.best_value < 1e-6, "{}", r.best_value);
        for w in r.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn batch_optimizer_respects_budget_and_bounds() {
        let s = DesignSpace::cube(2, -1.0, 1.0).unwrap();
        let params = DeParams { population: 5, ..Default::default() };
        let mut de = DeOptimizer::new(s.clone(), params, 52, RngStream::new(3, 0), Sense::Maximize).unwrap();
        let mut ev = FnEvaluator(|x: &[f64]| -x[0] * x[0] - x[1] * x[1]);
        de.run(&mut ev, None).unwrap();
        let h = de.history();
        assert_eq!(h.evaluations(), 50);
        assert!(h.designs().all(|d| s.contains(&d.point)));
        let b = h.best_per_evaluation();
        assert!(b.windows(2).all(|w| w[1] >= w[0]));
    }
}
