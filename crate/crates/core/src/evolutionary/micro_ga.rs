//! Micro-genetic algorithm: tiny Gray-coded population, tournament selection,
//! single-point crossover, no mutation, elitism, and a restart around the
//! elite whenever the population's bit diversity collapses.

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
pub struct MicroGaParams {
    pub population: usize,
    /// Restart when fewer than this percentage of bit positions differ
    /// anywhere in the population.
    pub diversity_threshold: f64,
    pub bits_per_dim: u32,
}

impl Default for MicroGaParams {
    fn default() -> Self {
        Self { population: 5, diversity_threshold: 5.0, bits_per_dim: 16 }
    }
}

impl MicroGaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 3 {
            return Err(Error::domain(format!("micro-GA population must be at least 3, got {}", self.population)));
        }
        if !(1..=52).contains(&self.bits_per_dim) {
            return Err(Error::domain("bits_per_dim must lie in 1..=52"));
        }
        if !(self.diversity_threshold >= 0.0 && self.diversity_threshold <= 100.0) {
            return Err(Error::domain("diversity_threshold must be a percentage"));
        }
        Ok(())
    }
}

pub type Chromosome = Vec<bool>;

fn gray_to_binary(bits: &[bool]) -> u64 {
    let mut acc = false;
    let mut v = 0u64;
    for &g in bits {
        acc ^= g;
        v = (v << 1) | acc as u64;
    }
    v
}

/// Gray-decoded unit-cube coordinates.
pub fn decode<T: Scalar>(chrom: &[bool], bits: u32) -> Vec<T> {
    let max = ((1u64 << bits) - 1) as f64;
    chrom.chunks(bits as usize).map(|c| T::lit(gray_to_binary(c) as f64 / max)).collect()
}

/// Fraction of bit positions that are not unanimous across the population.
pub fn diversity(population: &[Chromosome]) -> f64 {
    let Some(first) = population.first() else { return 0.0 };
    if first.is_empty() {
        return 0.0;
    }
    let differing = (0..first.len()).filter(|&b| population.iter().any(|c| c[b] != first[b])).count();
    differing as f64 / first.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MicroGa<T: Scalar> {
    params: MicroGaParams,
    budget: usize,
    rng: RngStream,
    /// Population awaiting evaluation at the next step.
    population: Vec<Chromosome>,
    elite: Option<(Chromosome, T)>,
    pub restarts: usize,
    history: RunHistory<T>,
}

impl<T: Scalar> MicroGa<T> {
    pub fn new(space: DesignSpace<T>, params: MicroGaParams, budget: usize, rng: RngStream, sense: Sense) -> Result<Self> {
        params.validate()?;
        if budget < params.population {
            return Err(Error::domain("budget smaller than one micro-GA generation"));
        }
        let len = space.len() * params.bits_per_dim as usize;
        let mut r = rng.child(u64::MAX).rng();
        let population = (0..params.population).map(|_| random_chromosome(len, &mut r)).collect();
        Ok(Self { params, budget, rng, population, elite: None, restarts: 0, history: RunHistory::new(space, sense) })
    }

    pub fn elite(&self) -> Option<&(Chromosome, T)> {
        self.elite.as_ref()
    }

    /// Breed the next population from an evaluated one.
    fn next_generation(&mut self, evaluated: &[(Chromosome, T)], r: &mut StreamRng) {
        let sense = self.history.sense;
        let (elite, _) = self.elite.clone().expect("elite set after evaluation");
        let len = elite.len();
        let pop: Vec<Chromosome> = evaluated.iter().map(|(c, _)| c.clone()).collect();
        let mut next = vec![elite];
        if diversity(&pop) * 100.0 < self.params.diversity_threshold {
            self.restarts += 1;
            while next.len() < self.params.population {
                next.push(random_chromosome(len, r));
            }
        } else {
            // Tournaments between distinct individuals, drawn from shuffles.
            let mut winners = Vec::new();
            while winners.len() < 2 * (self.params.population - 1) {
                let mut order: Vec<usize> = (0..evaluated.len()).collect();
                r.shuffle(&mut order);
                for pair in order.chunks_exact(2) {
                    let (a, b) = (pair[0], pair[1]);
                    winners.push(if sense.better(evaluated[b].1, evaluated[a].1) { b } else { a });
                }
            }
            let mut winners = winners.into_iter();
            let mut tournament = |_: &mut StreamRng| winners.next().expect("enough winners");
            while next.len() < self.params.population {
                let p1 = &evaluated[tournament(r)].0;
                let p2 = &evaluated[tournament(r)].0;
                let cut = 1 + r.index(len.max(2) - 1);
                let c1: Chromosome = p1[..cut].iter().chain(&p2[cut..]).copied().collect();
                let c2: Chromosome = p2[..cut].iter().chain(&p1[cut..]).copied().collect();
                next.push(c1);
                if next.len() < self.params.population {
                    next.push(c2);
                }
            }
        }
        self.population = next;
    }
}

fn random_chromosome(len: usize, r: &mut StreamRng) -> Chromosome {
    (0..len).map(|_| r.bit()).collect()
}

impl<T: Scalar> Optimizer<T> for MicroGa<T> {
    fn step(&mut self, evaluator: &mut dyn BatchEvaluator<T>) -> Result<()> {
        let iteration = self.history.iterations.len();
        let space = self.history.space.clone();
        let sense = self.history.sense;
        let bits = self.params.bits_per_dim;
        // The elite leads every bred population and is not re-evaluated.
        let skip = usize::from(self.elite.is_some());
        let points = self.population[skip..]
            .iter()
            .map(|c| space.denormalize(&decode::<T>(c, bits)))
            .collect::<Result<Vec<DesignPoint<T>>>>()?;
        let fitness = evaluate_checked(evaluator, &points, iteration)?;
        let source = if iteration == 0 { Source::Initial } else { Source::Evolved };
        self.history.record(iteration, points, &fitness, &vec![source; fitness.len()], None, None)?;

        let mut evaluated: Vec<(Chromosome, T)> = self.population[skip..].iter().cloned().zip(fitness).collect();
        let carried = self.elite.clone();
        for (c, f) in &evaluated {
            if self.elite.as_ref().is_none_or(|(_, ef)| sense.better(*f, *ef)) {
                self.elite = Some((c.clone(), *f));
            }
        }
        evaluated.extend(carried);
        let mut r = self.rng.child(iteration as u64).rng();
        self.next_generation(&evaluated, &mut r);
        Ok(())
    }

    fn history(&self) -> &RunHistory<T> {
        &self.history
    }

    fn is_finished(&self) -> bool {
        self.history.evaluations() + self.population.len() - usize::from(self.elite.is_some()) > self.budget
    }
}

/// Run a micro-GA until the evaluation budget is exhausted.
pub fn micro_ga_run<T: Scalar, E: BatchEvaluator<T>>(
    mut evaluator: E,
    space: DesignSpace<T>,
    params: MicroGaParams,
    budget: usize,
    rng: RngStream,
    sense: Sense,
) -> Result<RunHistory<T>> {
    let mut ga = MicroGa::new(space, params, budget, rng, sense)?;
    ga.run(&mut evaluator, None)?;
    Ok(ga.history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::FnEvaluator;

    #[test]
    fn gray_decoding() {
        // Gray 0110 -> binary 0100 = 4
        assert_eq!(gray_to_binary(&[false, true, true, false]), 4);
        assert_eq!(gray_to_binary(&[true, false, false, false]), 15);
        let u: Vec<f64> = decode(&[true, false, false, false, false, false, false, false], 4);
        assert_eq!(u, vec![1.0, 0.0]);
    }

    #[test]
    fn identical_population_has_zero_diversity() {
        let c = vec![true, false, true, true];
        assert_eq!(diversity(&vec![c.clone(); 5]), 0.0);
        let mut d = c.clone();
        d[0] = false;
        assert_eq!(diversity(&[c, d]), 0.25);
    }

    #[test]
    fn constant_objective_restarts() {
        let s = DesignSpace::cube(2, -1.0, 1.0).unwrap();
        let mut ga = MicroGa::new(s, MicroGaParams::default(), 500, RngStream::new(1, 0), Sense::Maximize).unwrap();
        ga.run(&mut FnEvaluator(|_: &[f64]| 1.0), None).unwrap();
        assert_eq!(ga.history().best(), Some(1.0));
        assert!(ga.restarts > 3, "restarts {}", ga.restarts);
        // 5 for the first generation, 4 per bred one (the elite is carried).
        assert_eq!(ga.history().evaluations(), 5 + 4 * 123);
    }

    #[test]
    fn elite_survives_every_generation() {
        let s = DesignSpace::cube(2, -1.0, 1.0).unwrap();
        let mut ga = MicroGa::new(s, MicroGaParams::default(), 300, RngStream::new(2, 0), Sense::Maximize).unwrap();
        let mut ev = FnEvaluator(|x: &[f64]| -(x[0] - 0.3).powi(2) - (x[1] + 0.2).powi(2));
        while !ga.is_finished() {
            ga.step(&mut ev).unwrap();
            let (elite, _) = ga.elite().unwrap().clone();
            assert_eq!(ga.population[0], elite);
        }
        let b = ga.history().best_per_evaluation();
        assert!(b.windows(2).all(|w| w[1] >= w[0]));
    }
}
