//! Global-best particle swarm optimization.

use serde::{Deserialize, Serialize};

use crate::dataset::{Sense, Source};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate_checked, BatchEvaluator};
use crate::history::RunHistory;
use crate::optimizer::Optimizer;
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::space::DesignSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoParams {
    pub swarm: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity clamp as a fraction of each dimension's range.
    pub vmax: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self { swarm: 5, inertia: 0.8, cognitive: 2.0, social: 2.0, vmax: 0.5 }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        if self.swarm == 0 {
            return Err(Error::domain("PSO swarm must be positive"));
        }
        if !(self.vmax > 0.0) {
            return Err(Error::domain("PSO vmax must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
struct Swarm<T: Scalar> {
    position: Vec<Vec<T>>,
    velocity: Vec<Vec<T>>,
    pbest: Vec<Vec<T>>,
    pbest_fitness: Vec<T>,
    gbest: Vec<T>,
    gbest_fitness: T,
}

/// Particles live in the unit cube; velocities start at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Pso<T: Scalar> {
    params: PsoParams,
    budget: usize,
    rng: RngStream,
    swarm: Option<Swarm<T>>,
    history: RunHistory<T>,
}

impl<T: Scalar> Pso<T> {
    pub fn new(space: DesignSpace<T>, params: PsoParams, budget: usize, rng: RngStream, sense: Sense) -> Result<Self> {
        params.validate()?;
        if budget < params.swarm {
            return Err(Error::domain("budget smaller than one PSO iteration"));
        }
        Ok(Self { params, budget, rng, swarm: None, history: RunHistory::new(space, sense) })
    }

    pub fn gbest(&self) -> Option<(&[T], T)> {
        self.swarm.as_ref().map(|s| (s.gbest.as_slice(), s.gbest_fitness))
    }

    fn update_bests(swarm: &mut Swarm<T>, fitness: &[T], sense: Sense) {
        for (i, &f) in fitness.iter().enumerate() {
            if sense.better(f, swarm.pbest_fitness[i]) {
                swarm.pbest_fitness[i] = f;
                swarm.pbest[i] = swarm.position[i].clone();
            }
            if sense.better(f, swarm.gbest_fitness) {
                swarm.gbest_fitness = f;
                swarm.gbest = swarm.position[i].clone();
            }
        }
    }

    fn move_particles(&mut self, iteration: usize) {
        let p = &self.params;
        let (w, c1, c2, vmax) = (T::lit(p.inertia), T::lit(p.cognitive), T::lit(p.social), T::lit(p.vmax));
        let mut r = self.rng.child(iteration as u64).rng();
        let s = self.swarm.as_mut().expect("swarm initialised");
        for i in 0..s.position.len() {
            for j in 0..s.position[i].len() {
                let (r1, r2) = (r.unit::<T>(), r.unit::<T>());
                let x = s.position[i][j];
                let v = w * s.velocity[i][j] + c1 * r1 * (s.pbest[i][j] - x) + c2 * r2 * (s.gbest[j] - x);
                let v = v.max(-vmax).min(vmax);
                s.velocity[i][j] = v;
                s.position[i][j] = (x + v).max(T::zero()).min(T::one());
            }
        }
    }
}

impl<T: Scalar> Optimizer<T> for Pso<T> {
    fn step(&mut self, evaluator: &mut dyn BatchEvaluator<T>) -> Result<()> {
        let iteration = self.history.iterations.len();
        let space = self.history.space.clone();
        let sense = self.history.sense;
        let source = if self.swarm.is_none() {
            let mut r = self.rng.child(iteration as u64).rng();
            let position: Vec<Vec<T>> = (0..self.params.swarm).map(|_| r.unit_vector(space.len())).collect();
            self.swarm = Some(Swarm {
                velocity: vec![vec![T::zero(); space.len()]; position.len()],
                pbest: position.clone(),
                pbest_fitness: vec![sense.worst(); position.len()],
                gbest: position[0].clone(),
                gbest_fitness: sense.worst(),
                position,
            });
            Source::Initial
        } else {
            self.move_particles(iteration);
            Source::Evolved
        };
        let swarm = self.swarm.as_mut().expect("swarm initialised");
        let points = swarm.position.iter().map(|u| space.denormalize(u)).collect::<Result<Vec<_>>>()?;
        let fitness = evaluate_checked(evaluator, &points, iteration)?;
        Self::update_bests(swarm, &fitness, sense);
        self.history.record(iteration, points, &fitness, &vec![source; fitness.len()], None, None)?;
        Ok(())
    }

    fn history(&self) -> &RunHistory<T> {
        &self.history
    }

    fn is_finished(&self) -> bool {
        self.history.evaluations() + self.params.swarm > self.budget
    }
}

/// Run PSO until the evaluation budget is exhausted.
pub fn pso_run<T: Scalar, E: BatchEvaluator<T>>(
    mut evaluator: E,
    space: DesignSpace<T>,
    params: PsoParams,
    budget: usize,
    rng: RngStream,
    sense: Sense,
) -> Result<RunHistory<T>> {
    let mut pso = Pso::new(space, params, budget, rng, sense)?;
    pso.run(&mut evaluator, None)?;
    Ok(pso.history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::FnEvaluator;

    #[test]
    fn lone_particle_at_optimum_stays() {
        let s = DesignSpace::cube(2, -1.0, 1.0).unwrap();
        let params = PsoParams { swarm: 1, ..Default::default() };
        let mut pso = Pso::new(s, params, 50, RngStream::new(0, 0), Sense::Maximize).unwrap();
        pso.swarm = Some(Swarm {
            position: vec![vec![0.5, 0.5]],
            velocity: vec![vec![0.0, 0.0]],
            pbest: vec![vec![0.5, 0.5]],
            pbest_fitness: vec![0.0],
            gbest: vec![0.5, 0.5],
            gbest_fitness: 0.0,
        });
        pso.history.iterations.clear();
        let mut ev = FnEvaluator(|x: &[f64]| -(x[0] * x[0] + x[1] * x[1]));
        pso.history.record(0, vec![vec![0.0, 0.0].into()], &[0.0], &[Source::Initial], None, None).unwrap();
        for _ in 0..10 {
            pso.step(&mut ev).unwrap();
        }
        assert!(pso.history().designs().all(|d| d.point.coords == vec![0.0, 0.0]));
    }

    #[test]
    fn gbest_monotone_and_in_bounds() {
        let s = DesignSpace::cube(2, -1.0, 1.0).unwrap();
        let mut pso = Pso::new(s.clone(), PsoParams::default(), 400, RngStream::new(4, 0), Sense::Maximize).unwrap();
        let mut ev = FnEvaluator(|x: &[f64]| (3.0 * x[0]).sin() - x[1] * x[1]);
        pso.run(&mut ev, None).unwrap();
        let h = pso.history();
        assert_eq!(h.evaluations(), 400);
        assert!(h.designs().all(|d| s.contains(&d.point)));
        let b = h.best_per_evaluation();
        assert!(b.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(pso.gbest().unwrap().1, *b.last().unwrap());
    }
}
