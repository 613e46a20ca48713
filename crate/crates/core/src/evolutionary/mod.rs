//! Population-based optimizers: differential evolution (also the strong
//! learner's surrogate search), the micro-genetic algorithm and particle
//! swarm optimization.

pub mod de;
pub mod micro_ga;
pub mod pso;

pub use de::{de_optimize, DeOptimizer, DeParams, DeResult};
pub use micro_ga::{micro_ga_run, MicroGa, MicroGaParams};
pub use pso::{pso_run, Pso, PsoParams};
