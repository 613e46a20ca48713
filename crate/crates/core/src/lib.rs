//! Ensemble-surrogate active optimization.
//!
//! A smooth ν-SVR "weak" learner screens uniformly drawn nominees for the
//! promising part of the design space and spreads exploration points across
//! it; a committee of small neural networks acts as the "strong" learner whose
//! optimum (found by differential evolution) supplies exploitation points.
//! [`controller::Activo`] balances the two by tracking how much the weak
//! surface still moves between iterations, and stops on static exploration
//! plus stagnant exploitation.
//!
//! Baselines (micro-GA, PSO, DE), the cosine-mixture and engine-merit
//! problems, and a file protocol for external simulators are included.
//!
//! Numeric code is generic over [`Scalar`] (`f32`/`f64`); the aliases below
//! fix it to `f64`.

pub mod controller;
pub mod dataset;
pub mod error;
pub mod evaluator;
pub mod evolutionary;
pub mod history;
pub mod optimizer;
pub mod problems;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod space;
pub mod strong;
pub mod weak;

pub use controller::{ActivoConfig, ControllerConfig, Phase};
pub use dataset::{percentile, Sense, Source};
pub use error::{Error, Result};
pub use evaluator::{BatchEvaluator, FnEvaluator};
pub use optimizer::Optimizer;
pub use rng::RngStream;
pub use scalar::Scalar;

pub type DesignSpace = space::DesignSpace<f64>;
pub type DesignPoint = space::DesignPoint<f64>;
pub type Dimension = space::Dimension<f64>;
pub type EvaluatedDesign = dataset::EvaluatedDesign<f64>;
pub type Dataset = dataset::Dataset<f64>;
pub type WeakModel = weak::WeakModel<f64>;
pub type Committee = strong::Committee<f64>;
pub type RunHistory = history::RunHistory<f64>;
pub type IterationRecord = history::IterationRecord<f64>;
pub type Activo = controller::Activo<f64>;
pub type MicroGa = evolutionary::MicroGa<f64>;
pub type Pso = evolutionary::Pso<f64>;
pub type DeOptimizer = evolutionary::DeOptimizer<f64>;
pub type EngineMetrics = problems::EngineMetrics<f64>;

pub type DesignSpaceF32 = space::DesignSpace<f32>;
pub type WeakModelF32 = weak::WeakModel<f32>;
pub type CommitteeF32 = strong::Committee<f32>;
pub type ActivoF32 = controller::Activo<f32>;
