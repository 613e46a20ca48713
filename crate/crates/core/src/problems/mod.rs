//! Benchmark objectives and evaluator adapters.

pub mod cosine;
pub mod engine;
pub mod external;

pub use cosine::{cosine_mixture, CosineMixture, COSINE_MIXTURE_OPTIMUM};
pub use engine::{engine_design_space, engine_merit, AnalyticEngine, EngineMetrics};
pub use external::{external_evaluate, EvaluatorMode, EvaluatorSpec, ExternalEvaluator};
