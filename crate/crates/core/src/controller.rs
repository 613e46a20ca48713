//! The active-optimization driver.
//!
//! Each design iteration refits the weak learner on all data, measures ω (the
//! largest percentage change of its predictions over the promising monitor
//! points), walks the three-phase machine that sets the weak:strong split,
//! assembles and evaluates the batch, and tests for convergence.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Sense, Source};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate_checked, BatchEvaluator};
use crate::evolutionary::de::DeParams;
use crate::history::RunHistory;
use crate::optimizer::Optimizer;
use crate::rng::RngStream;
use crate::sampler::{elite_indices, filter_elite, generate_nominees, select_diverse, surrogate_optima, SamplerConfig};
use crate::scalar::Scalar;
use crate::space::DesignSpace;
use crate::strong::{fit_committee, NetworkConfig};
use crate::weak::{fit_weak, WeakHyperparams, WeakModel};

/// ω below this percentage never counts as an increase.
pub const NOISE_THRESHOLD: f64 = 5.0;
/// Iterations over which static exploration and stagnant exploitation must hold.
pub const STAGNATION_WINDOW: usize = 5;

const TAG_INITIAL: u64 = 0;
const TAG_MONITORS: u64 = 1;
const TAG_NOMINEES: u64 = 2;
const TAG_COMMITTEE: u64 = 3;
const TAG_SURROGATE: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    ExtensiveExploration,
    PreliminaryExploitation,
    IntensiveExploitation,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::ExtensiveExploration => "extensive-exploration",
            Phase::PreliminaryExploitation => "preliminary-exploitation",
            Phase::IntensiveExploitation => "intensive-exploitation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Phase::ExtensiveExploration, Phase::PreliminaryExploitation, Phase::IntensiveExploitation]
            .into_iter()
            .find(|p| p.as_str() == s)
    }

    /// Number of strong-learner points in a batch of `batch` (100:0, 75:25,
    /// 50:50, rounded down).
    pub fn strong_count(self, batch: usize) -> usize {
        match self {
            Phase::ExtensiveExploration => 0,
            Phase::PreliminaryExploitation => batch / 4,
            Phase::IntensiveExploitation => batch / 2,
        }
    }

    fn more_exploratory(self) -> Self {
        match self {
            Phase::IntensiveExploitation => Phase::PreliminaryExploitation,
            _ => Phase::ExtensiveExploration,
        }
    }

    fn more_exploitative(self) -> Self {
        match self {
            Phase::ExtensiveExploration => Phase::PreliminaryExploitation,
            _ => Phase::IntensiveExploitation,
        }
    }
}

/// Phase transition. An increase of ω to a value below the noise threshold
/// is treated as no increase, in every phase.
pub fn step_phase(phase: Phase, omega_prev: Option<f64>, omega_curr: f64) -> Phase {
    let Some(prev) = omega_prev else { return phase };
    if omega_curr > prev && omega_curr >= NOISE_THRESHOLD {
        phase.more_exploratory()
    } else if omega_curr < prev {
        phase.more_exploitative()
    } else {
        phase
    }
}

/// ω from prediction vectors at the monitor points. The promising set is
/// chosen from `curr` with the elite rule; both vectors are read there.
pub fn omega_from_predictions<T: Scalar>(prev: &[T], curr: &[T], k: f64, sense: Sense) -> Result<T> {
    if prev.len() != curr.len() || prev.is_empty() {
        return Err(Error::domain("monitor prediction vectors must be non-empty and aligned"));
    }
    let (lo, hi) = prev.iter().fold((T::infinity(), T::neg_infinity()), |(l, h), &v| (l.min(v), h.max(v)));
    let guard = T::lit(1e-8) * (hi - lo).max(T::lit(1e-12));
    let hundred = T::lit(100.0);
    let omega = elite_indices(curr, k, sense)?
        .into_iter()
        .map(|j| (hundred * (curr[j] - prev[j]) / prev[j].abs().max(guard)).abs())
        .fold(T::zero(), T::max);
    Ok(omega)
}

/// ω of the current weak model against the previous iteration's monitor
/// predictions; also returns the current predictions for the next call.
pub fn compute_omega<T: Scalar>(
    weak_curr: &WeakModel<T>,
    weak_pred_prev: &[T],
    monitors: &[Vec<T>],
    k: f64,
    sense: Sense,
) -> Result<(T, Vec<T>)> {
    let curr = weak_curr.predict(monitors);
    let omega = omega_from_predictions(weak_pred_prev, &curr, k, sense)?;
    Ok((omega, curr))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub reason: String,
}

/// Static exploration (every ω of the last [`STAGNATION_WINDOW`] iterations
/// below the noise threshold) and stagnant exploitation (best fitness
/// improved by less than `epsilon` across that window).
///
/// Histories are aligned by iteration; `None` marks an iteration without ω.
/// Improvement is measured from the best before the window when the history
/// reaches back that far, otherwise from the window's first entry.
pub fn check_convergence<T: Scalar>(
    omega_history: &[Option<T>],
    best_history: &[T],
    epsilon: f64,
    sense: Sense,
) -> Convergence {
    let w = STAGNATION_WINDOW;
    let n = omega_history.len().min(best_history.len());
    if n < w {
        return Convergence { converged: false, reason: format!("only {n} of {w} iterations available") };
    }
    let window = &omega_history[n - w..n];
    if let Some((i, om)) = window.iter().enumerate().find(|(_, o)| o.is_none_or(|v| !(v < T::lit(NOISE_THRESHOLD)))) {
        let at = n - w + i;
        return Convergence {
            converged: false,
            reason: match om {
                Some(v) => format!("exploration still active: omega {v} >= {NOISE_THRESHOLD} at iteration {at}"),
                None => format!("no omega at iteration {at}"),
            },
        };
    }
    let base = if n > w { best_history[n - w - 1] } else { best_history[n - w] };
    let last = best_history[n - 1];
    let improvement = match sense {
        Sense::Maximize => last - base,
        Sense::Minimize => base - last,
    };
    if improvement < T::lit(epsilon) {
        Convergence {
            converged: true,
            reason: format!(
                "static exploration and stagnant exploitation: omega < {NOISE_THRESHOLD} and best improved by {improvement} < {epsilon} over {w} iterations"
            ),
        }
    } else {
        Convergence {
            converged: false,
            reason: format!("exploitation still improving: {improvement} >= {epsilon} over {w} iterations"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub batch_size: usize,
    pub monitor_count: usize,
    /// Stagnation tolerance in fitness units.
    pub epsilon: f64,
    /// Total design iterations including the initial batch.
    pub max_iterations: usize,
    pub sense: Sense,
    pub stop_on_convergence: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            batch_size: 5,
            monitor_count: 2000,
            epsilon: 1e-3,
            max_iterations: 200,
            sense: Sense::Maximize,
            stop_on_convergence: true,
        }
    }
}

/// Every tunable of an ActivO run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivoConfig {
    pub controller: ControllerConfig,
    pub sampler: SamplerConfig,
    pub weak: WeakHyperparams,
    pub network: NetworkConfig,
    pub committee_size: usize,
    pub surrogate_search: DeParams,
}

impl Default for ActivoConfig {
    fn default() -> Self {
        Self::new(ControllerConfig::default())
    }
}

impl ActivoConfig {
    pub fn new(controller: ControllerConfig) -> Self {
        Self {
            controller,
            sampler: SamplerConfig::default(),
            weak: WeakHyperparams::default(),
            network: NetworkConfig::default(),
            committee_size: 5,
            surrogate_search: DeParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.controller;
        if c.batch_size == 0 || c.monitor_count == 0 || c.max_iterations == 0 {
            return Err(Error::domain("batch_size, monitor_count and max_iterations must be positive"));
        }
        if !(c.epsilon >= 0.0) {
            return Err(Error::domain("epsilon must be non-negative"));
        }
        if self.committee_size == 0 {
            return Err(Error::domain("committee_size must be positive"));
        }
        self.sampler.validate(c.batch_size)?;
        self.weak.validate()?;
        self.network.validate()?;
        self.surrogate_search.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PhaseState<T: Scalar> {
    pub phase: Phase,
    pub omega_prev: Option<T>,
    pub omega_curr: Option<T>,
    /// Fixed for the whole run.
    pub monitors: Vec<Vec<T>>,
    pub weak_pred_prev: Option<Vec<T>>,
}

/// ActivO run state. Serializable between iterations for checkpointing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Activo<T: Scalar> {
    config: ActivoConfig,
    rng: RngStream,
    data: Dataset<T>,
    state: PhaseState<T>,
    omega_history: Vec<Option<T>>,
    history: RunHistory<T>,
}

impl<T: Scalar> Activo<T> {
    pub fn new(space: DesignSpace<T>, config: ActivoConfig, rng: RngStream) -> Result<Self> {
        config.validate()?;
        let sense = config.controller.sense;
        let monitors = generate_nominees(space.len(), config.controller.monitor_count, rng.child(TAG_MONITORS));
        Ok(Self {
            rng,
            data: Dataset::new(space.clone(), sense),
            state: PhaseState {
                phase: Phase::ExtensiveExploration,
                omega_prev: None,
                omega_curr: None,
                monitors,
                weak_pred_prev: None,
            },
            omega_history: Vec::new(),
            history: RunHistory::new(space, sense),
            config,
        })
    }

    pub fn config(&self) -> &ActivoConfig {
        &self.config
    }

    pub fn dataset(&self) -> &Dataset<T> {
        &self.data
    }

    pub fn phase_state(&self) -> &PhaseState<T> {
        &self.state
    }

    pub fn omega_history(&self) -> &[Option<T>] {
        &self.omega_history
    }

    pub fn into_history(self) -> RunHistory<T> {
        self.history
    }

    /// Fit the weak learner on the current data.
    pub fn weak_model(&self) -> Result<WeakModel<T>> {
        fit_weak(&self.data, &self.config.weak)
    }

    fn propose(&mut self, iteration: usize) -> Result<(Vec<Vec<T>>, Vec<Source>, Option<T>, Option<Phase>)> {
        let space = self.data.space().clone();
        let dim = space.len();
        let cfg = &self.config;
        let batch = cfg.controller.batch_size;
        let sense = cfg.controller.sense;
        if iteration == 0 {
            let mut r = self.rng.child(TAG_INITIAL).rng();
            let units = (0..batch).map(|_| r.unit_vector(dim)).collect();
            return Ok((units, vec![Source::Initial; batch], None, None));
        }

        let weak = fit_weak(&self.data, &cfg.weak)?;
        let k = cfg.sampler.k_percentile;
        let (omega, preds) = match &self.state.weak_pred_prev {
            Some(prev) => {
                let (o, p) = compute_omega(&weak, prev, &self.state.monitors, k, sense)?;
                (Some(o), p)
            }
            None => (None, weak.predict(&self.state.monitors)),
        };
        let phase = match omega {
            None => Phase::ExtensiveExploration,
            Some(o) => step_phase(self.state.phase, self.state.omega_curr.map(Scalar::as_f64), o.as_f64()),
        };
        self.state.phase = phase;
        self.state.omega_prev = self.state.omega_curr;
        self.state.omega_curr = omega;
        self.state.weak_pred_prev = Some(preds);

        let mut strong = Vec::new();
        let quota = phase.strong_count(batch);
        if quota > 0 && self.data.len() >= cfg.committee_size + 2 {
            let committee = fit_committee(
                &self.data,
                &cfg.network,
                cfg.committee_size,
                self.rng.child(TAG_COMMITTEE).child(iteration as u64),
            )?;
            strong = surrogate_optima(
                &committee,
                dim,
                quota,
                &cfg.surrogate_search,
                self.rng.child(TAG_SURROGATE).child(iteration as u64),
                sense,
                cfg.sampler.duplicate_distance,
            )?;
        }

        let nominees = generate_nominees(dim, cfg.sampler.nominee_count, self.rng.child(TAG_NOMINEES).child(iteration as u64));
        let predictions = weak.predict(&nominees);
        let survivors = filter_elite(&nominees, &predictions, k, sense)?;
        let mut sampled: Vec<Vec<T>> = self.data.unit_inputs().to_vec();
        sampled.extend(strong.iter().cloned());
        let explore = select_diverse(&survivors, &sampled, batch - strong.len())?;

        let mut sources = vec![Source::Weak; explore.len()];
        sources.extend(std::iter::repeat_n(Source::Strong, strong.len()));
        let mut units = explore;
        units.extend(strong);
        Ok((units, sources, omega, Some(phase)))
    }
}

impl<T: Scalar> Optimizer<T> for Activo<T> {
    fn step(&mut self, evaluator: &mut dyn BatchEvaluator<T>) -> Result<()> {
        let iteration = self.history.iterations.len();
        // Work on a copy so a failed evaluation leaves the state untouched.
        let mut next = self.clone();
        let (units, sources, omega, phase) = next.propose(iteration)?;
        let space = next.data.space().clone();
        let points = units.iter().map(|u| space.denormalize(u)).collect::<Result<Vec<_>>>()?;
        let fitness = evaluate_checked(evaluator, &points, iteration)?;
        let record = next.history.record(iteration, points, &fitness, &sources, omega, phase)?.clone();
        for d in record.designs {
            next.data.push(d)?;
        }
        next.omega_history.push(omega);
        let conv = check_convergence(
            &next.omega_history,
            &next.history.best_history(),
            next.config.controller.epsilon,
            next.config.controller.sense,
        );
        if conv.converged && !next.history.converged {
            next.history.converged = true;
            next.history.convergence_iteration = Some(iteration);
            next.history.convergence_reason = Some(conv.reason);
        }
        *self = next;
        Ok(())
    }

    fn history(&self) -> &RunHistory<T> {
        &self.history
    }

    fn is_finished(&self) -> bool {
        self.history.iterations.len() >= self.config.controller.max_iterations
            || (self.config.controller.stop_on_convergence && self.history.converged)
    }
}

/// Run ActivO from scratch until convergence or `max_iterations`.
pub fn run_optimization<T: Scalar, E: BatchEvaluator<T>>(
    mut evaluator: E,
    space: DesignSpace<T>,
    config: ActivoConfig,
    rng: RngStream,
) -> Result<RunHistory<T>> {
    let mut run = Activo::new(space, config, rng)?;
    run.run(&mut evaluator, None)?;
    Ok(run.into_history())
}
