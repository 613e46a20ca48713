use crate::error::Result;
use crate::evaluator::BatchEvaluator;
use crate::history::RunHistory;
use crate::scalar::Scalar;

/// A batch optimizer advanced one design iteration at a time.
///
/// Implementors are plain serializable state, so a run can be checkpointed
/// between any two calls to [`Optimizer::step`] and resumed later with an
/// identical outcome.
pub trait Optimizer<T: Scalar> {
    /// Propose, evaluate and record one batch.
    fn step(&mut self, evaluator: &mut dyn BatchEvaluator<T>) -> Result<()>;

    fn history(&self) -> &RunHistory<T>;

    /// Budget exhausted or convergence declared.
    fn is_finished(&self) -> bool;

    /// Step until finished or until `max_steps` further iterations ran.
    fn run(&mut self, evaluator: &mut dyn BatchEvaluator<T>, max_steps: Option<usize>) -> Result<()> {
        let mut steps = 0;
        while !self.is_finished() && max_steps.is_none_or(|m| steps < m) {
            self.step(evaluator)?;
            steps += 1;
        }
        Ok(())
    }
}
