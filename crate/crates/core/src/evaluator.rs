use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::DesignPoint;

/// Ground-truth fitness oracle, called once per design iteration with the
/// whole batch. Results must come back in request order.
pub trait BatchEvaluator<T: Scalar> {
    fn evaluate(&mut self, batch: &[DesignPoint<T>], iteration: usize) -> Result<Vec<T>>;
}

/// Adapts a pointwise closure to [`BatchEvaluator`].
pub struct FnEvaluator<F>(pub F);

impl<T: Scalar, F: FnMut(&[T]) -> T> BatchEvaluator<T> for FnEvaluator<F> {
    fn evaluate(&mut self, batch: &[DesignPoint<T>], _iteration: usize) -> Result<Vec<T>> {
        Ok(batch.iter().map(|p| (self.0)(&p.coords)).collect())
    }
}

impl<T: Scalar, E: BatchEvaluator<T> + ?Sized> BatchEvaluator<T> for &mut E {
    fn evaluate(&mut self, batch: &[DesignPoint<T>], iteration: usize) -> Result<Vec<T>> {
        (**self).evaluate(batch, iteration)
    }
}

/// Call the evaluator and check the reply's length and finiteness.
pub(crate) fn evaluate_checked<T: Scalar, E: BatchEvaluator<T> + ?Sized>(
    evaluator: &mut E,
    batch: &[DesignPoint<T>],
    iteration: usize,
) -> Result<Vec<T>> {
    let values = evaluator.evaluate(batch, iteration)?;
    if values.len() != batch.len() {
        return Err(Error::Protocol {
            iteration,
            message: format!("evaluator returned {} values for {} designs", values.len(), batch.len()),
        });
    }
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Protocol { iteration, message: format!("non-finite fitness {v} for design {i}") });
    }
    Ok(values)
}
