use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::evaluator::BatchEvaluator;
use crate::scalar::Scalar;
use crate::space::{DesignPoint, DesignSpace};

/// Global maximum of the cosine mixture, attained at the origin.
pub const COSINE_MIXTURE_OPTIMUM: f64 = 0.2;

/// `0.1 Σ cos(5π xⱼ) − Σ xⱼ²` on `[−1, 1]^d`.
pub fn cosine_mixture<T: Scalar>(x: &[T]) -> Result<T> {
    let one = T::one();
    if let Some((j, v)) = x.iter().enumerate().find(|(_, &v)| !(v >= -one && v <= one)) {
        return Err(Error::domain(format!("cosine mixture coordinate {j} = {v} outside [-1, 1]")));
    }
    let five_pi = T::lit(5.0 * PI);
    let waves: T = x.iter().map(|&v| (five_pi * v).cos()).sum();
    let bowl: T = x.iter().map(|&v| v * v).sum();
    Ok(T::lit(0.1) * waves - bowl)
}

#[derive(Debug, Clone, Copy)]
pub struct CosineMixture {
    pub dim: usize,
}

impl CosineMixture {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn space<T: Scalar>(&self) -> DesignSpace<T> {
        DesignSpace::cube(self.dim, -T::one(), T::one()).expect("valid cube")
    }
}

impl<T: Scalar> BatchEvaluator<T> for CosineMixture {
    fn evaluate(&mut self, batch: &[DesignPoint<T>], _iteration: usize) -> Result<Vec<T>> {
        batch.iter().map(|p| cosine_mixture(&p.coords)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert!((cosine_mixture(&[0.0, 0.0]).unwrap() - 0.2f64).abs() < 1e-15);
        assert!((cosine_mixture(&[1.0, 1.0]).unwrap() + 2.2f64).abs() < 1e-12);
        assert!((cosine_mixture(&[0.4, 0.0]).unwrap() - 0.04f64).abs() < 1e-12);
        assert!(cosine_mixture(&[1.01f64, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_under_permutation_and_sign(x in -1.0f64..=1.0, y in -1.0f64..=1.0) {
            let z = cosine_mixture(&[x, y]).unwrap();
            prop_assert!((z - cosine_mixture(&[y, x]).unwrap()).abs() < 1e-15);
            prop_assert_eq!(z, cosine_mixture(&[-x, y]).unwrap());
            prop_assert_eq!(z, cosine_mixture(&[x, -y]).unwrap());
        }
    }
}
