//! Batch proposal: exploration points from the weak learner's two-stage
//! nominee screen, exploitation points from DE restarts on the committee.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{percentile, Sense};
use crate::error::{Error, Result};
use crate::evolutionary::de::{de_optimize, DeParams};
use crate::rng::RngStream;
use crate::scalar::{sq_dist, Scalar};
use crate::space::DesignSpace;
use crate::strong::Committee;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub nominee_count: usize,
    /// Elite percentile rank `k` in (0, 100).
    pub k_percentile: f64,
    /// Strong-learner optima closer than this (unit-cube distance) are merged.
    pub duplicate_distance: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { nominee_count: 10_000, k_percentile: 75.0, duplicate_distance: 1e-6 }
    }
}

impl SamplerConfig {
    pub fn validate(&self, batch_size: usize) -> Result<()> {
        if self.nominee_count < batch_size {
            return Err(Error::domain(format!(
                "nominee_count {} is smaller than the batch size {batch_size}",
                self.nominee_count
            )));
        }
        if !(self.k_percentile > 0.0 && self.k_percentile < 100.0) {
            return Err(Error::domain(format!("k_percentile must lie in (0, 100), got {}", self.k_percentile)));
        }
        if !(self.duplicate_distance >= 0.0) {
            return Err(Error::domain("duplicate_distance must be non-negative"));
        }
        Ok(())
    }
}

/// `count` i.i.d. uniform points of `[0,1]^dim`.
pub fn generate_nominees<T: Scalar>(dim: usize, count: usize, rng: RngStream) -> Vec<Vec<T>> {
    let mut r = rng.rng();
    (0..count).map(|_| r.unit_vector(dim)).collect()
}

/// Elite threshold: the `k`-th percentile for maximization, the `(100−k)`-th
/// for minimization.
pub fn elite_threshold<T: Scalar>(predictions: &[T], k: f64, sense: Sense) -> Result<T> {
    match sense {
        Sense::Maximize => percentile(predictions, k),
        Sense::Minimize => percentile(predictions, 100.0 - k),
    }
}

/// Indices whose prediction passes the elite threshold, in input order.
pub fn elite_indices<T: Scalar>(predictions: &[T], k: f64, sense: Sense) -> Result<Vec<usize>> {
    let lambda = elite_threshold(predictions, k, sense)?;
    Ok(predictions
        .iter()
        .enumerate()
        .filter(|(_, &p)| match sense {
            Sense::Maximize => p >= lambda,
            Sense::Minimize => p <= lambda,
        })
        .map(|(i, _)| i)
        .collect())
}

/// First selection stage: drop nominees predicted below the elite threshold.
pub fn filter_elite<T: Scalar>(nominees: &[Vec<T>], predictions: &[T], k: f64, sense: Sense) -> Result<Vec<Vec<T>>> {
    if nominees.len() != predictions.len() {
        return Err(Error::domain(format!(
            "{} nominees but {} predictions",
            nominees.len(),
            predictions.len()
        )));
    }
    Ok(elite_indices(predictions, k, sense)?.into_iter().map(|i| nominees[i].clone()).collect())
}

/// Second selection stage: pick `p` survivors one at a time, each maximizing
/// its minimum distance to everything sampled or picked so far. Ties go to
/// the lowest index.
pub fn select_diverse<T: Scalar>(survivors: &[Vec<T>], already_sampled: &[Vec<T>], p: usize) -> Result<Vec<Vec<T>>> {
    if survivors.len() < p {
        return Err(Error::domain(format!("{} survivors cannot supply {p} points", survivors.len())));
    }
    // squared distances preserve the ordering
    let mut d_min: Vec<T> = survivors
        .par_iter()
        .map(|s| already_sampled.iter().map(|a| sq_dist(s, a)).fold(T::infinity(), T::min))
        .collect();
    let mut taken = vec![false; survivors.len()];
    let mut out = Vec::with_capacity(p);
    for _ in 0..p {
        let mut best: Option<usize> = None;
        for (i, &d) in d_min.iter().enumerate() {
            if !taken[i] && best.is_none_or(|b| d > d_min[b]) {
                best = Some(i);
            }
        }
        let b = best.expect("pool has enough survivors");
        taken[b] = true;
        let pick = survivors[b].clone();
        for (i, d) in d_min.iter_mut().enumerate() {
            if !taken[i] {
                *d = d.min(sq_dist(&survivors[i], &pick));
            }
        }
        out.push(pick);
    }
    Ok(out)
}

/// `count` independent DE searches on the committee surface (unit cube),
/// with results closer than `duplicate_distance` collapsed.
pub fn surrogate_optima<T: Scalar>(
    committee: &Committee<T>,
    dim: usize,
    count: usize,
    de_params: &DeParams,
    rng: RngStream,
    sense: Sense,
    duplicate_distance: f64,
) -> Result<Vec<Vec<T>>> {
    let unit = DesignSpace::cube(dim, T::zero(), T::one())?;
    let found = (0..count)
        .into_par_iter()
        .map(|r| de_optimize(|u: &[T]| committee.predict_one(u), &unit, de_params, rng.child(r as u64), sense))
        .collect::<Result<Vec<_>>>()?;
    let tol = T::lit(duplicate_distance);
    let mut distinct: Vec<Vec<T>> = Vec::new();
    for res in found {
        let u = res.best_point.coords;
        if distinct.iter().all(|d| sq_dist(d, &u).sqrt() >= tol && !(tol == T::zero() && *d == u)) {
            distinct.push(u);
        }
    }
    Ok(distinct)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominees_are_uniform_and_reproducible() {
        let a: Vec<Vec<f64>> = generate_nominees(2, 3, RngStream::new(1, 2));
        assert_eq!(a.len(), 3);
        assert!(a.iter().flatten().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(a, generate_nominees(2, 3, RngStream::new(1, 2)));
        let many: Vec<Vec<f64>> = generate_nominees(2, 10_000, RngStream::new(5, 0));
        for j in 0..2 {
            let m = many.iter().map(|u| u[j]).sum::<f64>() / 10_000.0;
            assert!((m - 0.5).abs() < 0.02, "coordinate {j} mean {m}");
        }
    }

    #[test]
    fn elite_filter_examples() {
        let nominees: Vec<Vec<f64>> = (1..=8).map(|i| vec![i as f64 / 10.0]).collect();
        let preds: Vec<f64> = (1..=8).map(f64::from).collect();
        let s = filter_elite(&nominees, &preds, 75.0, Sense::Maximize).unwrap();
        assert_eq!(s, vec![vec![0.6], vec![0.7], vec![0.8]]);

        let flat = vec![2.0; 8];
        assert_eq!(filter_elite(&nominees, &flat, 75.0, Sense::Maximize).unwrap().len(), 8);

        let two = vec![vec![0.1], vec![0.2]];
        let s = filter_elite(&two, &[5.0, 1.0], 75.0, Sense::Maximize).unwrap();
        assert!(s.contains(&vec![0.1]));

        let s = filter_elite(&nominees, &preds, 75.0, Sense::Minimize).unwrap();
        assert_eq!(s, vec![vec![0.1], vec![0.2]]);

        assert!(filter_elite(&two, &[1.0], 75.0, Sense::Maximize).is_err());
    }

    #[test]
    fn survivor_count_matches_nearest_rank() {
        for n in [1usize, 2, 7, 40, 101] {
            let preds: Vec<f64> = (0..n).map(|i| (i * 37 % n) as f64).collect();
            let idx = elite_indices(&preds, 75.0, Sense::Maximize).unwrap();
            let expected = n - (0.75 * n as f64).ceil() as usize + 1;
            assert_eq!(idx.len(), expected, "n = {n}");
        }
    }

    #[test]
    fn diverse_selection_examples() {
        let s = vec![vec![0.1], vec![0.5], vec![0.9]];
        assert_eq!(select_diverse(&s, &[vec![0.0]], 1).unwrap(), vec![vec![0.9]]);
        assert_eq!(select_diverse(&s, &[vec![0.0]], 2).unwrap(), vec![vec![0.9], vec![0.5]]);
        assert_eq!(select_diverse(&s, &[], 1).unwrap(), vec![vec![0.1]]);
        assert!(select_diverse(&s, &[], 4).is_err());
    }
}
