//! Weak learner: ν-support-vector regression with an RBF kernel.
//!
//! The dual is solved in the two-block form
//!
//! ```text
//! min ½ βᵀKβ − yᵀβ,   β = α − α*
//! s.t. 0 ≤ αᵢ, α*ᵢ ≤ C/n,   Σα = Σα* = Cν/2
//! ```
//!
//! which is equivalent to the usual `Σβ = 0, Σ(α + α*) ≤ Cν` statement (the
//! inequality is active at any optimum unless the targets are constant, where
//! the objective is flat). Pairs are updated inside one block at a time with
//! second-order working-set selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::{mean, sq_dist, std_dev, Scalar};

/// Training inputs below this many rows are predicted serially.
const PAR_THRESHOLD: usize = 256;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakHyperparams {
    pub cost: f64,
    pub nu: f64,
    /// Kernel width; `None` means `1 / dimension count`.
    pub gamma: Option<f64>,
    pub kkt_tolerance: f64,
}

impl Default for WeakHyperparams {
    fn default() -> Self {
        Self { cost: 16.0, nu: 0.5, gamma: None, kkt_tolerance: 1e-3 }
    }
}

impl WeakHyperparams {
    pub fn gamma_for(&self, dim: usize) -> f64 {
        self.gamma.unwrap_or(1.0 / dim as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cost > 0.0) {
            return Err(Error::domain(format!("SVR cost must be positive, got {}", self.cost)));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::domain(format!("SVR nu must lie in (0, 1], got {}", self.nu)));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) {
                return Err(Error::domain(format!("SVR gamma must be positive, got {g}")));
            }
        }
        if !(self.kkt_tolerance > 0.0) {
            return Err(Error::domain("SVR KKT tolerance must be positive"));
        }
        Ok(())
    }
}

/// Solution of the ν-SVR dual on standardized targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DualSolution<T: Scalar> {
    pub alpha: Vec<T>,
    pub alpha_star: Vec<T>,
    /// Decision-function offset in standardized units.
    pub bias: T,
    /// `½ βᵀKβ − yᵀβ` at the returned point.
    pub objective: T,
    /// Largest violating-pair gap at exit.
    pub kkt_residual: T,
    pub iterations: usize,
    /// Per-sample box bound `C/n`.
    pub upper: T,
}

impl<T: Scalar> DualSolution<T> {
    pub fn coeffs(&self) -> Vec<T> {
        self.alpha.iter().zip(&self.alpha_star).map(|(&a, &b)| a - b).collect()
    }
}

/// Solve the ν-SVR dual for a precomputed, row-major `n × n` kernel matrix.
pub fn solve_nu_svr<T: Scalar>(
    kernel: &[T],
    targets: &[T],
    cost: f64,
    nu: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<DualSolution<T>> {
    let n = targets.len();
    if kernel.len() != n * n {
        return Err(Error::domain("kernel matrix size does not match target count"));
    }
    let upper = T::lit(cost / n as f64);
    let tol = T::lit(tolerance);
    let tau = T::lit(TAU);
    let k = |i: usize, j: usize| kernel[i * n + j];

    // Greedy feasible start: both blocks carry Cν/2, so β = 0.
    let mut alpha = vec![T::zero(); n];
    let mut alpha_star = vec![T::zero(); n];
    for block in [&mut alpha, &mut alpha_star] {
        let mut remaining = T::lit(cost * nu / 2.0);
        for a in block.iter_mut() {
            let v = remaining.min(upper);
            *a = v;
            remaining -= v;
        }
    }

    // kb = Kβ; gradient of block +1 is kb − y, of block −1 is y − kb.
    let mut kb = vec![T::zero(); n];
    let mut iterations = 0;
    let mut residual;
    loop {
        let mut best: Option<(bool, usize, usize, T)> = None;
        residual = T::zero();
        for positive in [true, false] {
            let z = if positive { &alpha } else { &alpha_star };
            let grad = |t: usize| if positive { kb[t] - targets[t] } else { targets[t] - kb[t] };
            let mut i_up = None;
            let mut g_min = T::infinity();
            let mut g_max = T::neg_infinity();
            for t in 0..n {
                let g = grad(t);
                if z[t] < upper && g < g_min {
                    g_min = g;
                    i_up = Some(t);
                }
                if z[t] > T::zero() && g > g_max {
                    g_max = g;
                }
            }
            let Some(i) = i_up else { continue };
            if g_max > g_min {
                residual = residual.max(g_max - g_min);
            }
            for j in 0..n {
                if j == i || !(z[j] > T::zero()) {
                    continue;
                }
                let b = grad(j) - g_min;
                if b > T::zero() {
                    let eta = (k(i, i) + k(j, j) - k(i, j) - k(i, j)).max(tau);
                    let gain = b * b / eta;
                    if best.is_none_or(|(_, _, _, g)| gain > g) {
                        best = Some((positive, i, j, gain));
                    }
                }
            }
        }
        if residual <= tol {
            break;
        }
        let Some((positive, i, j, _)) = best else { break };
        if iterations >= max_iterations {
            return Err(Error::Training { iterations, residual: residual.as_f64() });
        }
        iterations += 1;

        let z = if positive { &mut alpha } else { &mut alpha_star };
        let (gi, gj) = if positive {
            (kb[i] - targets[i], kb[j] - targets[j])
        } else {
            (targets[i] - kb[i], targets[j] - kb[j])
        };
        let eta = (k(i, i) + k(j, j) - k(i, j) - k(i, j)).max(tau);
        let delta = ((gj - gi) / eta).min(upper - z[i]).min(z[j]);
        if !(delta > T::zero()) {
            break;
        }
        z[i] += delta;
        z[j] -= delta;
        if z[j] < T::zero() {
            z[j] = T::zero();
        }
        if z[i] > upper {
            z[i] = upper;
        }
        // Change in β at samples i and j.
        let (di, dj) = if positive { (delta, -delta) } else { (-delta, delta) };
        for (t, v) in kb.iter_mut().enumerate() {
            *v += di * k(t, i) + dj * k(t, j);
        }
    }

    let bias = -offset(&alpha, &alpha_star, &kb, targets, upper);
    let beta: Vec<T> = alpha.iter().zip(&alpha_star).map(|(&a, &b)| a - b).collect();
    let objective = T::lit(0.5) * beta.iter().zip(&kb).map(|(&b, &q)| b * q).sum::<T>()
        - beta.iter().zip(targets).map(|(&b, &y)| b * y).sum::<T>();
    Ok(DualSolution { alpha, alpha_star, bias, objective, kkt_residual: residual, iterations, upper })
}

/// `rho = (r₊ − r₋)/2` from the block multipliers, averaged over free variables.
fn offset<T: Scalar>(alpha: &[T], alpha_star: &[T], kb: &[T], y: &[T], upper: T) -> T {
    let block = |z: &[T], positive: bool| {
        let (mut lb, mut ub) = (T::neg_infinity(), T::infinity());
        let (mut sum, mut count) = (T::zero(), 0usize);
        for t in 0..z.len() {
            let g = if positive { kb[t] - y[t] } else { y[t] - kb[t] };
            if z[t] >= upper {
                lb = lb.max(g);
            } else if z[t] <= T::zero() {
                ub = ub.min(g);
            } else {
                sum += g;
                count += 1;
            }
        }
        if count > 0 {
            sum / T::from_usize_lossy(count)
        } else if lb.is_finite() && ub.is_finite() {
            (lb + ub) / T::lit(2.0)
        } else if lb.is_finite() {
            lb
        } else if ub.is_finite() {
            ub
        } else {
            T::zero()
        }
    };
    (block(alpha, true) - block(alpha_star, false)) / T::lit(2.0)
}

#[inline]
pub fn rbf<T: Scalar>(gamma: T, u: &[T], v: &[T]) -> T {
    (-gamma * sq_dist(u, v)).exp()
}

/// Row-major RBF Gram matrix.
pub fn rbf_gram<T: Scalar>(inputs: &[Vec<T>], gamma: T) -> Vec<T> {
    let n = inputs.len();
    let mut k = vec![T::zero(); n * n];
    for i in 0..n {
        k[i * n + i] = T::one();
        for j in 0..i {
            let v = rbf(gamma, &inputs[i], &inputs[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Trained weak learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WeakModel<T: Scalar> {
    pub support_points: Vec<Vec<T>>,
    pub dual_coeffs: Vec<T>,
    pub bias: T,
    pub gamma: T,
    pub target_shift: T,
    pub target_scale: T,
    /// Full dual solution over all training rows.
    pub dual: DualSolution<T>,
}

/// Train the weak learner on every record of `data` (normalized inputs,
/// standardized targets).
pub fn fit_weak<T: Scalar>(data: &Dataset<T>, hp: &WeakHyperparams) -> Result<WeakModel<T>> {
    fit_weak_raw(data.unit_inputs(), &data.fitness(), hp)
}

/// [`fit_weak`] on raw unit-cube inputs and fitness values.
pub fn fit_weak_raw<T: Scalar>(inputs: &[Vec<T>], fitness: &[T], hp: &WeakHyperparams) -> Result<WeakModel<T>> {
    hp.validate()?;
    let n = inputs.len();
    if n < 2 {
        return Err(Error::domain(format!("weak learner needs at least 2 records, got {n}")));
    }
    if fitness.len() != n {
        return Err(Error::domain("input and target counts differ"));
    }
    let dim = inputs[0].len();
    let gamma = T::lit(hp.gamma_for(dim));
    let shift = mean(fitness);
    let scale = std_dev(fitness).max(T::lit(1e-12));
    let targets: Vec<T> = fitness.iter().map(|&y| (y - shift) / scale).collect();

    let kernel = rbf_gram(inputs, gamma);
    let dual = solve_nu_svr(&kernel, &targets, hp.cost, hp.nu, hp.kkt_tolerance, 100 * n * n)?;

    let mut support_points = Vec::new();
    let mut dual_coeffs = Vec::new();
    for (u, c) in inputs.iter().zip(dual.coeffs()) {
        if c != T::zero() {
            support_points.push(u.clone());
            dual_coeffs.push(c);
        }
    }
    Ok(WeakModel {
        support_points,
        dual_coeffs,
        bias: dual.bias,
        gamma,
        target_shift: shift,
        target_scale: scale,
        dual,
    })
}

impl<T: Scalar> WeakModel<T> {
    /// Prediction at one unit-cube point, in fitness units.
    pub fn predict_one(&self, u: &[T]) -> T {
        let s: T = self
            .support_points
            .iter()
            .zip(&self.dual_coeffs)
            .map(|(sv, &c)| c * rbf(self.gamma, sv, u))
            .sum();
        self.target_scale * (s + self.bias) + self.target_shift
    }

    pub fn predict(&self, points: &[Vec<T>]) -> Vec<T> {
        predict_weak(self, points)
    }
}

pub fn predict_weak<T: Scalar>(model: &WeakModel<T>, points: &[Vec<T>]) -> Vec<T> {
    if points.len() * model.support_points.len().max(1) < PAR_THRESHOLD * 64 {
        points.iter().map(|u| model.predict_one(u)).collect()
    } else {
        points.par_iter().map(|u| model.predict_one(u)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn random_inputs(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = RngStream::new(seed, 0).rng();
        (0..n).map(|_| r.unit_vector(d)).collect()
    }

    #[test]
    fn constant_targets_predict_constant() {
        let x = random_inputs(12, 2, 1);
        let y = vec![3.25; 12];
        let m = fit_weak_raw(&x, &y, &WeakHyperparams::default()).unwrap();
        for u in x.iter().chain(random_inputs(20, 2, 2).iter()) {
            assert!((m.predict_one(u) - 3.25).abs() < 1e-6);
        }
    }

    #[test]
    fn too_few_records() {
        let err = fit_weak_raw(&[vec![0.5]], &[1.0], &WeakHyperparams::default()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn dual_feasibility() {
        let x = random_inputs(40, 3, 5);
        let y: Vec<f64> = x.iter().map(|u| (4.0 * u[0]).sin() + u[1] * u[2]).collect();
        let hp = WeakHyperparams::default();
        let m = fit_weak_raw(&x, &y, &hp).unwrap();
        let d = &m.dual;
        let ub = hp.cost / 40.0;
        for (&a, &b) in d.alpha.iter().zip(&d.alpha_star) {
            assert!((0.0..=ub + 1e-12).contains(&a));
            assert!((0.0..=ub + 1e-12).contains(&b));
        }
        let sum_beta: f64 = d.coeffs().iter().sum();
        let sum_all: f64 = d.alpha.iter().chain(&d.alpha_star).sum();
        assert!(sum_beta.abs() < 1e-9, "{sum_beta}");
        assert!(sum_all <= hp.cost * hp.nu + 1e-9);
        assert!(d.kkt_residual <= hp.kkt_tolerance);
        for c in &m.dual_coeffs {
            assert!(c.abs() <= ub + 1e-12);
        }
    }

    #[test]
    fn nu_property_on_noisy_sample() {
        let n = 50;
        let x = random_inputs(n, 2, 9);
        let mut noise = RngStream::new(9, 1).rng();
        let y: Vec<f64> = x.iter().map(|u| u[0] - 2.0 * u[1] * u[1] + 0.3 * (noise.unit::<f64>() - 0.5)).collect();
        let hp = WeakHyperparams::default();
        let m = fit_weak_raw(&x, &y, &hp).unwrap();
        let ub = hp.cost / n as f64;
        let d = &m.dual;
        let sv = (0..n).filter(|&i| d.alpha[i] > 0.0 || d.alpha_star[i] > 0.0).count();
        let errors = (0..n).filter(|&i| d.alpha[i] >= ub || d.alpha_star[i] >= ub).count();
        let (sv_frac, err_frac) = (sv as f64 / n as f64, errors as f64 / n as f64);
        assert!(sv_frac >= hp.nu - 2.0 / n as f64, "sv fraction {sv_frac}");
        assert!(err_frac <= hp.nu, "margin-error fraction {err_frac}");
    }

    #[test]
    fn batch_equals_single_and_empty_is_empty() {
        let x = random_inputs(30, 2, 3);
        let y: Vec<f64> = x.iter().map(|u| u[0] * u[1]).collect();
        let m = fit_weak_raw(&x, &y, &WeakHyperparams::default()).unwrap();
        assert!(m.predict(&[]).is_empty());
        let q = random_inputs(100, 2, 4);
        let batch = m.predict(&q);
        for (u, b) in q.iter().zip(&batch) {
            assert_eq!(m.predict_one(u), *b);
        }
    }

    #[test]
    fn permutation_invariance() {
        let x = random_inputs(25, 2, 11);
        let y: Vec<f64> = x.iter().map(|u| u[0] + u[1].powi(2)).collect();
        let hp = WeakHyperparams { kkt_tolerance: 1e-8, ..Default::default() };
        let m1 = fit_weak_raw(&x, &y, &hp).unwrap();
        let mut idx: Vec<usize> = (0..25).collect();
        RngStream::new(1, 1).rng().shuffle(&mut idx);
        let xp: Vec<_> = idx.iter().map(|&i| x[i].clone()).collect();
        let yp: Vec<_> = idx.iter().map(|&i| y[i]).collect();
        let m2 = fit_weak_raw(&xp, &yp, &hp).unwrap();
        for u in random_inputs(50, 2, 12) {
            assert!((m1.predict_one(&u) - m2.predict_one(&u)).abs() < 1e-5);
        }
    }

    #[test]
    fn deterministic() {
        let x = random_inputs(30, 2, 21);
        let y: Vec<f64> = x.iter().map(|u| u[0] - u[1]).collect();
        let hp = WeakHyperparams::default();
        assert_eq!(fit_weak_raw(&x, &y, &hp).unwrap(), fit_weak_raw(&x, &y, &hp).unwrap());
    }

    #[test]
    fn single_precision_fit() {
        let x: Vec<Vec<f32>> = random_inputs(20, 2, 3)
            .into_iter()
            .map(|v| v.into_iter().map(|a| a as f32).collect())
            .collect();
        let y: Vec<f32> = x.iter().map(|u| u[0] + u[1]).collect();
        let m = fit_weak_raw(&x, &y, &WeakHyperparams::default()).unwrap();
        assert!(m.predict(&x).iter().all(|v| v.is_finite()));
    }
}
