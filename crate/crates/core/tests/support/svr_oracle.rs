//! Slow reference solver for the ν-SVR dual, used only by tests.
//!
//! Works on the inequality form of the dual
//!   min ½ (α−α*)ᵀK(α−α*) − yᵀ(α−α*)
//!   s.t. 0 ≤ α, α* ≤ C/n,  Σ(α−α*) = 0,  Σ(α+α*) ≤ Cν
//! with accelerated projected gradient. The projection onto the feasible set
//! is computed exactly through its two multipliers by nested bisection.

#![allow(dead_code)]

pub struct OracleResult {
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub objective: f64,
}

pub fn gram(inputs: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    inputs
        .iter()
        .map(|a| {
            inputs
                .iter()
                .map(|b| {
                    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                    (-gamma * d2).exp()
                })
                .collect()
        })
        .collect()
}

pub fn standardize(y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    let s = (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt().max(1e-12);
    y.iter().map(|v| (v - m) / s).collect()
}

pub fn objective(k: &[Vec<f64>], y: &[f64], alpha: &[f64], alpha_star: &[f64]) -> f64 {
    let beta: Vec<f64> = alpha.iter().zip(alpha_star).map(|(a, b)| a - b).collect();
    let mut quad = 0.0;
    for i in 0..beta.len() {
        for j in 0..beta.len() {
            quad += beta[i] * k[i][j] * beta[j];
        }
    }
    0.5 * quad - beta.iter().zip(y).map(|(b, t)| b * t).sum::<f64>()
}

fn clip(v: f64, ub: f64) -> f64 {
    v.max(0.0).min(ub)
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    // f decreasing; returns root
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Euclidean projection of (a, b) onto the feasible set.
pub fn project(a: &[f64], b: &[f64], ub: f64, cap: f64) -> (Vec<f64>, Vec<f64>) {
    let big = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())) + ub + 1.0;
    let with = |lambda: f64, mu: f64| -> (f64, f64) {
        let mut diff = 0.0;
        let mut total = 0.0;
        for (&ai, &bi) in a.iter().zip(b) {
            let x = clip(ai - mu - lambda, ub);
            let y = clip(bi - mu + lambda, ub);
            diff += x - y;
            total += x + y;
        }
        (diff, total)
    };
    let lambda_for = |mu: f64| bisect(-2.0 * big, 2.0 * big, |l| with(l, mu).0);
    let total_at = |mu: f64| with(lambda_for(mu), mu).1;
    let mu = if total_at(0.0) <= cap { 0.0 } else { bisect(0.0, 2.0 * big, |m| total_at(m) - cap) };
    let lambda = lambda_for(mu);
    let x = a.iter().map(|&ai| clip(ai - mu - lambda, ub)).collect();
    let y = b.iter().map(|&bi| clip(bi - mu + lambda, ub)).collect();
    (x, y)
}

pub fn solve(k: &[Vec<f64>], y: &[f64], cost: f64, nu: f64, iterations: usize) -> OracleResult {
    let n = y.len();
    let ub = cost / n as f64;
    let cap = cost * nu;
    let row_max = k.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / (2.0 * row_max);

    let grad = |x: &[f64], xs: &[f64]| -> Vec<f64> {
        let beta: Vec<f64> = x.iter().zip(xs).map(|(p, q)| p - q).collect();
        (0..n).map(|i| (0..n).map(|j| k[i][j] * beta[j]).sum::<f64>() - y[i]).collect()
    };

    let (mut x, mut xs) = (vec![0.0; n], vec![0.0; n]);
    let (mut px, mut pxs) = (x.clone(), xs.clone());
    let mut t = 1.0f64;
    let mut last = objective(k, y, &x, &xs);
    for _ in 0..iterations {
        let g = grad(&px, &pxs);
        let a: Vec<f64> = (0..n).map(|i| px[i] - step * g[i]).collect();
        let b: Vec<f64> = (0..n).map(|i| pxs[i] + step * g[i]).collect();
        let (nx, nxs) = project(&a, &b, ub, cap);
        let obj = objective(k, y, &nx, &nxs);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if obj > last {
            // adaptive restart
            t = 1.0;
            px = x.clone();
            pxs = xs.clone();
            continue;
        }
        let w = (t - 1.0) / t_next;
        px = (0..n).map(|i| nx[i] + w * (nx[i] - x[i])).collect();
        pxs = (0..n).map(|i| nxs[i] + w * (nxs[i] - xs[i])).collect();
        x = nx;
        xs = nxs;
        t = t_next;
        last = obj;
    }
    OracleResult { objective: objective(k, y, &x, &xs), alpha: x, alpha_star: xs }
}
