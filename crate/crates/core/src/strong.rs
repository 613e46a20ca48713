//! Strong learner: a committee of small feed-forward networks whose averaged
//! output is the surrogate searched for exploitation points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{RngStream, StreamRng};
use crate::scalar::{mean, std_dev, Scalar};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden_layers: usize,
    pub neurons_per_layer: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 2,
            neurons_per_layer: 10,
            learning_rate: 0.05,
            max_epochs: 2000,
            patience: 50,
            validation_fraction: 0.2,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.neurons_per_layer == 0 {
            return Err(Error::domain("network needs at least one hidden layer and neuron"));
        }
        if !(self.learning_rate > 0.0) || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::domain("learning rate, max_epochs and patience must be positive"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return Err(Error::domain(format!(
                "validation_fraction must lie in (0, 0.5), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// Dense layer, weights stored row-major as `n_out × n_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Layer<T: Scalar> {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

/// Multi-layer perceptron: tanh hidden layers, linear scalar output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Network<T: Scalar> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> Network<T> {
    /// Glorot-uniform weights, zero biases.
    pub fn init(n_in: usize, cfg: &NetworkConfig, rng: &mut StreamRng) -> Self {
        let mut sizes = vec![n_in];
        sizes.extend(std::iter::repeat_n(cfg.neurons_per_layer, cfg.hidden_layers));
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = T::lit((6.0 / (fan_in + fan_out) as f64).sqrt());
                Layer {
                    n_in: fan_in,
                    n_out: fan_out,
                    weights: (0..fan_in * fan_out).map(|_| rng.uniform(-limit, limit)).collect(),
                    biases: vec![T::zero(); fan_out],
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Flat parameter vector: per layer, weights then biases.
    pub fn params(&self) -> Vec<T> {
        let mut p = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.biases);
        }
        p
    }

    pub fn set_params(&mut self, p: &[T]) {
        assert_eq!(p.len(), self.param_count());
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&p[at..at + nw]);
            at += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&p[at..at + nb]);
            at += nb;
        }
    }

    /// Raw (standardized-unit) output for one input.
    pub fn forward(&self, x: &[T]) -> T {
        let mut act = x.to_vec();
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let mut next = l.biases.clone();
            for (o, z) in next.iter_mut().enumerate() {
                let row = &l.weights[o * l.n_in..(o + 1) * l.n_in];
                *z += row.iter().zip(&act).map(|(&w, &a)| w * a).sum::<T>();
                if li != last {
                    *z = z.tanh();
                }
            }
            act = next;
        }
        act[0]
    }

    /// Mean-squared error over `rows` and its gradient w.r.t. [`Network::params`].
    pub fn loss_and_gradient(&self, inputs: &[Vec<T>], targets: &[T], rows: &[usize]) -> (T, Vec<T>) {
        let mut grad = vec![T::zero(); self.param_count()];
        let mut loss = T::zero();
        let offsets: Vec<usize> = self
            .layers
            .iter()
            .scan(0, |acc, l| {
                let at = *acc;
                *acc += l.weights.len() + l.biases.len();
                Some(at)
            })
            .collect();
        let last = self.layers.len() - 1;
        let inv_n = T::one() / T::from_usize_lossy(rows.len().max(1));
        let two = T::lit(2.0);

        let mut acts: Vec<Vec<T>> = Vec::with_capacity(self.layers.len() + 1);
        for &r in rows {
            acts.clear();
            acts.push(inputs[r].clone());
            for (li, l) in self.layers.iter().enumerate() {
                let prev = &acts[li];
                let mut next = l.biases.clone();
                for (o, z) in next.iter_mut().enumerate() {
                    let row = &l.weights[o * l.n_in..(o + 1) * l.n_in];
                    *z += row.iter().zip(prev).map(|(&w, &a)| w * a).sum::<T>();
                    if li != last {
                        *z = z.tanh();
                    }
                }
                acts.push(next);
            }
            let err = acts[self.layers.len()][0] - targets[r];
            loss += err * err * inv_n;

            // delta = dL/dz for the current layer's pre-activations
            let mut delta = vec![two * err * inv_n];
            for li in (0..self.layers.len()).rev() {
                let l = &self.layers[li];
                let prev = &acts[li];
                let off = offsets[li];
                for o in 0..l.n_out {
                    let d = delta[o];
                    let wrow = &mut grad[off + o * l.n_in..off + (o + 1) * l.n_in];
                    for (g, &a) in wrow.iter_mut().zip(prev) {
                        *g += d * a;
                    }
                    grad[off + l.weights.len() + o] += d;
                }
                if li > 0 {
                    let mut back = vec![T::zero(); l.n_in];
                    for o in 0..l.n_out {
                        let row = &l.weights[o * l.n_in..(o + 1) * l.n_in];
                        for (b, &w) in back.iter_mut().zip(row) {
                            *b += delta[o] * w;
                        }
                    }
                    // previous layer is tanh: d tanh = 1 − a²
                    for (b, &a) in back.iter_mut().zip(prev) {
                        *b *= T::one() - a * a;
                    }
                    delta = back;
                }
            }
        }
        (loss, grad)
    }

    pub fn loss(&self, inputs: &[Vec<T>], targets: &[T], rows: &[usize]) -> T {
        let inv_n = T::one() / T::from_usize_lossy(rows.len().max(1));
        rows.iter()
            .map(|&r| {
                let e = self.forward(&inputs[r]) - targets[r];
                e * e * inv_n
            })
            .sum()
    }
}

/// Outcome of training one member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainReport<T: Scalar> {
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_validation_loss: T,
    pub final_training_loss: T,
}

/// Full-batch Adam with validation early stopping; best-validation weights
/// are restored before returning.
pub fn train_network<T: Scalar>(
    net: &mut Network<T>,
    inputs: &[Vec<T>],
    targets: &[T],
    train_rows: &[usize],
    val_rows: &[usize],
    cfg: &NetworkConfig,
) -> TrainReport<T> {
    let lr = T::lit(cfg.learning_rate);
    let (b1, b2, eps) = (T::lit(ADAM_BETA1), T::lit(ADAM_BETA2), T::lit(ADAM_EPS));
    let mut params = net.params();
    let mut m = vec![T::zero(); params.len()];
    let mut v = vec![T::zero(); params.len()];
    let (mut b1t, mut b2t) = (T::one(), T::one());

    let mut best_params = params.clone();
    let mut best_val = net.loss(inputs, targets, val_rows);
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut epochs = 0;
    for epoch in 1..=cfg.max_epochs {
        epochs = epoch;
        let (_, g) = net.loss_and_gradient(inputs, targets, train_rows);
        b1t *= b1;
        b2t *= b2;
        for i in 0..params.len() {
            m[i] = b1 * m[i] + (T::one() - b1) * g[i];
            v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
            let mh = m[i] / (T::one() - b1t);
            let vh = v[i] / (T::one() - b2t);
            params[i] -= lr * mh / (vh.sqrt() + eps);
        }
        net.set_params(&params);
        let val = net.loss(inputs, targets, val_rows);
        if val < best_val {
            best_val = val;
            best_params.copy_from_slice(&params);
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    net.set_params(&best_params);
    TrainReport {
        epochs,
        best_epoch,
        best_validation_loss: best_val,
        final_training_loss: net.loss(inputs, targets, train_rows),
    }
}

/// Averaging ensemble of independently trained networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Committee<T: Scalar> {
    pub members: Vec<Network<T>>,
    pub reports: Vec<TrainReport<T>>,
    pub target_shift: T,
    pub target_scale: T,
}

pub fn fit_committee<T: Scalar>(
    data: &Dataset<T>,
    cfg: &NetworkConfig,
    members: usize,
    rng: RngStream,
) -> Result<Committee<T>> {
    fit_committee_raw(data.unit_inputs(), &data.fitness(), cfg, members, rng)
}

pub fn fit_committee_raw<T: Scalar>(
    inputs: &[Vec<T>],
    fitness: &[T],
    cfg: &NetworkConfig,
    members: usize,
    rng: RngStream,
) -> Result<Committee<T>> {
    cfg.validate()?;
    let n = inputs.len();
    if members == 0 {
        return Err(Error::domain("committee needs at least one member"));
    }
    if n < members + 2 || n < 3 {
        return Err(Error::domain(format!(
            "committee of {members} needs at least {} records, got {n}",
            (members + 2).max(3)
        )));
    }
    if fitness.len() != n {
        return Err(Error::domain("input and target counts differ"));
    }
    let shift = mean(fitness);
    let scale = std_dev(fitness).max(T::lit(1e-12));
    let targets: Vec<T> = fitness.iter().map(|&y| (y - shift) / scale).collect();
    let n_val = ((cfg.validation_fraction * n as f64).round() as usize).clamp(1, n - 2);
    let dim = inputs[0].len();

    let trained: Vec<(Network<T>, TrainReport<T>)> = (0..members)
        .into_par_iter()
        .map(|mi| {
            let mut r = rng.child(mi as u64).rng();
            let mut net = Network::init(dim, cfg, &mut r);
            let mut rows: Vec<usize> = (0..n).collect();
            r.shuffle(&mut rows);
            let (val, train) = rows.split_at(n_val);
            let report = train_network(&mut net, inputs, &targets, train, val, cfg);
            (net, report)
        })
        .collect();
    let (members, reports) = trained.into_iter().unzip();
    Ok(Committee { members, reports, target_shift: shift, target_scale: scale })
}

impl<T: Scalar> Committee<T> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// One member's prediction in fitness units.
    pub fn member_predict_one(&self, member: usize, u: &[T]) -> T {
        self.target_scale * self.members[member].forward(u) + self.target_shift
    }

    pub fn predict_one(&self, u: &[T]) -> T {
        let total: T = (0..self.members.len()).map(|m| self.member_predict_one(m, u)).sum();
        total / T::from_usize_lossy(self.members.len())
    }

    pub fn predict(&self, points: &[Vec<T>]) -> Vec<T> {
        predict_committee(self, points)
    }
}

pub fn predict_committee<T: Scalar>(committee: &Committee<T>, points: &[Vec<T>]) -> Vec<T> {
    points.iter().map(|u| committee.predict_one(u)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut r = RngStream::new(seed, 0).rng();
        let x: Vec<Vec<f64>> = (0..n).map(|_| r.unit_vector(2)).collect();
        let y = x.iter().map(|u| (2.0 * std::f64::consts::PI * u[0]).sin() * u[1]).collect();
        (x, y)
    }

    fn constant_net(value: f64) -> Network<f64> {
        let mut r = RngStream::new(0, 0).rng();
        let mut net = Network::init(2, &NetworkConfig::default(), &mut r);
        let mut p = vec![0.0; net.param_count()];
        *p.last_mut().unwrap() = value;
        net.set_params(&p);
        net
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (x, y) = toy(5, 3);
        let rows: Vec<usize> = (0..5).collect();
        let mut r = RngStream::new(7, 0).rng();
        let net = Network::<f64>::init(2, &NetworkConfig::default(), &mut r);
        // nudge biases off zero so their gradients are exercised
        let mut p = net.params();
        for (i, v) in p.iter_mut().enumerate() {
            *v += 0.01 * ((i % 7) as f64 - 3.0);
        }
        let mut net = net;
        net.set_params(&p);
        let (_, g) = net.loss_and_gradient(&x, &y, &rows);
        let h = 1e-5;
        for i in 0..p.len() {
            let mut plus = p.clone();
            plus[i] += h;
            let mut minus = p.clone();
            minus[i] -= h;
            let mut a = net.clone();
            a.set_params(&plus);
            let mut b = net.clone();
            b.set_params(&minus);
            let fd = (a.loss(&x, &y, &rows) - b.loss(&x, &y, &rows)) / (2.0 * h);
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-8);
            assert!(rel < 1e-4, "param {i}: backprop {} fd {fd} rel {rel}", g[i]);
        }
    }

    #[test]
    fn constant_targets() {
        let (x, _) = toy(20, 1);
        let y = vec![4.5; 20];
        let c = fit_committee_raw(&x, &y, &NetworkConfig::default(), 5, RngStream::new(1, 0)).unwrap();
        let mut r = RngStream::new(2, 0).rng();
        for _ in 0..50 {
            let u: Vec<f64> = r.unit_vector(2);
            assert!((c.predict_one(&u) - 4.5).abs() < 1e-3);
        }
    }

    #[test]
    fn fits_smooth_target() {
        let (x, y) = toy(50, 5);
        let c = fit_committee_raw(&x, &y, &NetworkConfig::default(), 5, RngStream::new(5, 0)).unwrap();
        let scale = c.target_scale;
        let mse: f64 = x
            .iter()
            .zip(&y)
            .map(|(u, t)| ((c.predict_one(u) - t) / scale).powi(2))
            .sum::<f64>()
            / 50.0;
        assert!(mse < 1e-2, "standardized training MSE {mse}");
    }

    #[test]
    fn committee_is_member_mean() {
        let mut c = Committee {
            members: vec![constant_net(1.0), constant_net(3.0)],
            reports: vec![],
            target_shift: 0.0,
            target_scale: 1.0,
        };
        assert_eq!(c.predict_one(&[0.2, 0.9]), 2.0);
        c.members = vec![constant_net(1.5); 3];
        assert_eq!(c.predict_one(&[0.3, 0.3]), c.member_predict_one(0, &[0.3, 0.3]));

        let (x, y) = toy(20, 8);
        let c = fit_committee_raw(&x, &y, &NetworkConfig::default(), 4, RngStream::new(8, 0)).unwrap();
        for u in &x {
            let manual: f64 = (0..4).map(|m| c.member_predict_one(m, u)).sum::<f64>() / 4.0;
            assert_eq!(c.predict_one(u), manual);
        }
    }

    #[test]
    fn early_stopping_restores_best() {
        let (x, y) = toy(30, 4);
        let rows: Vec<usize> = (0..30).collect();
        let (val, train) = rows.split_at(6);
        let cfg = NetworkConfig { patience: 5, ..Default::default() };
        let mut r = RngStream::new(4, 0).rng();
        let mut net = Network::init(2, &cfg, &mut r);
        let report = train_network(&mut net, &x, &y, train, val, &cfg);
        assert_eq!(net.loss(&x, &y, val), report.best_validation_loss);
        assert!(report.epochs >= report.best_epoch);
    }

    #[test]
    fn too_few_records() {
        let (x, y) = toy(6, 1);
        assert!(fit_committee_raw(&x, &y, &NetworkConfig::default(), 5, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn deterministic_under_parallel_training() {
        let (x, y) = toy(25, 2);
        let cfg = NetworkConfig { max_epochs: 200, ..Default::default() };
        let a = fit_committee_raw(&x, &y, &cfg, 5, RngStream::new(3, 1)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| fit_committee_raw(&x, &y, &cfg, 5, RngStream::new(3, 1)).unwrap());
        assert_eq!(a, b);
    }
}
