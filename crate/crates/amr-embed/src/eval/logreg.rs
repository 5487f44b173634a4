//! Multinomial logistic regression over frozen features, fitted by batch
//! gradient descent with step-size halving whenever a step would raise the
//! loss. That guard makes the training loss non-increasing by construction.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::EvalError;

const GRAD_TOLERANCE: f64 = 1e-5;
const MAX_ITERATIONS: usize = 1000;
const MIN_STEP: f64 = 1e-15;

#[derive(Debug, Clone, Serialize)]
pub struct LogRegModel {
    pub classes: usize,
    pub features: usize,
    /// Row-major classes x features.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub reg: f64,
}

impl LogRegModel {
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.features);
        (0..self.classes)
            .map(|k| {
                let row = &self.weights[k * self.features..(k + 1) * self.features];
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias[k]
            })
            .collect()
    }

    /// Argmax class; ties resolve to the lowest index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let logits = self.logits(x);
        let mut best = 0;
        for (k, l) in logits.iter().enumerate() {
            if *l > logits[best] {
                best = k;
            }
        }
        best
    }
}

/// Fraction of examples the model labels correctly.
pub fn accuracy(model: &LogRegModel, features: &[Vec<f64>], labels: &[usize]) -> f64 {
    assert_eq!(features.len(), labels.len());
    if features.is_empty() {
        return 0.0;
    }
    let hits = features
        .iter()
        .zip(labels)
        .filter(|(x, &y)| model.predict(x) == y)
        .count();
    hits as f64 / features.len() as f64
}

/// Mean cross-entropy plus (reg/2)*||W||^2, and its gradient.
fn loss_and_grad(
    weights: &[f64],
    bias: &[f64],
    classes: usize,
    dim: usize,
    features: &[Vec<f64>],
    labels: &[usize],
    reg: f64,
) -> (f64, Vec<f64>, Vec<f64>) {
    let n = features.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = vec![0.0; bias.len()];

    for (x, &y) in features.iter().zip(labels) {
        let logits: Vec<f64> = (0..classes)
            .map(|k| {
                let row = &weights[k * dim..(k + 1) * dim];
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias[k]
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        loss += lse - logits[y];
        for k in 0..classes {
            let p = (logits[k] - lse).exp();
            let delta = (p - if k == y { 1.0 } else { 0.0 }) / n;
            gb[k] += delta;
            for (g, v) in gw[k * dim..(k + 1) * dim].iter_mut().zip(x) {
                *g += delta * v;
            }
        }
    }
    loss /= n;
    for (g, w) in gw.iter_mut().zip(weights) {
        *g += reg * w;
    }
    loss += 0.5 * reg * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, gw, gb)
}

/// Fit and keep the per-iteration loss curve.
pub fn fit_logreg_history(
    features: &[Vec<f64>],
    labels: &[usize],
    reg: f64,
    seed: u64,
) -> Result<(LogRegModel, Vec<f64>), EvalError> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(EvalError::EmptyInput);
    }
    let dim = features[0].len();
    if dim == 0 || features.iter().any(|x| x.len() != dim) {
        return Err(EvalError::DimensionMismatch { a: dim, b: 0 });
    }
    let classes = labels.iter().max().unwrap() + 1;
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(EvalError::DegenerateLabels);
    }
    if reg.is_nan() || reg < 0.0 {
        return Err(EvalError::Embed(format!("negative regularization {reg}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = Uniform::new(-0.01, 0.01);
    let mut weights: Vec<f64> = (0..classes * dim).map(|_| init.sample(&mut rng)).collect();
    let mut bias: Vec<f64> = (0..classes).map(|_| init.sample(&mut rng)).collect();

    let mut step = 1.0;
    let (mut loss, mut gw, mut gb) =
        loss_and_grad(&weights, &bias, classes, dim, features, labels, reg);
    let mut history = vec![loss];

    for _ in 0..MAX_ITERATIONS {
        let grad_norm = gw.iter().chain(&gb).map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm < GRAD_TOLERANCE {
            break;
        }
        // Backtracking: shrink the step until it stops hurting.
        let accepted = loop {
            let try_w: Vec<f64> = weights.iter().zip(&gw).map(|(w, g)| w - step * g).collect();
            let try_b: Vec<f64> = bias.iter().zip(&gb).map(|(b, g)| b - step * g).collect();
            let (try_loss, try_gw, try_gb) =
                loss_and_grad(&try_w, &try_b, classes, dim, features, labels, reg);
            if try_loss <= loss {
                break Some((try_loss, try_w, try_b, try_gw, try_gb));
            }
            step /= 2.0;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((new_loss, new_w, new_b, new_gw, new_gb)) = accepted else {
            break;
        };
        loss = new_loss;
        weights = new_w;
        bias = new_b;
        gw = new_gw;
        gb = new_gb;
        history.push(loss);
    }

    let model = LogRegModel { classes, features: dim, weights, bias, reg };
    Ok((model, history))
}

/// Fit a softmax classifier; see [`fit_logreg_history`] for the schedule.
pub fn fit_logreg(
    features: &[Vec<f64>],
    labels: &[usize],
    reg: f64,
    seed: u64,
) -> Result<LogRegModel, EvalError> {
    fit_logreg_history(features, labels, reg, seed).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn two_clusters() -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            let jitter = i as f64 * 0.05;
            features.push(vec![1.0 + jitter, 1.0 - jitter]);
            labels.push(0);
            features.push(vec![-1.0 - jitter, -1.0 + jitter]);
            labels.push(1);
        }
        (features, labels)
    }

    #[test]
    fn separable_clusters_are_fit_exactly() {
        let (features, labels) = two_clusters();
        let model = fit_logreg(&features, &labels, 0.01, 3).unwrap();
        assert_eq!(accuracy(&model, &features, &labels), 1.0);
    }

    #[test]
    fn constant_features_predict_the_majority_class() {
        let features = vec![vec![2.0, 2.0]; 9];
        let labels = vec![0, 1, 1, 1, 0, 1, 1, 0, 1];
        let model = fit_logreg(&features, &labels, 0.001, 5).unwrap();
        for x in &features {
            assert_eq!(model.predict(x), 1);
        }
        assert_eq!(model.predict(&[0.0, 0.0]), 1);
    }

    fn gaussian_clusters(
        seed: u64,
        per_class: usize,
    ) -> (Vec<Vec<f64>>, Vec<usize>) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]];
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (label, c) in centers.iter().enumerate() {
            for _ in 0..per_class {
                // Box-Muller keeps the noise roughly unit Gaussian.
                let u1: f64 = rng.gen_range(1e-9..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                let r = (-2.0 * u1.ln()).sqrt() * 0.7;
                let (dx, dy) = (
                    r * (2.0 * std::f64::consts::PI * u2).cos(),
                    r * (2.0 * std::f64::consts::PI * u2).sin(),
                );
                features.push(vec![c[0] + dx, c[1] + dy]);
                labels.push(label);
            }
        }
        (features, labels)
    }

    #[test]
    fn three_gaussians_generalize_above_ninety_percent() {
        let (train_x, train_y) = gaussian_clusters(11, 50);
        let (dev_x, dev_y) = gaussian_clusters(12, 20);
        let model = fit_logreg(&train_x, &train_y, 0.01, 7).unwrap();
        let acc = accuracy(&model, &dev_x, &dev_y);
        assert!(acc > 0.9, "dev accuracy {acc}");
    }

    #[test]
    fn loss_never_increases() {
        let (features, labels) = gaussian_clusters(21, 30);
        let (_, history) = fit_logreg_history(&features, &labels, 0.1, 1).unwrap();
        assert!(history.len() > 2);
        for w in history.windows(2) {
            assert!(w[1] <= w[0], "loss rose from {} to {}", w[0], w[1]);
        }
    }

    #[test]
    fn prediction_survives_weight_shift() {
        let (features, labels) = two_clusters();
        let mut model = fit_logreg(&features, &labels, 0.01, 9).unwrap();
        let before: Vec<usize> = features.iter().map(|x| model.predict(x)).collect();
        // Add the same vector to every class row and the same scalar to
        // every bias: softmax is shift invariant.
        let shift: Vec<f64> = (0..model.features).map(|j| 0.33 * (j as f64 + 1.0)).collect();
        for k in 0..model.classes {
            let row = &mut model.weights[k * model.features..(k + 1) * model.features];
            for (w, s) in row.iter_mut().zip(&shift) {
                *w += s;
            }
            model.bias[k] += 5.5;
        }
        let after: Vec<usize> = features.iter().map(|x| model.predict(x)).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn single_class_is_degenerate() {
        let features = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            fit_logreg(&features, &[0, 0], 0.1, 0),
            Err(EvalError::DegenerateLabels)
        ));
    }

    #[test]
    fn same_seed_same_model() {
        let (features, labels) = two_clusters();
        let a = fit_logreg(&features, &labels, 0.05, 17).unwrap();
        let b = fit_logreg(&features, &labels, 0.05, 17).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.bias, b.bias);
    }

    #[test]
    fn rejects_empty_and_ragged_inputs() {
        assert!(matches!(fit_logreg(&[], &[], 0.1, 0), Err(EvalError::EmptyInput)));
        let ragged = vec![vec![1.0, 2.0], vec![1.0]];
        assert!(matches!(
            fit_logreg(&ragged, &[0, 1], 0.1, 0),
            Err(EvalError::DimensionMismatch { .. })
        ));
    }
}
