use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{seeded_rng, streams};

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledEmbeddingSet {
    pub embeddings: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub split_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// L2 penalty on the weights (the intercept is not penalized).
    pub lambda: f64,
    pub test_fraction: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { lambda: 1e-4, test_fraction: 0.2, tolerance: 1e-6, max_iterations: 10_000 }
    }
}

/// Fitted classifier: predicts `labels[1]` when `w.x + bias > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    pub labels: [String; 2],
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ProbeModel {
    pub fn predict(&self, x: &[f64]) -> &str {
        let s: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias;
        &self.labels[usize::from(s > 0.0)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// Percent correct on the held-out split.
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub model: ProbeModel,
}

/// Per-label shuffle, then the first `round(fraction * n_label)` of each
/// label go to the test side. Returns (train, test) indices.
pub fn stratified_split(labels: &[String], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = seeded_rng(seed, streams::PROBE_SPLIT);
    let classes: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        let k = (fraction * idx.len() as f64).round() as usize;
        test.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Largest eigenvalue of `A^T A / n` for the design matrix with an
/// appended intercept column, by power iteration.
fn design_curvature(x: &[&[f64]], dim: usize) -> f64 {
    let n = x.len() as f64;
    let mut v = vec![1.0 / ((dim + 1) as f64).sqrt(); dim + 1];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let mut next = vec![0.0; dim + 1];
        for row in x {
            let s: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + v[dim];
            for (o, a) in next.iter_mut().zip(row.iter()) {
                *o += s * a;
            }
            next[dim] += s;
        }
        next.iter_mut().for_each(|o| *o /= n);
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let converged = (norm - lambda).abs() <= 1e-9 * norm;
        lambda = norm;
        v = next.into_iter().map(|a| a / norm).collect();
        if converged {
            break;
        }
    }
    lambda
}

/// Binary logistic regression on a stratified split, fit by full-batch
/// gradient descent with step `1/L` on the mean log-loss plus
/// `lambda/2 |w|^2`.
pub fn train_language_probe(set: &LabeledEmbeddingSet, cfg: &ProbeConfig) -> Result<ProbeResult> {
    if set.embeddings.len() != set.labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} embeddings but {} labels",
            set.embeddings.len(),
            set.labels.len()
        )));
    }
    let classes: Vec<&str> = set.labels.iter().map(String::as_str).collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() != 2 {
        return Err(Error::invalid(format!("the probe needs exactly 2 labels, found {}", classes.len())));
    }
    for c in &classes {
        let n = set.labels.iter().filter(|l| l == c).count();
        if n < 10 {
            return Err(Error::invalid(format!("label `{c}` has {n} samples; at least 10 are needed")));
        }
    }
    let dim = set.embeddings[0].len();
    if dim == 0 || set.embeddings.iter().any(|e| e.len() != dim) {
        return Err(Error::ShapeMismatch("embeddings differ in dimension".into()));
    }
    if set.embeddings.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("probe embeddings".into()));
    }
    let (train, test) = stratified_split(&set.labels, cfg.test_fraction, set.split_seed);
    let x: Vec<&[f64]> = train.iter().map(|&i| set.embeddings[i].as_slice()).collect();
    let y: Vec<f64> = train.iter().map(|&i| f64::from(u8::from(set.labels[i] == classes[1]))).collect();
    let n = x.len() as f64;
    let step = 1.0 / (design_curvature(&x, dim) / 4.0 + cfg.lambda);

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut grad = vec![0.0; dim];
    let (mut iterations, mut converged) = (0, false);
    while iterations < cfg.max_iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (row, &yi) in x.iter().zip(&y) {
            let z: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
            let r = sigmoid(z) - yi;
            for (g, a) in grad.iter_mut().zip(row.iter()) {
                *g += r * a;
            }
            gb += r;
        }
        for (g, wi) in grad.iter_mut().zip(&w) {
            *g = *g / n + cfg.lambda * wi;
        }
        gb /= n;
        let norm = (grad.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
        if norm < cfg.tolerance {
            converged = true;
            break;
        }
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= step * g;
        }
        b -= step * gb;
        iterations += 1;
    }
    let model = ProbeModel { labels: [classes[0].to_string(), classes[1].to_string()], weights: w, bias: b, iterations, converged };
    let correct = test.iter().filter(|&&i| model.predict(&set.embeddings[i]) == set.labels[i]).count();
    Ok(ProbeResult {
        accuracy: 100.0 * correct as f64 / test.len().max(1) as f64,
        n_train: train.len(),
        n_test: test.len(),
        model,
    })
}
