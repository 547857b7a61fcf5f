use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Adam, Architecture, ModelParams};
use crate::corpus::TrainingSet;
use crate::error::{Error, Result};
use crate::rng::{seeded_rng, streams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub pretrain_epochs: usize,
    pub train_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Global L2 norm the averaged batch gradient is clipped to, if set.
    pub gradient_clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            pretrain_epochs: 15,
            train_epochs: 3,
            learning_rate: 0.001,
            batch_size: 32,
            seed: 0,
            gradient_clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if let Some(c) = self.gradient_clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("gradient_clip_norm must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub phase: String,
    pub epoch: usize,
    /// Mean per-item loss over the epoch.
    pub mean_loss: f64,
    pub items: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub seed: u64,
    pub architecture: Architecture,
    pub config: TrainConfig,
    pub epochs: Vec<EpochStats>,
}

impl TrainLog {
    pub fn phase_losses(&self, phase: &str) -> Vec<f64> {
        self.epochs.iter().filter(|e| e.phase == phase).map(|e| e.mean_loss).collect()
    }
}

pub const PRETRAIN_PHASE: &str = "pretrain";
pub const TRAIN_PHASE: &str = "train";

/// Autoencoder pretraining: every pretraining token is reconstructed from
/// itself. Parameters are initialized from `cfg.seed`.
pub fn pretrain_autoencoder(ts: &TrainingSet, arch: Architecture, cfg: &TrainConfig) -> Result<(ModelParams, TrainLog)> {
    cfg.validate()?;
    if ts.pretrain_tokens.is_empty() {
        return Err(Error::invalid("training set has no pretraining tokens"));
    }
    let mut params = ModelParams::<f32>::init(arch, cfg.seed)?;
    let seqs = token_frames(ts, arch.input_dim)?;
    let items: Vec<(usize, usize)> = (0..seqs.len()).map(|i| (i, i)).collect();
    let epochs = run_phase(&mut params, &seqs, &items, cfg, cfg.pretrain_epochs, PRETRAIN_PHASE, streams::PRETRAIN_SHUFFLE)?;
    let log = TrainLog { seed: cfg.seed, architecture: arch, config: cfg.clone(), epochs };
    Ok((params, log))
}

/// Correspondence training on the set's (input, target) pairs, continuing
/// from `params` (optimizer state included).
pub fn train_cae(mut params: ModelParams, ts: &TrainingSet, cfg: &TrainConfig) -> Result<(ModelParams, TrainLog)> {
    cfg.validate()?;
    if ts.pairs.is_empty() {
        return Err(Error::invalid("training set has no pairs"));
    }
    let arch = *params.architecture();
    let seqs = token_frames(ts, arch.input_dim)?;
    let items: Vec<(usize, usize)> = ts.pairs.iter().map(|p| (p.input, p.target)).collect();
    if items.iter().any(|&(a, b)| a >= seqs.len() || b >= seqs.len()) {
        return Err(Error::invalid("pair indexes past the token list"));
    }
    let epochs = run_phase(&mut params, &seqs, &items, cfg, cfg.train_epochs, TRAIN_PHASE, streams::TRAIN_SHUFFLE)?;
    let log = TrainLog { seed: cfg.seed, architecture: arch, config: cfg.clone(), epochs };
    Ok((params, log))
}

fn token_frames(ts: &TrainingSet, dim: usize) -> Result<Vec<Vec<f32>>> {
    ts.pretrain_tokens
        .iter()
        .map(|t| {
            let f = t.features()?;
            if f.dim() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "token {} has {}-dim frames, model expects {dim}",
                    t.token_id,
                    f.dim()
                )));
            }
            Ok(f.as_slice().iter().map(|&v| v as f32).collect())
        })
        .collect()
}

/// Mini-batch schedule for one epoch: shuffle, sort windows of eight
/// batches by target length so batches hold similar lengths, then shuffle
/// the batch order.
fn epoch_batches(items: &[(usize, usize)], seqs: &[Vec<f32>], batch: usize, rng: &mut impl rand::Rng) -> Vec<Vec<(usize, usize)>> {
    let mut order = items.to_vec();
    order.shuffle(rng);
    let window = batch * 8;
    for chunk in order.chunks_mut(window) {
        chunk.sort_by_key(|&(_, t)| seqs[t].len());
    }
    let mut batches: Vec<Vec<(usize, usize)>> = order.chunks(batch).map(|c| c.to_vec()).collect();
    batches.shuffle(rng);
    batches
}

fn run_phase(
    params: &mut ModelParams,
    seqs: &[Vec<f32>],
    items: &[(usize, usize)],
    cfg: &TrainConfig,
    epochs: usize,
    phase: &str,
    stream: u64,
) -> Result<Vec<EpochStats>> {
    let adam = Adam::default();
    let layout = params.layout();
    let mut rng = seeded_rng(cfg.seed, stream);
    let mut grad = vec![0f32; params.num_params()];
    let mut stats = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        let mut total = 0f64;
        for (step, batch) in epoch_batches(items, seqs, cfg.batch_size, &mut rng).into_iter().enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0f64;
            for &(x, t) in &batch {
                batch_loss += params.loss_and_grad_with(&layout, &seqs[x], &seqs[t], &mut grad) as f64;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged { phase: phase.into(), epoch, step: step + 1, loss: batch_loss });
            }
            total += batch_loss;
            let scale = 1.0 / batch.len() as f32;
            grad.iter_mut().for_each(|g| *g *= scale);
            if let Some(max) = cfg.gradient_clip_norm {
                let norm = grad.iter().map(|g| (*g as f64) * (*g as f64)).sum::<f64>().sqrt();
                if norm > max {
                    let s = (max / norm) as f32;
                    grad.iter_mut().for_each(|g| *g *= s);
                }
            }
            let mut state = std::mem::replace(&mut params.optimizer, super::AdamState::zeros(0));
            adam.step(params.values_mut(), &grad, &mut state, cfg.learning_rate)?;
            params.optimizer = state;
            if params.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged { phase: phase.into(), epoch, step: step + 1, loss: f64::NAN });
            }
        }
        let mean_loss = total / items.len() as f64;
        log::info!("{phase} epoch {epoch}/{epochs}: mean loss {mean_loss:.4} over {} items", items.len());
        stats.push(EpochStats { phase: phase.into(), epoch, mean_loss, items: items.len() });
    }
    Ok(stats)
}
