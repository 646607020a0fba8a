//! Mini-batch training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::handdraw::AffineAugment;
use crate::scalar::Scalar;

use super::data::TrainItem;
use super::params::{AdamW, OneCycle};
use super::tensor::Tensor;
use super::{ModelConfig, ModelError, ModelKind, SequenceModel};

/// Batch size the base learning rate is quoted at.
pub const REFERENCE_BATCH: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Peak learning rate at batch size 128; scaled linearly with the batch.
    pub base_lr: f64,
    pub weight_decay: f64,
    pub pct_start: f64,
    pub div_factor: f64,
    pub final_div_factor: f64,
    /// Gaussian jitter on primitive coordinates for constraint training.
    pub noise_sigma: f64,
    /// Global gradient-norm clip; 0 disables.
    pub grad_clip: f64,
    /// Random affine warp of the drawn render, for image-conditioned models.
    pub augment: Option<AffineAugment>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 16,
            base_lr: 3e-5,
            weight_decay: 0.01,
            pct_start: 0.3,
            div_factor: 25.0,
            final_div_factor: 1e4,
            noise_sigma: 0.01,
            grad_clip: 1.0,
            augment: Some(AffineAugment::default()),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn peak_lr(&self) -> f64 {
        self.base_lr * self.batch_size as f64 / REFERENCE_BATCH as f64
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.base_lr > 0.0) {
            return Err(ModelError::Config("epochs, batch_size and base_lr must be positive".into()));
        }
        if self.weight_decay < 0.0 || self.noise_sigma < 0.0 || self.grad_clip < 0.0 || !(0.0..1.0).contains(&self.pct_start) {
            return Err(ModelError::Config("weight_decay, noise_sigma, grad_clip must be ≥ 0 and pct_start in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Mean next-token loss (nats per predicted token) of one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub step: usize,
    pub epoch: usize,
    pub lr: f64,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T: Scalar> {
    pub model: SequenceModel<T>,
    pub losses: Vec<LossPoint>,
}

/// Trains a fresh model of `config` on `corpus`.
pub fn train<T: Scalar>(config: ModelConfig, corpus: &[TrainItem], cfg: &TrainConfig) -> Result<TrainOutcome<T>, ModelError> {
    let model = SequenceModel::new(config)?;
    train_from(model, corpus, cfg)
}

/// Continues training `model` on `corpus`.
pub fn train_from<T: Scalar>(mut model: SequenceModel<T>, corpus: &[TrainItem], cfg: &TrainConfig) -> Result<TrainOutcome<T>, ModelError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let batches_per_epoch = corpus.len().div_ceil(cfg.batch_size);
    let schedule = OneCycle {
        max_lr: cfg.peak_lr(),
        total_steps: cfg.epochs * batches_per_epoch,
        pct_start: cfg.pct_start,
        div_factor: cfg.div_factor,
        final_div_factor: cfg.final_div_factor,
    };
    let sigma = if model.kind() == ModelKind::Constraint { cfg.noise_sigma } else { 0.0 };
    let mut opt = AdamW::new(&model.params, cfg.weight_decay);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut losses = Vec::with_capacity(schedule.total_steps);
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let lr = schedule.lr(step);
            let mut total = 0.0;
            let mut count = 0usize;
            let mut grads: Vec<Option<Tensor<T>>> = vec![None; model.params.len()];
            for &i in batch {
                let ex = corpus[i].draw(sigma, cfg.augment.as_ref(), &mut rng);
                let (loss, n, g) = model.loss_and_grads(&ex, true)?;
                total += loss;
                count += n;
                for (acc, g) in grads.iter_mut().zip(g.into_iter().flatten()) {
                    match (acc.as_mut(), g) {
                        (Some(a), Some(g)) => a.add_assign(&g),
                        (None, Some(g)) => *acc = Some(g),
                        _ => {}
                    }
                }
            }
            let mean = total / count.max(1) as f64;
            if !mean.is_finite() {
                return Err(ModelError::NonFiniteLoss { step, epoch, lr });
            }
            let inv = 1.0 / count.max(1) as f64;
            let norm = grads
                .iter()
                .flatten()
                .flat_map(|g| g.data.iter())
                .map(|v| (v.to_f64_lossy() * inv).powi(2))
                .sum::<f64>()
                .sqrt();
            if !norm.is_finite() {
                return Err(ModelError::NonFiniteLoss { step, epoch, lr });
            }
            let factor = if cfg.grad_clip > 0.0 && norm > cfg.grad_clip { inv * cfg.grad_clip / norm } else { inv };
            let f = T::lit(factor);
            grads.iter_mut().flatten().for_each(|g| g.data.iter_mut().for_each(|v| *v *= f));
            opt.update(&mut model.params, &grads, lr);
            losses.push(LossPoint { step, epoch, lr, loss: mean });
            step += 1;
        }
        log::debug!("epoch {epoch}: loss {:.4}", losses.last().map_or(f64::NAN, |l| l.loss));
    }
    if !model.params.all_finite() {
        return Err(ModelError::NonFiniteLoss { step, epoch: cfg.epochs, lr: schedule.lr(step) });
    }
    Ok(TrainOutcome { model, losses })
}

/// Loss curve as CSV with a header row.
pub fn loss_csv(points: &[LossPoint]) -> String {
    let mut s = String::from("step,epoch,lr,loss\n");
    for p in points {
        s.push_str(&format!("{},{},{:e},{}\n", p.step, p.epoch, p.lr, p.loss));
    }
    s
}
