use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::loss_sum;
use super::{RmsProp, RmsPropConfig, TaggerModel, TaggerParams, TokenEmbedder};
use crate::corpus::TokenSequence;
use crate::error::{Error, Result};

// Sequences per parallel work unit. Fixed so the gradient reduction order
// does not depend on the thread count.
const CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub rho: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Global L2 norm cap on each batch gradient.
    pub gradient_clip: Option<f64>,
    pub hidden_size: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 5e-5,
            epochs: 5,
            batch_size: 32,
            rho: 0.9,
            epsilon: 1e-8,
            seed: 0,
            gradient_clip: Some(5.0),
            hidden_size: 128,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be non-negative"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::invalid("rho must lie in (0,1)"));
        }
        if self.hidden_size == 0 {
            return Err(Error::invalid("hidden_size must be at least 1"));
        }
        if let Some(c) = self.gradient_clip {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::invalid("gradient_clip must be positive"));
            }
        }
        Ok(())
    }

    pub fn optimizer(&self) -> RmsPropConfig {
        RmsPropConfig {
            learning_rate: self.learning_rate,
            rho: self.rho,
            epsilon: self.epsilon,
        }
    }
}

/// A sequence turned into model inputs: `T x d` row-major vectors and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSequence {
    pub inputs: Vec<f64>,
    pub labels: Vec<u8>,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn encode_sequences<E: TokenEmbedder + ?Sized>(sequences: &[TokenSequence], embedder: &E) -> Vec<EncodedSequence> {
    sequences
        .par_iter()
        .map(|s| EncodedSequence {
            inputs: embedder.embed_sequence(s),
            labels: s.labels.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TaggerModel,
    pub epoch_losses: Vec<f64>,
    pub log: Vec<EpochLog>,
}

/// Summed (not averaged) gradient of a batch.
#[derive(Debug, Clone)]
pub struct BatchGradients {
    pub grads: TaggerParams,
    pub tokens: usize,
    pub loss_sum: f64,
}

/// Gradient of the summed token loss over `batch`, reduced in batch order.
pub fn batch_gradients(model: &TaggerModel, batch: &[&EncodedSequence]) -> Result<BatchGradients> {
    let (d, h) = (model.input_dim(), model.hidden());
    let partials: Vec<Result<BatchGradients>> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = BatchGradients {
                grads: TaggerParams::zeros(d, h),
                tokens: 0,
                loss_sum: 0.0,
            };
            for seq in chunk {
                if seq.is_empty() {
                    continue;
                }
                let cache = model.forward(&seq.inputs)?;
                acc.loss_sum += loss_sum(cache.probs(), &seq.labels);
                acc.tokens += seq.len();
                model.accumulate_gradients(&cache, &seq.labels, 1.0, &mut acc.grads)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = BatchGradients {
        grads: TaggerParams::zeros(d, h),
        tokens: 0,
        loss_sum: 0.0,
    };
    for p in partials {
        let p = p?;
        total.grads.add_assign(&p.grads);
        total.tokens += p.tokens;
        total.loss_sum += p.loss_sum;
    }
    Ok(total)
}

pub fn train<E: TokenEmbedder + ?Sized>(
    model: TaggerModel,
    sequences: &[TokenSequence],
    embedder: &E,
    config: &TrainingConfig,
) -> Result<TrainOutcome> {
    let data = encode_sequences(sequences, embedder);
    train_encoded(model, &data, config, |_, _| Ok(()))
}

/// Mini-batch training for `config.epochs` epochs. `on_epoch` sees the model
/// after each epoch (1-based epoch number).
pub fn train_encoded(
    mut model: TaggerModel,
    data: &[EncodedSequence],
    config: &TrainingConfig,
    mut on_epoch: impl FnMut(usize, &TaggerModel) -> Result<()>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if data.iter().all(EncodedSequence::is_empty) {
        return Err(Error::invalid("training set has no tokens"));
    }
    if let Some(bad) = data.iter().find(|s| s.inputs.len() != s.len() * model.input_dim()) {
        return Err(Error::invalid(format!(
            "encoded sequence has {} values for {} tokens of dimension {}",
            bad.inputs.len(),
            bad.len(),
            model.input_dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut optimizer = RmsProp::new(config.optimizer());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let (mut loss_total, mut token_total) = (0.0, 0usize);
        for (batch_idx, idx) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&EncodedSequence> = idx.iter().map(|&i| &data[i]).collect();
            let mut bg = batch_gradients(&model, &batch)?;
            if bg.tokens == 0 {
                continue;
            }
            if !bg.loss_sum.is_finite() || !bg.grads.all_finite() {
                return Err(Error::Numerical(format!(
                    "training diverged at epoch {epoch}, batch {batch_idx}"
                )));
            }
            loss_total += bg.loss_sum;
            token_total += bg.tokens;
            bg.grads.scale(1.0 / bg.tokens as f64);
            if let Some(max_norm) = config.gradient_clip {
                let norm = bg.grads.l2_norm();
                if norm > max_norm {
                    bg.grads.scale(max_norm / norm);
                }
            }
            optimizer.step(&mut model, &bg.grads)?;
        }
        let mean_loss = loss_total / token_total as f64;
        log::info!("epoch {epoch}: mean loss {mean_loss:.6}");
        epoch_losses.push(mean_loss);
        log.push(EpochLog {
            epoch,
            mean_loss,
            wall_seconds: started.elapsed().as_secs_f64(),
        });
        on_epoch(epoch, &model)?;
    }
    Ok(TrainOutcome {
        model,
        epoch_losses,
        log,
    })
}
