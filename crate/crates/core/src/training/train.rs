use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::loss::total_loss;
use crate::autograd::{Array, Graph, Mode};
use crate::ingest::TaskSample;
use crate::model::{Binder, Model};
use crate::{Error, Execution, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// One weight per task.
    pub balance_weights: Vec<f64>,
    /// Restore the parameters with the lowest validation loss at the end.
    pub keep_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let a = AdamConfig::default();
        Self {
            learning_rate: a.learning_rate,
            beta1: a.beta1,
            beta2: a.beta2,
            epsilon: a.epsilon,
            batch_size: 32,
            epochs: 30,
            seed: 0,
            balance_weights: vec![1.0; 3],
            keep_best: true,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self, tasks: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.learning_rate > 0.0 && self.epsilon > 0.0) {
            return bad("learning_rate and epsilon must be positive".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.balance_weights.len() != tasks {
            return bad(format!("{} balance weights for {tasks} tasks", self.balance_weights.len()));
        }
        if self.balance_weights.iter().any(|w| !(*w >= 0.0)) {
            return bad("balance weights must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean squared error per task over the epoch, in scaled space.
    pub task: Vec<f64>,
    pub total: f64,
    /// Eval-mode weighted loss on the validation split, if any.
    pub validation: Option<f64>,
}

pub struct TrainOutcome {
    pub model: Model,
    pub log: Vec<EpochLoss>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
}

/// Summed gradients and per-task squared errors of one batch.
pub struct BatchResult {
    /// Per task, the sum over the batch of squared errors.
    pub squared_errors: Vec<f64>,
    /// Gradient of `Σ_i Σ_n λ_n (y - ŷ)² / |batch|`.
    pub gradients: Vec<Array>,
}

/// Dropout stream of one sample: independent of scheduling, so sequential
/// and parallel runs draw the same masks.
fn sample_rng(seed: u64, epoch: usize, step: usize, index: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, v) in key.chunks_mut(8).zip([seed, epoch as u64, step as u64, index as u64]) {
        chunk.copy_from_slice(&v.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Forward and backward over a batch; samples run through `exec` and are
/// reduced in batch order.
pub fn batch_gradients(
    model: &Model,
    batch: &[&TaskSample],
    weights: &[f64],
    mode: Mode,
    rng_key: (u64, usize, usize),
    exec: Execution,
) -> Result<BatchResult> {
    if batch.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    let scale = 1.0 / batch.len() as f64;
    let per_sample = exec.map(batch, |i, s| -> Result<(Vec<f64>, Vec<Array>)> {
        let labels = s
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("sample {} has no labels", s.student_id)))?;
        let mut g = Graph::new();
        let mut binder = Binder::lazy(model.store());
        let mut rng = sample_rng(rng_key.0, rng_key.1, rng_key.2, i);
        let f = model.forward(&mut g, &mut binder, s, mode, &mut rng)?;
        let mut sq = Vec::with_capacity(labels.len());
        let mut loss = None;
        for ((&p, &y), &w) in f.predictions.iter().zip(labels).zip(weights) {
            sq.push((g.value(p).item() - y).powi(2));
            let y = g.constant(Array::vector(vec![y]));
            let d = g.sub(p, y)?;
            let e = g.sum_of_squares(d)?;
            let term = g.scale(e, w * scale)?;
            loss = Some(match loss {
                None => term,
                Some(acc) => g.add(acc, term)?,
            });
        }
        let loss = loss.ok_or(Error::Empty("tasks"))?;
        let grads = binder.gradients(g.backward(loss)?)?;
        Ok((sq, grads))
    });
    let mut squared_errors = vec![0.0; weights.len()];
    let mut gradients: Vec<Array> = model.store().values().iter().map(|p| Array::zeros(p.shape())).collect();
    for r in per_sample {
        let (sq, grads) = r?;
        for (acc, v) in squared_errors.iter_mut().zip(sq) {
            *acc += v;
        }
        for (acc, g) in gradients.iter_mut().zip(grads) {
            for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += b;
            }
        }
    }
    Ok(BatchResult {
        squared_errors,
        gradients,
    })
}

/// Eval-mode weighted loss in scaled space, averaged over `samples`.
pub fn scaled_loss(model: &Model, samples: &[&TaskSample], weights: &[f64], exec: Execution) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Empty("loss samples"));
    }
    let rows = exec.map(samples, |_, s| -> Result<Vec<f64>> {
        let labels = s
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("sample {} has no labels", s.student_id)))?;
        let (y, _) = model.predict(s)?;
        Ok(y.iter().zip(labels).map(|(p, l)| (p - l).powi(2)).collect())
    });
    let mut sums = vec![0.0; weights.len()];
    for r in rows {
        for (acc, v) in sums.iter_mut().zip(r?) {
            *acc += v;
        }
    }
    Ok(sums.into_iter().map(|s| s / samples.len() as f64).collect())
}

/// Mini-batch Adam training with per-epoch shuffling under `config.seed`.
/// With validation samples and `keep_best`, the parameters of the epoch with
/// the lowest validation loss are returned.
pub fn train(
    mut model: Model,
    train_set: &[&TaskSample],
    validation: &[&TaskSample],
    config: &TrainConfig,
    exec: Execution,
) -> Result<TrainOutcome> {
    let tasks = model.config().task_count;
    config.validate(tasks)?;
    if train_set.is_empty() {
        return Err(Error::Empty("training samples"));
    }
    let weights = &config.balance_weights;
    let adam = config.adam();
    let mut state = AdamState::for_store(model.store());
    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, Vec<Array>)> = None;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.epochs {
        let mut shuffle_rng = sample_rng(config.seed, epoch, usize::MAX, usize::MAX);
        order.shuffle(&mut shuffle_rng);
        let mut sums = vec![0.0; tasks];
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&TaskSample> = chunk.iter().map(|&i| train_set[i]).collect();
            let r = batch_gradients(&model, &batch, weights, Mode::Train, (config.seed, epoch, step), exec)
                .map_err(|e| match e {
                    Error::NonFinite(what) => {
                        Error::NonFinite(format!("{what} in epoch {epoch}, batch {}", step + 1))
                    }
                    e => e,
                })?;
            let batch_loss: f64 = r.squared_errors.iter().zip(weights).map(|(s, w)| s * w).sum();
            if !batch_loss.is_finite() || r.gradients.iter().any(|g| !g.all_finite()) {
                return Err(Error::NonFinite(format!("loss in epoch {epoch}, batch {}", step + 1)));
            }
            for (acc, v) in sums.iter_mut().zip(&r.squared_errors) {
                *acc += v;
            }
            adam_step(model.store_mut().values_mut(), &r.gradients, &mut state, &adam)?;
        }
        let task: Vec<f64> = sums.iter().map(|s| s / train_set.len() as f64).collect();
        let total = total_loss(&task, weights)?;
        let validation_loss = if validation.is_empty() {
            None
        } else {
            Some(total_loss(&scaled_loss(&model, validation, weights, exec)?, weights)?)
        };
        if let Some(v) = validation_loss {
            if config.keep_best && best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                best = Some((v, epoch, model.store().values().to_vec()));
            }
        }
        log.push(EpochLoss {
            epoch,
            task,
            total,
            validation: validation_loss,
        });
    }

    let best_epoch = match best {
        Some((_, epoch, values)) => {
            model.store_mut().values_mut().clone_from_slice(&values);
            epoch
        }
        None => config.epochs,
    };
    Ok(TrainOutcome { model, log, best_epoch })
}

/// CSV with columns `epoch,L1..LN,total`.
pub fn loss_log_csv(log: &[EpochLoss]) -> Result<Vec<u8>> {
    let tasks = log.first().map_or(0, |e| e.task.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["epoch".to_string()];
    header.extend((1..=tasks).map(|n| format!("L{n}")));
    header.push("total".into());
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("loss log: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for e in log {
        let mut row = vec![e.epoch.to_string()];
        row.extend(e.task.iter().map(f64::to_string));
        row.push(e.total.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::InvalidArgument(format!("loss log: {e}")))
}
