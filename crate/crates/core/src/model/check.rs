use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Binder, Model, ModelConfig};
use crate::autograd::{gradient_check, Array, GradCheckReport, Mode};
use crate::ingest::{Split, TaskSample};
use crate::Result;

/// A random sample shaped for `config`: one-hot profile, behaviours in
/// `[0, 1]`, task `n` with `n + 2` past values, labels in `[-1, 1]`.
pub fn probe_sample(config: &ModelConfig, seed: u64) -> Result<TaskSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profile = vec![0.0; config.profile_dim];
    if !profile.is_empty() {
        profile[rng.random_range(0..config.profile_dim)] = 1.0;
    }
    let behaviors = config
        .behavior_dims
        .iter()
        .map(|&w| Array::matrix(config.days, w, (0..config.days * w).map(|_| rng.random()).collect()))
        .collect::<Result<_>>()?;
    Ok(TaskSample {
        student_id: format!("probe{seed}"),
        split: Split::Train,
        profile,
        behaviors,
        histories: (0..config.task_count)
            .map(|n| (0..n + 2).map(|_| rng.random()).collect())
            .collect(),
        task_features: config
            .task_feature_dims
            .iter()
            .map(|&w| (0..w).map(|_| rng.random()).collect())
            .collect(),
        labels: Some((0..config.task_count).map(|_| rng.random_range(-1.0..1.0)).collect()),
        raw_labels: None,
    })
}

/// Central-difference check of the eval-mode loss `Σ_n (ŷ_n - y_n)²` on one
/// sample, over every parameter entry.
pub fn check_gradients(model: &Model, sample: &TaskSample, step: f64) -> Result<GradCheckReport> {
    let labels = sample
        .labels
        .clone()
        .ok_or_else(|| crate::Error::InvalidArgument("gradient check needs a labelled sample".into()))?;
    gradient_check(model.store().values(), step, |g, vars| {
        let mut b = Binder::with_vars(model.store(), vars)?;
        let f = model.forward(g, &mut b, sample, Mode::Eval, &mut ChaCha8Rng::seed_from_u64(0))?;
        let mut total = None;
        for (&p, &y) in f.predictions.iter().zip(&labels) {
            let y = g.constant(Array::vector(vec![y]));
            let d = g.sub(p, y)?;
            let sq = g.sum_of_squares(d)?;
            total = Some(match total {
                None => sq,
                Some(t) => g.add(t, sq)?,
            });
        }
        total.ok_or(crate::Error::Empty("tasks"))
    })
}
