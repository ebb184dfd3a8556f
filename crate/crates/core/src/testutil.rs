//! Small model configurations and random samples shared by unit tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autograd::Array;
use crate::ingest::{Split, TaskSample};
use crate::model::{ModelConfig, Variant};

pub fn tiny(variant: Variant) -> ModelConfig {
    ModelConfig {
        embed_dim: 3,
        behavior_hidden: vec![3, 2],
        trend_hidden: 3,
        attention_dim: 3,
        unit_fc_dim: 4,
        num_units: 2,
        dropout_rate: 0.4,
        days: 4,
        task_count: 3,
        profile_dim: 5,
        behavior_dims: vec![4, 3],
        task_feature_dims: vec![2, 0, 3],
        variant,
    }
}

pub fn sample(c: &ModelConfig, rng: &mut ChaCha8Rng) -> TaskSample {
    let mut profile = vec![0.0; c.profile_dim];
    profile[rng.random_range(0..c.profile_dim)] = 1.0;
    TaskSample {
        student_id: "s".into(),
        split: Split::Train,
        profile,
        behaviors: c
            .behavior_dims
            .iter()
            .map(|&w| Array::matrix(c.days, w, (0..c.days * w).map(|_| rng.random()).collect()).unwrap())
            .collect(),
        histories: (0..c.task_count)
            .map(|n| (0..n + 1).map(|_| rng.random()).collect())
            .collect(),
        task_features: c
            .task_feature_dims
            .iter()
            .map(|&w| (0..w).map(|_| rng.random()).collect())
            .collect(),
        labels: Some((0..c.task_count).map(|_| rng.random_range(-1.0..1.0)).collect()),
        raw_labels: None,
    }
}
