use serde::{Deserialize, Serialize};

use crate::ingest::Dataset;
use crate::{Error, Result};

/// Architecture variant. Everything except `Full` is an ablation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Full,
    /// Profile terms of the LSTM gates and the attention score are zeroed and
    /// frozen.
    StandardLstmGates,
    /// Uniform mean of the daily states instead of soft attention.
    NoSoftAttention,
    /// Trend LSTMs feeding the output heads directly.
    HistoryOnlyLstm,
    /// Only the given task branch (0-based) is computed; interaction units
    /// degenerate to stacked FC layers.
    SingleTask(usize),
}

impl Variant {
    pub fn name(&self) -> String {
        match self {
            Variant::Full => "full".into(),
            Variant::StandardLstmGates => "standard_lstm_gates".into(),
            Variant::NoSoftAttention => "no_soft_attention".into(),
            Variant::HistoryOnlyLstm => "history_only_lstm".into(),
            Variant::SingleTask(n) => format!("single_task_{}", n + 1),
        }
    }

    /// Whether task `n` has a computed branch.
    pub fn computes_task(&self, n: usize) -> bool {
        match self {
            Variant::SingleTask(k) => *k == n,
            _ => true,
        }
    }

    pub fn uses_behaviour(&self) -> bool {
        *self != Variant::HistoryOnlyLstm
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embed_dim: usize,
    /// Hidden size of each behaviour kind's profile-aware LSTM.
    pub behavior_hidden: Vec<usize>,
    pub trend_hidden: usize,
    /// Width of the attention scoring layer.
    pub attention_dim: usize,
    pub unit_fc_dim: usize,
    pub num_units: usize,
    pub dropout_rate: f64,
    pub days: usize,
    pub task_count: usize,
    pub profile_dim: usize,
    pub behavior_dims: Vec<usize>,
    /// Course-feature width per task; zero where a task has none.
    pub task_feature_dims: Vec<usize>,
    pub variant: Variant,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 30,
            behavior_hidden: vec![12, 4],
            trend_hidden: 5,
            attention_dim: 16,
            unit_fc_dim: 100,
            num_units: 4,
            dropout_rate: 0.4,
            days: 63,
            task_count: 3,
            profile_dim: 26,
            behavior_dims: vec![16, 6],
            task_feature_dims: vec![7, 0, 8],
            variant: Variant::Full,
        }
    }
}

impl ModelConfig {
    /// Copies the input dimensions of `dataset` into this config.
    pub fn with_dataset_dims(mut self, dataset: &Dataset) -> Self {
        self.days = dataset.days;
        self.profile_dim = dataset.profile_dim;
        self.behavior_dims = dataset.behavior_dims.clone();
        self.task_feature_dims = dataset.task_feature_dims.clone();
        self.task_count = dataset.task_count();
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn behavior_kinds(&self) -> usize {
        self.behavior_dims.len()
    }

    /// Width of `R`: the profile embedding plus all concatenated hidden states.
    pub fn representation_dim(&self) -> usize {
        self.embed_dim + self.behavior_hidden.iter().sum::<usize>()
    }

    /// Width of the task input for task `n` before the first unit.
    pub fn task_input_dim(&self, n: usize) -> usize {
        self.representation_dim() + self.trend_hidden + self.task_feature_dims[n]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        let positive = [
            ("embed_dim", self.embed_dim),
            ("trend_hidden", self.trend_hidden),
            ("attention_dim", self.attention_dim),
            ("unit_fc_dim", self.unit_fc_dim),
            ("num_units", self.num_units),
            ("days", self.days),
            ("task_count", self.task_count),
            ("profile_dim", self.profile_dim),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return bad(format!("{name} must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate must lie in [0, 1), got {}", self.dropout_rate));
        }
        if self.behavior_dims.is_empty() || self.behavior_dims.len() != self.behavior_hidden.len() {
            return bad("behavior_dims and behavior_hidden must be non-empty and of equal length".into());
        }
        if self.behavior_dims.iter().chain(&self.behavior_hidden).any(|&d| d == 0) {
            return bad("behaviour dimensions must be positive".into());
        }
        if self.task_feature_dims.len() != self.task_count {
            return bad(format!(
                "task_feature_dims has {} entries for {} tasks",
                self.task_feature_dims.len(),
                self.task_count
            ));
        }
        if let Variant::SingleTask(n) = self.variant {
            if n >= self.task_count {
                return bad(format!("single-task index {n} out of range"));
            }
        }
        Ok(())
    }
}
