use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::baseline::baseline_ha;
use crate::ingest::{Dataset, Split, TaskSample};
use crate::model::{Model, ModelConfig, Variant};
use crate::training::{evaluate, train, unpaired_ttest, EvalReport, TrainConfig};
use crate::{Error, Execution, Result};

/// Model families compared against the full model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Full,
    SingleTask,
    StandardLstmGates,
    NoSoftAttention,
    HistoryOnlyLstm,
}

impl Ablation {
    pub const VARIANTS: [Ablation; 4] = [
        Ablation::SingleTask,
        Ablation::StandardLstmGates,
        Ablation::NoSoftAttention,
        Ablation::HistoryOnlyLstm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::SingleTask => "single_task",
            Ablation::StandardLstmGates => "standard_lstm_gates",
            Ablation::NoSoftAttention => "no_soft_attention",
            Ablation::HistoryOnlyLstm => "history_only_lstm",
        }
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Ablation::Full]
            .into_iter()
            .chain(Ablation::VARIANTS)
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown ablation kind `{s}`")))
    }
}

/// One trainable model of an ablation. `task` is set when only that task's
/// predictions are used.
#[derive(Clone, Debug)]
pub struct AblationMember {
    pub model: Model,
    pub balance_weights: Vec<f64>,
    pub task: Option<usize>,
}

/// Freshly initialised models for `kind`. Single-task yields one copy per
/// task, each trained with a one-hot balance weight.
pub fn build_ablation(kind: Ablation, config: &ModelConfig, balance_weights: &[f64], seed: u64) -> Result<Vec<AblationMember>> {
    let single = |variant: Variant| -> Result<Vec<AblationMember>> {
        Ok(vec![AblationMember {
            model: Model::new(config.clone().with_variant(variant), seed)?,
            balance_weights: balance_weights.to_vec(),
            task: None,
        }])
    };
    match kind {
        Ablation::Full => single(Variant::Full),
        Ablation::StandardLstmGates => single(Variant::StandardLstmGates),
        Ablation::NoSoftAttention => single(Variant::NoSoftAttention),
        Ablation::HistoryOnlyLstm => single(Variant::HistoryOnlyLstm),
        Ablation::SingleTask => (0..config.task_count)
            .map(|n| {
                let mut weights = vec![0.0; config.task_count];
                weights[n] = 1.0;
                Ok(AblationMember {
                    model: Model::new(config.clone().with_variant(Variant::SingleTask(n)), seed)?,
                    balance_weights: weights,
                    task: Some(n),
                })
            })
            .collect(),
    }
}

/// `(variant - full) / variant`.
pub fn relative_improvement(variant_mse: f64, full_mse: f64) -> f64 {
    (variant_mse - full_mse) / variant_mse
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// One training run per seed and model.
    pub seeds: Vec<u64>,
    pub ablations: Vec<Ablation>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            seeds: (1..=5).collect(),
            ablations: Ablation::VARIANTS.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub name: String,
    /// `mse[seed][task]`, original units.
    pub mse: Vec<Vec<f64>>,
    pub mean_mse: Vec<f64>,
    /// Per task, per-student squared errors concatenated over seeds.
    pub squared_errors: Vec<Vec<f64>>,
}

/// The full model against one alternative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub against: String,
    /// Per task, from mean MSEs.
    pub relative_improvement: Vec<f64>,
    /// Per task, unpaired t-test on per-student squared errors.
    pub p_values: Vec<f64>,
    /// Per seed, the number of tasks on which the full model has lower MSE.
    pub tasks_won: Vec<usize>,
}

impl Comparison {
    /// Seeds in which the full model wins at least `tasks` tasks.
    pub fn seeds_winning(&self, tasks: usize) -> usize {
        self.tasks_won.iter().filter(|&&w| w >= tasks).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tasks: Vec<String>,
    pub seeds: Vec<u64>,
    pub test_students: usize,
    /// The full model first, then each ablation, then the historical
    /// average when every test student has history.
    pub models: Vec<ModelResult>,
    pub comparisons: Vec<Comparison>,
}

impl ExperimentReport {
    pub fn model(&self, name: &str) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn comparison(&self, against: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.against == against)
    }

    /// Plain-text table of mean MSEs and comparisons.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "test students: {}, seeds: {:?}", self.test_students, self.seeds);
        let _ = write!(s, "{:<22}", "model");
        for t in &self.tasks {
            let _ = write!(s, "{:>14}", format!("MSE {t}"));
        }
        s.push('\n');
        for m in &self.models {
            let _ = write!(s, "{:<22}", m.name);
            for v in &m.mean_mse {
                let _ = write!(s, "{v:>14.4}");
            }
            s.push('\n');
        }
        for c in &self.comparisons {
            let _ = writeln!(s, "full vs {}:", c.against);
            for (n, t) in self.tasks.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "  {t:<8} improvement {:>7.2}%  p = {:.3e}",
                    100.0 * c.relative_improvement[n],
                    c.p_values[n]
                );
            }
            let _ = writeln!(s, "  tasks won per seed: {:?}", c.tasks_won);
        }
        s
    }
}

struct Job {
    seed: usize,
    kind: usize,
    member: AblationMember,
}

fn model_result(name: &str, per_seed: Vec<EvalReport>, tasks: usize) -> ModelResult {
    let mse: Vec<Vec<f64>> = per_seed.iter().map(|r| r.mse.clone()).collect();
    let mean_mse = (0..tasks)
        .map(|n| mse.iter().map(|m| m[n]).sum::<f64>() / mse.len() as f64)
        .collect();
    let squared_errors = (0..tasks)
        .map(|n| per_seed.iter().flat_map(|r| r.squared_errors[n].iter().copied()).collect())
        .collect();
    ModelResult {
        name: name.into(),
        mse,
        mean_mse,
        squared_errors,
    }
}

fn historical_average(dataset: &Dataset, test: &[&TaskSample], seeds: usize) -> Result<Option<ModelResult>> {
    let tasks = dataset.task_count();
    let mut errors = vec![Vec::with_capacity(test.len()); tasks];
    for s in test {
        let Some(labels) = &s.labels else { continue };
        let truth = dataset.scalers.labels.invert(labels);
        for n in 0..tasks {
            let raw: Vec<f64> = s.histories[n]
                .iter()
                .map(|&h| dataset.scalers.histories[n].invert_value(0, h))
                .collect();
            let Ok(pred) = baseline_ha(&raw) else { return Ok(None) };
            errors[n].push((pred - truth[n]).powi(2));
        }
    }
    let mse: Vec<f64> = errors.iter().map(|e| e.iter().sum::<f64>() / e.len() as f64).collect();
    let report = EvalReport {
        mse,
        students: test.len(),
        student_ids: test.iter().map(|s| s.student_id.clone()).collect(),
        predictions: Vec::new(),
        squared_errors: errors,
    };
    Ok(Some(model_result("historical_average", vec![report; seeds], tasks)))
}

pub(super) fn compare(full: &ModelResult, other: &ModelResult) -> Result<Comparison> {
    let tasks = full.mean_mse.len();
    Ok(Comparison {
        against: other.name.clone(),
        relative_improvement: (0..tasks)
            .map(|n| relative_improvement(other.mean_mse[n], full.mean_mse[n]))
            .collect(),
        p_values: (0..tasks)
            .map(|n| unpaired_ttest(&full.squared_errors[n], &other.squared_errors[n]).map(|t| t.p))
            .collect::<Result<_>>()?,
        tasks_won: full
            .mse
            .iter()
            .zip(&other.mse)
            .map(|(f, o)| f.iter().zip(o).filter(|(a, b)| a < b).count())
            .collect(),
    })
}

/// Trains the full model and every ablation once per seed on the training
/// split (validation split for checkpoint selection) and scores all of them
/// on the test split in original units.
pub fn run_experiment(dataset: &Dataset, config: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    if config.seeds.is_empty() {
        return Err(Error::InvalidArgument("at least one seed is required".into()));
    }
    let tasks = dataset.task_count();
    config.train.validate(tasks)?;
    let model_config = config.model.clone().with_dataset_dims(dataset);
    model_config.validate()?;
    let train_set = dataset.labelled(Split::Train);
    let validation = dataset.labelled(Split::Validation);
    let test = dataset.labelled(Split::Test);
    if test.len() < 2 {
        return Err(Error::Empty("test students (at least 2 are needed)"));
    }

    let kinds: Vec<Ablation> = [Ablation::Full]
        .into_iter()
        .chain(config.ablations.iter().copied().filter(|&a| a != Ablation::Full))
        .collect();
    let mut jobs = Vec::new();
    for (si, &seed) in config.seeds.iter().enumerate() {
        for (ki, &kind) in kinds.iter().enumerate() {
            for member in build_ablation(kind, &model_config, &config.train.balance_weights, seed)? {
                jobs.push(Job { seed: si, kind: ki, member });
            }
        }
    }
    let outcomes = exec.map(&jobs, |_, job| -> Result<EvalReport> {
        let cfg = TrainConfig {
            seed: config.seeds[job.seed],
            balance_weights: job.member.balance_weights.clone(),
            ..config.train.clone()
        };
        let out = train(job.member.model.clone(), &train_set, &validation, &cfg, exec)?;
        evaluate(&out.model, &test, &dataset.scalers.labels, exec)
    });

    // Per (kind, seed), merge single-task members into one report.
    let mut slots: Vec<Vec<Option<EvalReport>>> = vec![vec![None; config.seeds.len()]; kinds.len()];
    for (job, outcome) in jobs.iter().zip(outcomes) {
        let r = outcome?;
        let slot = &mut slots[job.kind][job.seed];
        match (job.member.task, slot.as_mut()) {
            (Some(n), Some(merged)) => {
                merged.mse[n] = r.mse[n];
                merged.squared_errors[n] = r.squared_errors[n].clone();
                for (row, p) in merged.predictions.iter_mut().zip(&r.predictions) {
                    row[n] = p[n];
                }
            }
            _ => *slot = Some(r),
        }
    }
    let mut models: Vec<ModelResult> = kinds
        .iter()
        .zip(slots)
        .map(|(kind, per_seed)| model_result(kind.name(), per_seed.into_iter().flatten().collect(), tasks))
        .collect();
    if let Some(ha) = historical_average(dataset, &test, config.seeds.len())? {
        models.push(ha);
    }
    let comparisons = models[1..]
        .iter()
        .map(|m| compare(&models[0], m))
        .collect::<Result<_>>()?;
    Ok(ExperimentReport {
        tasks: dataset.task_names.clone(),
        seeds: config.seeds.clone(),
        test_students: test.len(),
        models,
        comparisons,
    })
}
