use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use dapamt::autograd::DEFAULT_STEP;
use dapamt::ingest::{
    assign_splits, build_students, CampusRecords, Dataset, IngestConfig, ProfileVocabulary, Split, TaskSample,
};
use dapamt::model::{check_gradients, probe_sample, Checkpoint, Model, ModelConfig};
use dapamt::synth::{generate, run_experiment, ExperimentConfig, SynthConfig};
use dapamt::training::{evaluate as evaluate_split, loss_log_csv, predict_all, train as train_model, TrainConfig};
use dapamt::Execution;

use crate::manifest::{sibling, RunManifest};
use crate::IngestArgs;

/// Config of `train`: both sections optional.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => dapamt::io::read_json(p).with_context(|| format!("reading config {}", p.display())),
    }
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    Dataset::load(path).with_context(|| format!("reading dataset {}", path.display()))
}

/// Loads a checkpoint and checks it against the dataset it will be applied
/// to.
fn load_model(checkpoint: &Path, dataset: &Dataset) -> Result<Model> {
    let ck = Checkpoint::load(checkpoint).with_context(|| format!("reading checkpoint {}", checkpoint.display()))?;
    let model = Model::from_checkpoint(&ck)?;
    let expected = model.config().clone().with_dataset_dims(dataset);
    ensure!(
        &expected == model.config(),
        "checkpoint expects inputs {:?}/{:?}/{:?} over {} days, dataset has {:?}/{:?}/{:?} over {} days",
        model.config().profile_dim,
        model.config().behavior_dims,
        model.config().task_feature_dims,
        model.config().days,
        dataset.profile_dim,
        dataset.behavior_dims,
        dataset.task_feature_dims,
        dataset.days
    );
    if let Some(s) = &ck.scalers {
        ensure!(s == &dataset.scalers, "dataset was scaled differently from the checkpoint's training data");
    }
    Ok(model)
}

fn parse_split(s: &str) -> Result<Option<Split>> {
    Ok(match s {
        "train" => Some(Split::Train),
        "validation" => Some(Split::Validation),
        "test" => Some(Split::Test),
        "all" => None,
        other => bail!("unknown split `{other}` (train, validation, test or all)"),
    })
}

fn select(dataset: &Dataset, split: Option<Split>) -> Vec<&TaskSample> {
    match split {
        Some(s) => dataset.split(s),
        None => dataset.samples.iter().collect(),
    }
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    dapamt::io::write_atomic(path, &w.into_inner()?)?;
    Ok(())
}

pub fn gen_synth(config: Option<&Path>, seed: Option<u64>, students: Option<usize>, out: &Path) -> Result<bool> {
    let mut cfg: SynthConfig = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = students {
        cfg.students = n;
    }
    let manifest = RunManifest::new("gen-synth", config, Some(cfg.seed)).config(&cfg)?;
    let dataset = generate(&cfg)?;
    dataset.save(out)?;
    println!(
        "wrote {} students ({} tasks) to {}",
        dataset.samples.len(),
        dataset.task_count(),
        out.display()
    );
    manifest.finish(out, &[])?;
    Ok(true)
}

pub fn ingest(a: &IngestArgs) -> Result<bool> {
    let split: [f64; 3] = a
        .split
        .as_slice()
        .try_into()
        .map_err(|_| anyhow::anyhow!("--split takes exactly three fractions"))?;
    let config = IngestConfig {
        days: a.days,
        ..IngestConfig::new(a.window_start, a.target_semester)
    };
    let records = CampusRecords::read(&a.footprints, &a.profiles, &a.grades, &a.borrows)?;
    let vocab = ProfileVocabulary::build(&records.profiles);
    let (mut students, report) = build_students(&records, &vocab, &config, Split::Train)?;
    let splits = assign_splits(students.len(), split, a.seed)?;
    for (s, sp) in students.iter_mut().zip(splits) {
        s.split = sp;
    }
    let dataset = Dataset::assemble(students, Some(vocab), None)?;
    dataset.save(&a.out)?;
    println!(
        "wrote {} students ({} labelled) to {}",
        report.students,
        report.labelled,
        a.out.display()
    );
    if report.footprints.outside_window > 0 || report.footprints.outside_hours > 0 {
        eprintln!(
            "warning: dropped {} footprints outside the window and {} outside binned hours",
            report.footprints.outside_window, report.footprints.outside_hours
        );
    }
    if report.unknown_students > 0 {
        eprintln!("warning: {} footprints belong to students without a profile", report.unknown_students);
    }
    #[derive(Serialize)]
    struct Resolved<'a> {
        ingest: &'a IngestConfig,
        split: [f64; 3],
        report: &'a dapamt::ingest::IngestReport,
    }
    let mut manifest = RunManifest::new("ingest", None, Some(a.seed)).config(&Resolved {
        ingest: &config,
        split,
        report: &report,
    })?;
    for p in [&a.footprints, &a.profiles, &a.grades, &a.borrows] {
        manifest = manifest.input(p);
    }
    manifest.finish(&a.out, &[])?;
    Ok(true)
}

pub fn train(dataset_path: &Path, config: Option<&Path>, seed: Option<u64>, out: &Path, exec: Execution) -> Result<bool> {
    let mut cfg: RunConfig = load_config(config)?;
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    let dataset = load_dataset(dataset_path)?;
    cfg.model = cfg.model.with_dataset_dims(&dataset);
    let manifest = RunManifest::new("train", config, Some(cfg.train.seed))
        .input(dataset_path)
        .config(&cfg)?;
    let model = Model::new(cfg.model.clone(), cfg.train.seed)?;
    let train_set = dataset.labelled(Split::Train);
    let validation = dataset.labelled(Split::Validation);
    let outcome = train_model(model, &train_set, &validation, &cfg.train, exec)?;

    let losses = sibling(out, "losses.csv");
    dapamt::io::write_atomic(&losses, &loss_log_csv(&outcome.log)?)?;
    outcome.model.to_checkpoint(Some(dataset.scalers.clone())).save(out)?;
    if let Some(last) = outcome.log.last() {
        println!("epoch {}: total scaled loss {:.6}", last.epoch, last.total);
    }
    println!("kept parameters of epoch {}; checkpoint {}", outcome.best_epoch, out.display());
    manifest.finish(out, &[losses])?;
    Ok(true)
}

pub fn evaluate(checkpoint: &Path, dataset_path: &Path, split: &str, out: Option<&Path>, exec: Execution) -> Result<bool> {
    let dataset = load_dataset(dataset_path)?;
    let model = load_model(checkpoint, &dataset)?;
    let samples: Vec<&TaskSample> = select(&dataset, parse_split(split)?)
        .into_iter()
        .filter(|s| s.labels.is_some())
        .collect();
    let report = evaluate_split(&model, &samples, &dataset.scalers.labels, exec)?;
    println!("{} students ({split})", report.students);
    for (name, mse) in dataset.task_names.iter().zip(&report.mse) {
        println!("MSE {name:<8} {mse:.6}");
    }
    if let Some(out) = out {
        dapamt::io::write_json(out, &report)?;
        RunManifest::new("evaluate", None, None)
            .input(checkpoint)
            .input(dataset_path)
            .config(&serde_json::json!({ "split": split }))?
            .finish(out, &[])?;
    }
    Ok(true)
}

pub fn predict(checkpoint: &Path, dataset_path: &Path, split: &str, out: &Path, exec: Execution) -> Result<bool> {
    let dataset = load_dataset(dataset_path)?;
    let model = load_model(checkpoint, &dataset)?;
    let samples = select(&dataset, parse_split(split)?);
    let predictions = predict_all(&model, &samples, &dataset.scalers.labels, exec)?;
    let mut header = vec!["student_id".to_string()];
    header.extend(dataset.task_names.iter().cloned());
    let rows: Vec<Vec<String>> = samples
        .iter()
        .zip(&predictions)
        .map(|(s, p)| std::iter::once(s.student_id.clone()).chain(p.iter().map(f64::to_string)).collect())
        .collect();
    write_csv(out, &header, &rows)?;
    println!("wrote {} predictions to {}", rows.len(), out.display());
    RunManifest::new("predict", None, None)
        .input(checkpoint)
        .input(dataset_path)
        .config(&serde_json::json!({ "split": split }))?
        .finish(out, &[])?;
    Ok(true)
}

pub fn export_attention(checkpoint: &Path, dataset_path: &Path, students: &[String], out: &Path) -> Result<bool> {
    let dataset = load_dataset(dataset_path)?;
    let model = load_model(checkpoint, &dataset)?;
    let samples: Vec<&TaskSample> = if students.is_empty() {
        dataset.samples.iter().collect()
    } else {
        students
            .iter()
            .map(|id| {
                dataset
                    .samples
                    .iter()
                    .find(|s| &s.student_id == id)
                    .with_context(|| format!("student `{id}` is not in the dataset"))
            })
            .collect::<Result<_>>()?
    };
    let tasks = model.config().task_count;
    let pairs: Vec<(usize, usize)> = (0..tasks).flat_map(|a| (a + 1..tasks).map(move |b| (a, b))).collect();
    let mut rows = Vec::with_capacity(samples.len());
    let mut header = vec!["student_id".to_string()];
    for (i, s) in samples.iter().enumerate() {
        let (_, trace) = model.predict(s)?;
        if i == 0 {
            header.extend((1..=trace.alpha.len()).map(|x| format!("alpha_{x}")));
            for l in 1..=trace.beta.len() {
                header.extend(pairs.iter().map(|(a, b)| format!("beta_u{l}_{}{}", a + 1, b + 1)));
            }
        }
        let mut row = vec![s.student_id.clone()];
        row.extend(trace.alpha.iter().map(f64::to_string));
        row.extend(trace.beta.iter().flatten().map(f64::to_string));
        rows.push(row);
    }
    write_csv(out, &header, &rows)?;
    println!("wrote attention weights of {} students to {}", rows.len(), out.display());
    RunManifest::new("export-attention", None, None)
        .input(checkpoint)
        .input(dataset_path)
        .config(&serde_json::json!({ "students": students }))?
        .finish(out, &[])?;
    Ok(true)
}

pub fn gradcheck(config: Option<&Path>, tolerance: f64, seed: u64) -> Result<bool> {
    ensure!(tolerance > 0.0, "tolerance must be positive");
    let cfg: ModelConfig = load_config(config)?;
    let model = Model::new(cfg.clone(), seed)?;
    let sample = probe_sample(&cfg, seed)?;
    let report = check_gradients(&model, &sample, DEFAULT_STEP)?;
    let worst = report
        .worst
        .map(|(p, k)| format!("{}[{k}]", model.store().names()[p]))
        .unwrap_or_default();
    println!(
        "checked {} entries; max relative error {:.3e} at {worst}",
        report.entries_checked, report.max_relative_error
    );
    let pass = report.max_relative_error < tolerance;
    println!("{} (tolerance {tolerance:e})", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

pub fn experiment(dataset_path: &Path, config: Option<&Path>, out: &Path, exec: Execution) -> Result<bool> {
    let cfg: ExperimentConfig = load_config(config)?;
    let dataset = load_dataset(dataset_path)?;
    let manifest = RunManifest::new("experiment", config, None)
        .input(dataset_path)
        .config(&cfg)?;
    let report = run_experiment(&dataset, &cfg, exec)?;
    dapamt::io::write_json(out, &report)?;
    print!("{}", report.render());
    manifest.finish(out, &[])?;
    Ok(true)
}
