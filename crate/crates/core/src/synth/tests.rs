use super::*;
use crate::ingest::{Dataset, Split, TaskSample};
use crate::model::{ModelConfig, Variant};
use crate::testutil::tiny;
use crate::training::{train, TrainConfig};
use crate::{Error, Execution};

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn raw_labels(d: &Dataset) -> Vec<Vec<f64>> {
    d.samples.iter().map(|s| s.raw_labels.clone().unwrap()).collect()
}

fn small() -> SynthConfig {
    SynthConfig {
        students: 120,
        days: 10,
        informative_days: 3,
        ..SynthConfig::default()
    }
}

#[test]
fn noiseless_labels_are_strongly_coupled() {
    let d = generate(&SynthConfig::default().noiseless()).unwrap();
    let y = raw_labels(&d);
    let col = |n: usize| y.iter().map(|r| r[n]).collect::<Vec<_>>();
    assert_eq!(y.len(), 1000);
    let books = corr(&col(0), &col(1));
    let fails = corr(&col(0), &col(2));
    assert!(books > 0.9, "corr(wag, books) = {books}");
    assert!(fails < -0.9, "corr(wag, fails) = {fails}");
}

#[test]
fn generation_is_deterministic() {
    let a = generate(&small()).unwrap();
    let b = generate(&small()).unwrap();
    assert_eq!(a, b);
    let c = generate(&SynthConfig { seed: 8, ..small() }).unwrap();
    assert_ne!(a.samples, c.samples);
}

#[test]
fn labels_respect_their_ranges() {
    for seed in 0..4 {
        let d = generate(&SynthConfig { seed, ..small() }).unwrap();
        for y in raw_labels(&d) {
            assert!((0.0..=100.0).contains(&y[0]));
            for c in &y[1..] {
                assert!(*c >= 0.0 && c.fract() == 0.0);
            }
        }
    }
}

#[test]
fn dataset_shape_matches_model_defaults() {
    let d = generate(&small()).unwrap();
    let c = ModelConfig::default().with_dataset_dims(&d);
    assert_eq!(c.profile_dim, ModelConfig::default().profile_dim);
    assert_eq!(c.behavior_dims, ModelConfig::default().behavior_dims);
    assert_eq!(c.task_feature_dims, ModelConfig::default().task_feature_dims);
    assert_eq!(d.task_count(), 3);
    assert!(d.profile_vocabulary.is_some());
    let n = |s| d.split(s).len();
    assert_eq!((n(Split::Train), n(Split::Validation), n(Split::Test)), (84, 12, 24));
}

#[test]
fn invalid_configs_are_rejected() {
    for c in [
        SynthConfig { students: 0, ..small() },
        SynthConfig { informative_days: 11, ..small() },
        SynthConfig { diligence_noise: -1.0, ..small() },
        SynthConfig { department_coefficients: vec![1.0], ..small() },
    ] {
        assert!(matches!(generate(&c), Err(Error::InvalidArgument(_))));
    }
}

/// Within each department, regresses the WAG label on the student's mean
/// evening library count; returns test MSE of that predictor and of the
/// training label mean.
fn behaviour_only_vs_mean(d: &Dataset) -> (f64, f64) {
    let departments = d.profile_vocabulary.as_ref().unwrap().attributes[0].1.len();
    let dept = |s: &TaskSample| s.profile[..departments].iter().position(|&v| v == 1.0).unwrap();
    let activity = |s: &TaskSample| {
        let lib = &s.behaviors[0];
        (0..lib.rows()).map(|r| lib.row(r)[11..].iter().sum::<f64>()).sum::<f64>() / lib.rows() as f64
    };
    let y = |s: &TaskSample| s.raw_labels.as_ref().unwrap()[0];
    let train = d.labelled(Split::Train);
    let test = d.labelled(Split::Test);
    let mean_y = train.iter().map(|s| y(s)).sum::<f64>() / train.len() as f64;
    let mut fits = Vec::new();
    for k in 0..departments {
        let rows: Vec<(f64, f64)> = train.iter().filter(|s| dept(s) == k).map(|s| (activity(s), y(s))).collect();
        let n = rows.len() as f64;
        let mx = rows.iter().map(|r| r.0).sum::<f64>() / n;
        let my = rows.iter().map(|r| r.1).sum::<f64>() / n;
        let sxx: f64 = rows.iter().map(|r| (r.0 - mx).powi(2)).sum();
        let sxy: f64 = rows.iter().map(|r| (r.0 - mx) * (r.1 - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        fits.push((mx, slope));
    }
    let mse = |f: &dyn Fn(&TaskSample) -> f64| test.iter().map(|s| (f(s) - y(s)).powi(2)).sum::<f64>() / test.len() as f64;
    let behaviour = mse(&|s| {
        let (mx, slope) = fits[dept(s)];
        mean_y + slope * (activity(s) - mx)
    });
    (behaviour, mse(&|_| mean_y))
}

#[test]
fn informative_days_carry_the_only_behaviour_signal() {
    let base = SynthConfig {
        students: 600,
        days: 20,
        ..SynthConfig::default()
    };
    let (with_signal, mean) = behaviour_only_vs_mean(&generate(&SynthConfig { informative_days: 5, ..base.clone() }).unwrap());
    assert!(with_signal < 0.7 * mean, "{with_signal} vs {mean}");
    let (without, mean) = behaviour_only_vs_mean(&generate(&SynthConfig { informative_days: 0, ..base }).unwrap());
    assert!(without >= 0.98 * mean, "{without} vs {mean}");
}

#[test]
fn ablation_kinds_parse_and_build() {
    assert_eq!("no_soft_attention".parse::<Ablation>().unwrap(), Ablation::NoSoftAttention);
    assert!(matches!("no_attention".parse::<Ablation>(), Err(Error::InvalidArgument(_))));
    let c = tiny(Variant::Full);
    let members = build_ablation(Ablation::SingleTask, &c, &[1.0; 3], 0).unwrap();
    assert_eq!(members.len(), 3);
    for (n, m) in members.iter().enumerate() {
        assert_eq!(m.task, Some(n));
        assert_eq!(m.model.variant(), Variant::SingleTask(n));
        assert_eq!(m.balance_weights.iter().sum::<f64>(), 1.0);
        assert_eq!(m.balance_weights[n], 1.0);
    }
    let gates = build_ablation(Ablation::StandardLstmGates, &c, &[1.0; 3], 0).unwrap();
    assert_eq!(gates[0].model.variant(), Variant::StandardLstmGates);
}

#[test]
fn relative_improvement_example() {
    assert!((relative_improvement(15.10, 12.16) - 0.195).abs() < 5e-4);
    assert_eq!(relative_improvement(3.0, 3.0), 0.0);
}

fn tiny_experiment() -> (Dataset, ExperimentConfig) {
    let d = generate(&SynthConfig {
        students: 40,
        days: 4,
        informative_days: 2,
        ..SynthConfig::default()
    })
    .unwrap();
    let model = ModelConfig {
        embed_dim: 3,
        behavior_hidden: vec![3, 2],
        trend_hidden: 3,
        attention_dim: 3,
        unit_fc_dim: 4,
        num_units: 2,
        ..ModelConfig::default()
    };
    let cfg = ExperimentConfig {
        model,
        train: TrainConfig {
            epochs: 2,
            batch_size: 8,
            ..TrainConfig::default()
        },
        seeds: vec![1, 2],
        ablations: Ablation::VARIANTS.to_vec(),
    };
    (d, cfg)
}

#[test]
fn experiment_report_covers_every_model() {
    let (d, cfg) = tiny_experiment();
    let r = run_experiment(&d, &cfg, Execution::Parallel).unwrap();
    let names: Vec<&str> = r.models.iter().map(|m| m.name.as_str()).collect();
    assert_eq!(
        names,
        ["full", "single_task", "standard_lstm_gates", "no_soft_attention", "history_only_lstm", "historical_average"]
    );
    assert_eq!(r.comparisons.len(), 5);
    for m in &r.models {
        assert_eq!(m.mse.len(), 2);
        assert!(m.squared_errors.iter().all(|e| e.len() == 2 * r.test_students));
    }
    for c in &r.comparisons {
        assert!(c.p_values.iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(c.tasks_won.len(), 2);
    }
    let again = run_experiment(&d, &cfg, Execution::Sequential).unwrap();
    assert_eq!(r, again);
    assert!(r.render().contains("full vs history_only_lstm"));
}

#[test]
fn full_model_against_itself() {
    let (d, cfg) = tiny_experiment();
    let cfg = ExperimentConfig {
        ablations: vec![Ablation::Full],
        seeds: vec![3],
        ..cfg
    };
    let r = run_experiment(&d, &cfg, Execution::Sequential).unwrap();
    let full = r.model("full").unwrap();
    let c = experiment_compare(full);
    assert_eq!(c.relative_improvement, vec![0.0; 3]);
    assert!(c.p_values.iter().all(|&p| p == 1.0));
    assert_eq!(c.tasks_won, vec![0]);
}

fn experiment_compare(m: &ModelResult) -> Comparison {
    let mut other = m.clone();
    other.name = "copy".into();
    super::experiment::compare(m, &other).unwrap()
}

#[test]
fn single_task_leaves_other_heads_untouched() {
    let (d, cfg) = tiny_experiment();
    let c = cfg.model.clone().with_dataset_dims(&d);
    let member = build_ablation(Ablation::SingleTask, &c, &[1.0; 3], 5).unwrap().remove(0);
    let tc = TrainConfig {
        balance_weights: member.balance_weights.clone(),
        ..cfg.train
    };
    let out = train(member.model.clone(), &d.labelled(Split::Train), &[], &tc, Execution::Sequential).unwrap();
    let before = member.model.store();
    let after = out.model.store();
    for (i, name) in before.names().iter().enumerate() {
        if name.starts_with("head2.") || name.starts_with("trend2.") || name.contains(".task2.") {
            assert_eq!(before.value(i), after.value(i), "{name}");
        }
    }
    assert_ne!(before.values(), after.values());
}
