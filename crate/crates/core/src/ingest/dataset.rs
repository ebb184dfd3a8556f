use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::records::ProfileVocabulary;
use super::scaler::{ScaleKind, Scaler};
use crate::autograd::Array;
use crate::{Error, Result};

pub const FORMAT: &str = "dapamt-dataset/1";
pub const TASK_NAMES: [&str; 3] = ["wag", "books", "fails"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// Unscaled per-student inputs, as produced by ingestion or generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawStudent {
    pub student_id: String,
    pub split: Split,
    pub profile: Vec<f64>,
    /// Per behaviour kind, one feature row per day.
    pub behaviors: Vec<Vec<Vec<f64>>>,
    /// Per task, semesters `1..=T` in order. `T` may be zero.
    pub histories: Vec<Vec<f64>>,
    /// Per task course features; empty for tasks without any.
    pub task_features: Vec<Vec<f64>>,
    pub labels: Option<Vec<f64>>,
}

/// Scaled model input for one student.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSample {
    pub student_id: String,
    pub split: Split,
    pub profile: Vec<f64>,
    /// Per behaviour kind, a `days x features` matrix in `[0, 1]`.
    pub behaviors: Vec<Array>,
    pub histories: Vec<Vec<f64>>,
    pub task_features: Vec<Vec<f64>>,
    /// Labels in `[-1, 1]` space.
    pub labels: Option<Vec<f64>>,
    /// Labels in original units.
    pub raw_labels: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetScalers {
    /// One per behaviour kind, one column per slot.
    pub behaviors: Vec<Scaler>,
    /// One single-column scaler per task.
    pub histories: Vec<Scaler>,
    /// `None` for tasks without course features.
    pub task_features: Vec<Option<Scaler>>,
    /// One column per task.
    pub labels: Scaler,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub format: String,
    pub days: usize,
    pub profile_dim: usize,
    pub behavior_dims: Vec<usize>,
    pub task_feature_dims: Vec<usize>,
    pub task_names: Vec<String>,
    pub profile_vocabulary: Option<ProfileVocabulary>,
    pub scalers: DatasetScalers,
    pub samples: Vec<TaskSample>,
}

/// Shuffles `n` students under `seed` and cuts train, validation and test
/// blocks by `fractions`; the test block takes the remainder.
pub fn assign_splits(n: usize, fractions: [f64; 3], seed: u64) -> Result<Vec<Split>> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || fractions.iter().sum::<f64>() > 1.0 + 1e-9 {
        return Err(Error::InvalidArgument(format!("invalid split fractions {fractions:?}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (n as f64 * fractions[0]).round() as usize;
    let n_val = ((n as f64 * fractions[1]).round() as usize).min(n - n_train.min(n));
    let mut splits = vec![Split::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        splits[i] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Validation
        } else {
            Split::Test
        };
    }
    Ok(splits)
}

fn shape_of(s: &RawStudent) -> (usize, Vec<usize>, Vec<usize>, usize, usize) {
    (
        s.profile.len(),
        s.behaviors.iter().map(|k| k.first().map_or(0, Vec::len)).collect(),
        s.task_features.iter().map(Vec::len).collect(),
        s.behaviors.first().map_or(0, Vec::len),
        s.histories.len(),
    )
}

fn fit_or_degenerate<'a>(rows: impl IntoIterator<Item = &'a [f64]>, width: usize, kind: ScaleKind) -> Result<Scaler> {
    match Scaler::fit(rows, kind) {
        Err(Error::Empty(_)) => Ok(Scaler {
            kind,
            min: vec![0.0; width],
            max: vec![0.0; width],
        }),
        other => other,
    }
}

impl DatasetScalers {
    /// Fits every scaler on the training students only.
    pub fn fit(students: &[RawStudent]) -> Result<Self> {
        let train: Vec<&RawStudent> = students.iter().filter(|s| s.split == Split::Train).collect();
        let Some(first) = train.first() else {
            return Err(Error::Empty("training students"));
        };
        let (_, behavior_dims, feature_dims, _, tasks) = shape_of(first);
        let behaviors = behavior_dims
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                fit_or_degenerate(
                    train.iter().flat_map(|s| s.behaviors[k].iter().map(Vec::as_slice)),
                    w,
                    ScaleKind::UnitInterval,
                )
            })
            .collect::<Result<_>>()?;
        let histories = (0..tasks)
            .map(|n| {
                fit_or_degenerate(
                    train.iter().flat_map(|s| s.histories[n].iter().map(std::slice::from_ref)),
                    1,
                    ScaleKind::UnitInterval,
                )
            })
            .collect::<Result<_>>()?;
        let task_features = feature_dims
            .iter()
            .enumerate()
            .map(|(n, &w)| {
                (w > 0)
                    .then(|| {
                        fit_or_degenerate(
                            train.iter().map(|s| s.task_features[n].as_slice()),
                            w,
                            ScaleKind::UnitInterval,
                        )
                    })
                    .transpose()
            })
            .collect::<Result<_>>()?;
        let labels = Scaler::fit(
            train.iter().filter_map(|s| s.labels.as_deref()),
            ScaleKind::SymmetricUnit,
        )
        .map_err(|e| match e {
            Error::Empty(_) => Error::Empty("labelled training students"),
            e => e,
        })?;
        Ok(Self {
            behaviors,
            histories,
            task_features,
            labels,
        })
    }

    pub fn scale(&self, s: &RawStudent) -> Result<TaskSample> {
        let behaviors = s
            .behaviors
            .iter()
            .zip(&self.behaviors)
            .map(|(rows, sc)| {
                let cols = sc.width();
                let data: Vec<f64> = rows.iter().flat_map(|r| sc.apply(r)).collect();
                Array::new(vec![rows.len(), cols], data)
            })
            .collect::<Result<_>>()?;
        let histories = s
            .histories
            .iter()
            .zip(&self.histories)
            .map(|(h, sc)| h.iter().map(|&y| sc.apply_value(0, y)).collect())
            .collect();
        let task_features = s
            .task_features
            .iter()
            .zip(&self.task_features)
            .map(|(v, sc)| sc.as_ref().map_or_else(Vec::new, |sc| sc.apply(v)))
            .collect();
        Ok(TaskSample {
            student_id: s.student_id.clone(),
            split: s.split,
            profile: s.profile.clone(),
            behaviors,
            histories,
            task_features,
            labels: s.labels.as_ref().map(|l| self.labels.apply(l)),
            raw_labels: s.labels.clone(),
        })
    }
}

impl Dataset {
    /// Validates shapes, fits scalers on the training split unless given, and
    /// scales every student.
    pub fn assemble(
        students: Vec<RawStudent>,
        vocabulary: Option<ProfileVocabulary>,
        scalers: Option<DatasetScalers>,
    ) -> Result<Self> {
        let Some(first) = students.first() else {
            return Err(Error::Empty("students"));
        };
        let shape = shape_of(first);
        if let Some(bad) = students.iter().find(|s| shape_of(s) != shape) {
            return Err(Error::InvalidArgument(format!(
                "student {} has inconsistent input shapes",
                bad.student_id
            )));
        }
        let (profile_dim, behavior_dims, task_feature_dims, days, tasks) = shape;
        if days == 0 || behavior_dims.contains(&0) {
            return Err(Error::InvalidArgument("behaviour sequences must be non-empty".into()));
        }
        if students.iter().any(|s| {
            s.behaviors.iter().zip(&behavior_dims).any(|(rows, &w)| rows.iter().any(|r| r.len() != w))
                || s.labels.as_ref().is_some_and(|l| l.len() != tasks)
        }) {
            return Err(Error::InvalidArgument("ragged behaviour rows or label vectors".into()));
        }
        let scalers = match scalers {
            Some(sc) => {
                let widths: Vec<usize> = sc.behaviors.iter().map(Scaler::width).collect();
                let fdims: Vec<usize> = sc.task_features.iter().map(|s| s.as_ref().map_or(0, Scaler::width)).collect();
                if widths != behavior_dims || fdims != task_feature_dims || sc.labels.width() != tasks {
                    return Err(Error::InvalidArgument("scalers do not match the student inputs".into()));
                }
                sc
            }
            None => DatasetScalers::fit(&students)?,
        };
        let samples = students.iter().map(|s| scalers.scale(s)).collect::<Result<_>>()?;
        Ok(Self {
            format: FORMAT.into(),
            days,
            profile_dim,
            behavior_dims,
            task_feature_dims,
            task_names: if tasks == TASK_NAMES.len() {
                TASK_NAMES.iter().map(|s| s.to_string()).collect()
            } else {
                (1..=tasks).map(|n| format!("task{n}")).collect()
            },
            profile_vocabulary: vocabulary,
            scalers,
            samples,
        })
    }

    pub fn task_count(&self) -> usize {
        self.task_names.len()
    }

    pub fn split(&self, split: Split) -> Vec<&TaskSample> {
        self.samples.iter().filter(|s| s.split == split).collect()
    }

    /// Labelled samples of one split.
    pub fn labelled(&self, split: Split) -> Vec<&TaskSample> {
        self.samples.iter().filter(|s| s.split == split && s.labels.is_some()).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let d: Self = crate::io::read_json(path)?;
        if d.format != FORMAT {
            return Err(Error::InvalidArgument(format!(
                "{} is not a dataset file (format `{}`)",
                path.display(),
                d.format
            )));
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn student(id: &str, split: Split, scale: f64, label: Option<f64>) -> RawStudent {
        RawStudent {
            student_id: id.into(),
            split,
            profile: vec![1.0, 0.0],
            behaviors: vec![vec![vec![scale, 2.0 * scale]; 3], vec![vec![1.0]; 3]],
            histories: vec![vec![60.0 + scale], vec![], vec![scale, scale + 1.0]],
            task_features: vec![vec![scale; 2], vec![], vec![1.0; 3]],
            labels: label.map(|l| vec![l, 5.0 + scale, 1.0]),
        }
    }

    #[test]
    fn scalers_ignore_non_training_students() {
        let students = vec![
            student("a", Split::Train, 0.0, Some(60.0)),
            student("b", Split::Train, 4.0, Some(80.0)),
            student("c", Split::Test, 100.0, Some(100.0)),
        ];
        let d = Dataset::assemble(students, None, None).unwrap();
        assert_eq!(d.scalers.labels.min, vec![60.0, 5.0, 1.0]);
        assert_eq!(d.scalers.labels.max, vec![80.0, 9.0, 1.0]);
        let test = &d.samples[2];
        // unit-interval inputs clamp, labels pass through
        assert!(test.behaviors[0].data().iter().all(|&v| v == 1.0));
        assert_eq!(test.labels.as_ref().unwrap()[0], 3.0);
        assert_eq!(d.samples[0].labels.as_ref().unwrap(), &vec![-1.0, -1.0, 0.0]);
        assert_eq!(d.behavior_dims, vec![2, 1]);
        assert_eq!(d.task_feature_dims, vec![2, 0, 3]);
        assert_eq!(d.days, 3);
    }

    #[test]
    fn empty_history_everywhere_yields_degenerate_scaler() {
        let d = Dataset::assemble(vec![student("a", Split::Train, 1.0, Some(70.0))], None, None).unwrap();
        assert_eq!(d.scalers.histories[1].min, vec![0.0]);
        assert!(d.samples[0].histories[1].is_empty());
    }

    #[test]
    fn missing_training_labels_is_an_error() {
        let r = Dataset::assemble(vec![student("a", Split::Train, 1.0, None)], None, None);
        assert!(matches!(r, Err(Error::Empty(_))));
        assert!(Dataset::assemble(vec![], None, None).is_err());
    }

    #[test]
    fn reused_scalers_must_match() {
        let d = Dataset::assemble(vec![student("a", Split::Train, 1.0, Some(70.0))], None, None).unwrap();
        let mut other = student("z", Split::Test, 1.0, None);
        other.task_features[0].push(0.0);
        assert!(Dataset::assemble(vec![other], None, Some(d.scalers.clone())).is_err());
        let ok = Dataset::assemble(vec![student("z", Split::Test, 1.0, None)], None, Some(d.scalers)).unwrap();
        assert!(ok.samples[0].labels.is_none());
    }

    #[test]
    fn splits_partition_students() {
        let s = assign_splits(1000, [0.7, 0.1, 0.2], 3).unwrap();
        let count = |k| s.iter().filter(|&&x| x == k).count();
        assert_eq!((count(Split::Train), count(Split::Validation), count(Split::Test)), (700, 100, 200));
        assert_eq!(s, assign_splits(1000, [0.7, 0.1, 0.2], 3).unwrap());
        assert_ne!(s, assign_splits(1000, [0.7, 0.1, 0.2], 4).unwrap());
        assert!(assign_splits(10, [0.9, 0.9, 0.0], 0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = Dataset::assemble(
            vec![student("a", Split::Train, 0.5, Some(70.0)), student("b", Split::Train, 2.5, Some(75.0))],
            None,
            None,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.json");
        d.save(&p).unwrap();
        assert_eq!(Dataset::load(&p).unwrap(), d);
    }
}
