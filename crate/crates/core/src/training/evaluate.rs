use serde::{Deserialize, Serialize};

use crate::ingest::{Scaler, TaskSample};
use crate::model::Model;
use crate::{Error, Execution, Result};

/// Per-task test metrics in original label units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mse: Vec<f64>,
    pub students: usize,
    pub student_ids: Vec<String>,
    /// `predictions[i][n]`, original units.
    pub predictions: Vec<Vec<f64>>,
    /// `squared_errors[n][i]`, original units.
    pub squared_errors: Vec<Vec<f64>>,
}

/// De-scales predictions and labels with `labels`, then takes the MSE per
/// task.
pub fn evaluate(model: &Model, samples: &[&TaskSample], labels: &Scaler, exec: Execution) -> Result<EvalReport> {
    let tasks = model.config().task_count;
    if labels.width() != tasks {
        return Err(Error::InvalidArgument(format!(
            "label scaler has {} columns for {tasks} tasks",
            labels.width()
        )));
    }
    if samples.is_empty() {
        return Err(Error::Empty("evaluation samples"));
    }
    let rows = exec.map(samples, |_, s| -> Result<(Vec<f64>, Vec<f64>)> {
        let y = s
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("sample {} has no labels", s.student_id)))?;
        let (p, _) = model.predict(s)?;
        Ok((labels.invert(&p), labels.invert(y)))
    });
    let mut predictions = Vec::with_capacity(samples.len());
    let mut squared_errors = vec![Vec::with_capacity(samples.len()); tasks];
    for r in rows {
        let (p, y) = r?;
        for n in 0..tasks {
            squared_errors[n].push((p[n] - y[n]).powi(2));
        }
        predictions.push(p);
    }
    let mse = squared_errors
        .iter()
        .map(|e| e.iter().sum::<f64>() / e.len() as f64)
        .collect();
    Ok(EvalReport {
        mse,
        students: samples.len(),
        student_ids: samples.iter().map(|s| s.student_id.clone()).collect(),
        predictions,
        squared_errors,
    })
}

/// Eval-mode predictions in original units for samples with or without
/// labels.
pub fn predict_all(
    model: &Model,
    samples: &[&TaskSample],
    labels: &Scaler,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    exec.map(samples, |_, s| model.predict(s).map(|(p, _)| labels.invert(&p)))
        .into_iter()
        .collect()
}
