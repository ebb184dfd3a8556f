use super::{Array, Graph, Var};
use crate::{Error, Result};

pub const ERROR_FLOOR: f64 = 1e-6;
/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Outcome of comparing analytic gradients with central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// `(parameter index, flat entry index)` of the worst entry.
    pub worst: Option<(usize, usize)>,
    /// Analytic and numeric derivative at the worst entry.
    pub worst_values: Option<(f64, f64)>,
    pub entries_checked: usize,
}

/// Central-difference check of every entry of every parameter.
///
/// `build` receives a fresh graph and the parameters bound as leaves (in the
/// order given) and must return a one-element loss. The per-entry error is
/// `|analytic - numeric| / max(|analytic|, |numeric|, ERROR_FLOOR)`; the floor
/// keeps derivatives near zero from being judged on central-difference
/// roundoff alone.
pub fn gradient_check<F>(params: &[Array], eps: f64, build: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let eval = |ps: &[Array]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = ps.iter().map(|p| g.param(p.clone())).collect();
        let root = build(&mut g, &vars)?;
        let v = g.value(root).data().iter().sum::<f64>();
        if !v.is_finite() {
            return Err(Error::NonFinite("loss in gradient check".into()));
        }
        Ok(v)
    };

    let mut g = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| g.param(p.clone())).collect();
    let root = build(&mut g, &vars)?;
    if !g.value(root).all_finite() {
        return Err(Error::NonFinite("loss in gradient check".into()));
    }
    let analytic = g.backward(root)?.take_all(&vars)?;

    let mut work = params.to_vec();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        worst_values: None,
        entries_checked: 0,
    };
    for (pi, grad) in analytic.iter().enumerate() {
        for k in 0..grad.len() {
            let orig = work[pi].data()[k];
            work[pi].data_mut()[k] = orig + eps;
            let up = eval(&work)?;
            work[pi].data_mut()[k] = orig - eps;
            let down = eval(&work)?;
            work[pi].data_mut()[k] = orig;

            let numeric = (up - down) / (2.0 * eps);
            let a = grad.data()[k];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(ERROR_FLOOR);
            report.entries_checked += 1;
            if err > report.max_relative_error || report.worst.is_none() {
                report.max_relative_error = err;
                report.worst = Some((pi, k));
                report.worst_values = Some((a, numeric));
            }
        }
    }
    Ok(report)
}
