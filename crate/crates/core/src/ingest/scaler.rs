use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleKind {
    /// Maps `[min, max]` onto `[0, 1]`, clamping out-of-range inputs.
    UnitInterval,
    /// Maps `[min, max]` onto `[-1, 1]` without clamping. Used for labels.
    SymmetricUnit,
}

/// Per-feature min-max scaler. A feature with `min == max` maps to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub kind: ScaleKind,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    /// Fits one scaler over rows of equal width.
    pub fn fit<'a, I>(rows: I, kind: ScaleKind) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut min: Vec<f64> = Vec::new();
        let mut max: Vec<f64> = Vec::new();
        let mut seen = false;
        for row in rows {
            if !seen {
                min = row.to_vec();
                max = row.to_vec();
                seen = true;
                continue;
            }
            if row.len() != min.len() {
                return Err(Error::InvalidArgument(format!(
                    "scaler rows differ in width: {} vs {}",
                    min.len(),
                    row.len()
                )));
            }
            for (j, &x) in row.iter().enumerate() {
                min[j] = min[j].min(x);
                max[j] = max[j].max(x);
            }
        }
        if !seen {
            return Err(Error::Empty("scaler training values"));
        }
        Ok(Self { kind, min, max })
    }

    /// Single-feature convenience.
    pub fn fit_values(values: &[f64], kind: ScaleKind) -> Result<Self> {
        Self::fit(values.iter().map(std::slice::from_ref), kind)
    }

    pub fn width(&self) -> usize {
        self.min.len()
    }

    pub fn apply_value(&self, j: usize, x: f64) -> f64 {
        let (lo, hi) = (self.min[j], self.max[j]);
        if hi == lo {
            return 0.0;
        }
        let u = (x - lo) / (hi - lo);
        match self.kind {
            ScaleKind::UnitInterval => u.clamp(0.0, 1.0),
            ScaleKind::SymmetricUnit => 2.0 * u - 1.0,
        }
    }

    pub fn invert_value(&self, j: usize, y: f64) -> f64 {
        let (lo, hi) = (self.min[j], self.max[j]);
        if hi == lo {
            return lo;
        }
        let u = match self.kind {
            ScaleKind::UnitInterval => y,
            ScaleKind::SymmetricUnit => (y + 1.0) / 2.0,
        };
        u * (hi - lo) + lo
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(j, &x)| self.apply_value(j, x)).collect()
    }

    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(j, &y)| self.invert_value(j, y)).collect()
    }
}
