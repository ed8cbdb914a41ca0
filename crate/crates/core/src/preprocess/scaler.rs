use super::{Preprocessor, Transform};
use crate::error::{Error, Result};
use crate::learners::Row;

/// Per-feature min-max scaling onto `[-1, 1]`.
///
/// Constant features map to 0. Rows outside the fitted range are
/// extrapolated, not clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[Row]) -> Result<Scaler> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Validation("cannot fit a scaler on zero rows".into()))?;
        let mut min = first.clone();
        let mut max = first.clone();
        for r in rows {
            if r.len() != min.len() {
                return Err(Error::Schema("rows differ in width".into()));
            }
            for (j, &v) in r.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Scaler { min, max })
    }

    pub fn apply(&self, rows: &[Row]) -> Result<Vec<Row>> {
        rows.iter()
            .map(|r| {
                if r.len() != self.min.len() {
                    return Err(Error::Schema(format!(
                        "row has {} features, scaler was fitted on {}",
                        r.len(),
                        self.min.len()
                    )));
                }
                Ok(r.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let (lo, hi) = (self.min[j], self.max[j]);
                        if hi > lo {
                            2.0 * (v - lo) / (hi - lo) - 1.0
                        } else {
                            0.0
                        }
                    })
                    .collect())
            })
            .collect()
    }
}

pub fn fit_scaler(rows: &[Row]) -> Result<Scaler> {
    Scaler::fit(rows)
}

pub fn apply_scaler(scaler: &Scaler, rows: &[Row]) -> Result<Vec<Row>> {
    scaler.apply(rows)
}

impl Transform for Scaler {
    fn apply(&self, rows: &[Row]) -> Result<Vec<Row>> {
        Scaler::apply(self, rows)
    }
}

/// The `[-1, 1]` normalisation as a builder preprocessing step.
#[derive(Debug, Clone, Copy, Default)]
pub struct Normalize;

impl Preprocessor for Normalize {
    fn name(&self) -> String {
        "normalize".into()
    }

    fn fit(&self, rows: &[Row]) -> Result<Box<dyn Transform>> {
        Ok(Box::new(Scaler::fit(rows)?))
    }
}
