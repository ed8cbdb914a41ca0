//! Feature filtering, feature scaling and imputation of censored runs.

use std::fmt;

use crate::error::Result;
use crate::learners::Row;

mod filter;
mod impute;
mod scaler;

pub use filter::{feature_filter, FeatureScorer, FilterMethod, FilterReport};
pub use impute::{impute_censored, BelowCutoff, Imputation, ImputeOptions};
pub use scaler::{apply_scaler, fit_scaler, Normalize, Scaler};

/// Preprocessing step fitted on training rows and replayed on new rows.
pub trait Preprocessor: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn fit(&self, rows: &[Row]) -> Result<Box<dyn Transform>>;
}

/// A fitted preprocessing step.
pub trait Transform: Send + Sync + fmt::Debug {
    fn apply(&self, rows: &[Row]) -> Result<Vec<Row>>;
}
