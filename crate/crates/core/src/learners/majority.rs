use super::{modal_label, Classifier, ClassifierModel, Row};
use crate::error::Result;

/// Predicts the most frequent training label for every row.
#[derive(Debug, Clone, Copy, Default)]
pub struct Majority;

#[derive(Debug)]
struct MajorityModel {
    width: usize,
    label: usize,
}

impl Classifier for Majority {
    fn name(&self) -> String {
        "majority".into()
    }

    fn fit(&self, x: &[Row], y: &[usize], _seed: u64) -> Result<Box<dyn ClassifierModel>> {
        Ok(Box::new(MajorityModel {
            width: x[0].len(),
            label: modal_label(y.iter().copied()).expect("non-empty training set"),
        }))
    }
}

impl ClassifierModel for MajorityModel {
    fn n_features(&self) -> usize {
        self.width
    }

    fn predict_row(&self, _row: &[f64]) -> usize {
        self.label
    }
}
