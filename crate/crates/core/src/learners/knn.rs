use super::{nearest, Classifier, ClassifierModel, Regressor, RegressorModel, Row};
use crate::error::{Error, Result};

/// k-nearest-neighbour classifier.
///
/// Distance ties prefer the lower training row. Vote ties go to the tied
/// label whose first neighbour is closest.
#[derive(Debug, Clone, Copy)]
pub struct KnnClassifier {
    k: usize,
}

impl KnnClassifier {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k-NN needs k >= 1".into()));
        }
        Ok(KnnClassifier { k })
    }
}

#[derive(Debug)]
struct KnnClassifierModel {
    k: usize,
    x: Vec<Row>,
    y: Vec<usize>,
}

impl Classifier for KnnClassifier {
    fn name(&self) -> String {
        format!("knn(k={})", self.k)
    }

    fn fit(&self, x: &[Row], y: &[usize], _seed: u64) -> Result<Box<dyn ClassifierModel>> {
        Ok(Box::new(KnnClassifierModel {
            k: self.k.min(x.len()),
            x: x.to_vec(),
            y: y.to_vec(),
        }))
    }
}

impl ClassifierModel for KnnClassifierModel {
    fn n_features(&self) -> usize {
        self.x[0].len()
    }

    fn predict_row(&self, row: &[f64]) -> usize {
        let neighbours = nearest(&self.x, row, self.k);
        // (label, votes) in order of first appearance among the neighbours
        let mut tally: Vec<(usize, usize)> = Vec::new();
        for &i in &neighbours {
            let label = self.y[i];
            match tally.iter_mut().find(|(l, _)| *l == label) {
                Some(entry) => entry.1 += 1,
                None => tally.push((label, 1)),
            }
        }
        let max = tally.iter().map(|t| t.1).max().unwrap_or(0);
        tally
            .into_iter()
            .find(|t| t.1 == max)
            .map(|t| t.0)
            .expect("at least one neighbour")
    }
}

/// Averages the targets of the k nearest training rows.
#[derive(Debug, Clone, Copy)]
pub struct KnnRegressor {
    k: usize,
}

impl KnnRegressor {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k-NN needs k >= 1".into()));
        }
        Ok(KnnRegressor { k })
    }
}

#[derive(Debug)]
struct KnnRegressorModel {
    k: usize,
    x: Vec<Row>,
    y: Vec<f64>,
}

impl Regressor for KnnRegressor {
    fn name(&self) -> String {
        format!("knn(k={})", self.k)
    }

    fn fit(&self, x: &[Row], y: &[f64], _seed: u64) -> Result<Box<dyn RegressorModel>> {
        Ok(Box::new(KnnRegressorModel {
            k: self.k.min(x.len()),
            x: x.to_vec(),
            y: y.to_vec(),
        }))
    }
}

impl RegressorModel for KnnRegressorModel {
    fn n_features(&self) -> usize {
        self.x[0].len()
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        let neighbours = nearest(&self.x, row, self.k);
        neighbours.iter().map(|&i| self.y[i]).sum::<f64>() / neighbours.len() as f64
    }
}
