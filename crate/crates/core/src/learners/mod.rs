//! Learner interface consumed by the selector builders, plus a small roster
//! of deterministic reference learners.
//!
//! A learner is a factory: `fit` consumes a feature matrix (row-major) and
//! targets and returns an immutable trained model. Trained models remember
//! the width of their training rows and reject rows of any other width.
//! External learners plug in by implementing [`Classifier`], [`Regressor`]
//! or [`Clusterer`] and wrapping them in the `Custom` spec variants.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

mod kmeans;
mod knn;
mod majority;
mod ols;
mod stump;

pub use kmeans::{KMeans, KMeansModel};
pub use knn::{KnnClassifier, KnnRegressor};
pub use majority::Majority;
pub use ols::{LeastSquares, LinearModel};
pub use stump::{DecisionStump, Stump};

pub type Row = Vec<f64>;

pub trait ClassifierModel: Send + Sync + fmt::Debug {
    fn n_features(&self) -> usize;
    fn predict_row(&self, row: &[f64]) -> usize;
}

pub trait RegressorModel: Send + Sync + fmt::Debug {
    fn n_features(&self) -> usize;
    fn predict_row(&self, row: &[f64]) -> f64;
}

pub trait ClusterModel: Send + Sync + fmt::Debug {
    fn n_features(&self) -> usize;
    fn n_clusters(&self) -> usize;
    fn assign_row(&self, row: &[f64]) -> usize;
}

/// Trains classifiers over integer labels.
pub trait Classifier: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn fit(&self, x: &[Row], y: &[usize], seed: u64) -> Result<Box<dyn ClassifierModel>>;
}

pub trait Regressor: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn fit(&self, x: &[Row], y: &[f64], seed: u64) -> Result<Box<dyn RegressorModel>>;
}

pub trait Clusterer: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn fit(&self, x: &[Row], seed: u64) -> Result<Box<dyn ClusterModel>>;
}

#[derive(Debug, Clone)]
pub enum ClassifierSpec {
    Majority,
    /// k-nearest-neighbour vote under Euclidean distance.
    Knn { k: usize },
    /// One-split decision tree.
    Stump,
    Custom(Arc<dyn Classifier>),
}

#[derive(Debug, Clone)]
pub enum RegressorSpec {
    /// Ordinary least squares with intercept.
    LeastSquares,
    /// Mean target of the k nearest training rows.
    Knn { k: usize },
    Custom(Arc<dyn Regressor>),
}

#[derive(Debug, Clone)]
pub enum ClustererSpec {
    KMeans { k: usize, max_iter: usize },
    Custom(Arc<dyn Clusterer>),
}

impl ClassifierSpec {
    fn learner(&self) -> Result<Arc<dyn Classifier>> {
        Ok(match self {
            ClassifierSpec::Majority => Arc::new(Majority),
            ClassifierSpec::Knn { k } => Arc::new(KnnClassifier::new(*k)?),
            ClassifierSpec::Stump => Arc::new(DecisionStump),
            ClassifierSpec::Custom(c) => c.clone(),
        })
    }

    pub fn name(&self) -> String {
        match self {
            ClassifierSpec::Majority => "majority".into(),
            ClassifierSpec::Knn { k } => format!("knn(k={k})"),
            ClassifierSpec::Stump => "stump".into(),
            ClassifierSpec::Custom(c) => c.name(),
        }
    }
}

impl RegressorSpec {
    fn learner(&self) -> Result<Arc<dyn Regressor>> {
        Ok(match self {
            RegressorSpec::LeastSquares => Arc::new(LeastSquares),
            RegressorSpec::Knn { k } => Arc::new(KnnRegressor::new(*k)?),
            RegressorSpec::Custom(r) => r.clone(),
        })
    }

    pub fn name(&self) -> String {
        match self {
            RegressorSpec::LeastSquares => "least-squares".into(),
            RegressorSpec::Knn { k } => format!("knn(k={k})"),
            RegressorSpec::Custom(r) => r.name(),
        }
    }
}

impl ClustererSpec {
    fn learner(&self) -> Result<Arc<dyn Clusterer>> {
        Ok(match self {
            ClustererSpec::KMeans { k, max_iter } => Arc::new(KMeans::new(*k, *max_iter)?),
            ClustererSpec::Custom(c) => c.clone(),
        })
    }

    pub fn name(&self) -> String {
        match self {
            ClustererSpec::KMeans { k, .. } => format!("kmeans(k={k})"),
            ClustererSpec::Custom(c) => c.name(),
        }
    }
}

/// A fitted model; cheap to clone and safe to share between threads.
#[derive(Debug)]
pub struct TrainedModel<M: ?Sized> {
    model: Arc<M>,
}

impl<M: ?Sized> Clone for TrainedModel<M> {
    fn clone(&self) -> Self {
        TrainedModel {
            model: self.model.clone(),
        }
    }
}

pub type TrainedClassifier = TrainedModel<dyn ClassifierModel>;
pub type TrainedRegressor = TrainedModel<dyn RegressorModel>;
pub type TrainedClusterer = TrainedModel<dyn ClusterModel>;

fn check_training(x: &[Row], n_targets: Option<usize>) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::Learner("empty training set".into()));
    }
    if let Some(t) = n_targets {
        if t != x.len() {
            return Err(Error::Learner(format!(
                "{} training rows but {t} targets",
                x.len()
            )));
        }
    }
    let width = x[0].len();
    if x.iter().any(|r| r.len() != width) {
        return Err(Error::Learner("training rows differ in width".into()));
    }
    Ok(width)
}

fn check_schema(expected: usize, x: &[Row]) -> Result<()> {
    match x.iter().find(|r| r.len() != expected) {
        Some(r) => Err(Error::Learner(format!(
            "row has {} features, model was trained on {expected}",
            r.len()
        ))),
        None => Ok(()),
    }
}

pub fn train_classifier(
    spec: &ClassifierSpec,
    x: &[Row],
    y: &[usize],
    seed: u64,
) -> Result<TrainedClassifier> {
    check_training(x, Some(y.len()))?;
    let model: Arc<dyn ClassifierModel> = spec.learner()?.fit(x, y, seed)?.into();
    Ok(TrainedModel { model })
}

pub fn train_regressor(
    spec: &RegressorSpec,
    x: &[Row],
    y: &[f64],
    seed: u64,
) -> Result<TrainedRegressor> {
    check_training(x, Some(y.len()))?;
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::Learner(format!("non-finite regression target {v}")));
    }
    let model: Arc<dyn RegressorModel> = spec.learner()?.fit(x, y, seed)?.into();
    Ok(TrainedModel { model })
}

pub fn train_clusterer(spec: &ClustererSpec, x: &[Row], seed: u64) -> Result<TrainedClusterer> {
    check_training(x, None)?;
    let model: Arc<dyn ClusterModel> = spec.learner()?.fit(x, seed)?.into();
    Ok(TrainedModel { model })
}

impl TrainedClassifier {
    pub fn n_features(&self) -> usize {
        self.model.n_features()
    }

    pub fn predict_labels(&self, x: &[Row]) -> Result<Vec<usize>> {
        check_schema(self.model.n_features(), x)?;
        Ok(x.iter().map(|r| self.model.predict_row(r)).collect())
    }
}

impl TrainedRegressor {
    pub fn n_features(&self) -> usize {
        self.model.n_features()
    }

    pub fn predict_values(&self, x: &[Row]) -> Result<Vec<f64>> {
        check_schema(self.model.n_features(), x)?;
        Ok(x.iter().map(|r| self.model.predict_row(r)).collect())
    }
}

impl TrainedClusterer {
    pub fn n_features(&self) -> usize {
        self.model.n_features()
    }

    pub fn n_clusters(&self) -> usize {
        self.model.n_clusters()
    }

    pub fn assign_cluster(&self, x: &[Row]) -> Result<Vec<usize>> {
        check_schema(self.model.n_features(), x)?;
        Ok(x.iter().map(|r| self.model.assign_row(r)).collect())
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` rows closest to `query`; distance ties go to the lower index.
pub(crate) fn nearest(x: &[Row], query: &[f64], k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = x
        .iter()
        .enumerate()
        .map(|(i, r)| (squared_distance(r, query), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Most frequent label; ties go to the smallest label.
pub(crate) fn modal_label(labels: impl IntoIterator<Item = usize>) -> Option<usize> {
    let mut counts: Vec<usize> = Vec::new();
    for l in labels {
        if l >= counts.len() {
            counts.resize(l + 1, 0);
        }
        counts[l] += 1;
    }
    let max = *counts.iter().max()?;
    if max == 0 {
        return None;
    }
    counts.iter().position(|&c| c == max)
}
