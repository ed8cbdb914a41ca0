//! Selector builders.
//!
//! Every builder follows the same protocol: for each test partition of a
//! [`Partitioning`] it fits on the complementary training instances and
//! predicts the test instances, then fits once more on the whole dataset to
//! obtain a predictor for new instances. Partitions are processed in
//! parallel; each gets a seed derived from the partitioning seed, so results
//! do not depend on the number of worker threads.
//!
//! Score semantics of a [`Prediction`] depend on the builder:
//!
//! | builder          | ranking                      | score                          |
//! |------------------|------------------------------|--------------------------------|
//! | classify         | the predicted algorithm      | 1                              |
//! | classify (list)  | algorithms with votes        | number of votes                |
//! | regression       | all algorithms               | predicted performance          |
//! | classify_pairs   | all algorithms               | pairwise votes won             |
//! | cluster          | all algorithms               | cluster aggregate (`best_by`)  |
//! | any, stacked     | the combiner's choice        | 1                              |

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{train_classifier, ClassifierSpec, Row, TrainedClassifier};
use crate::partition::Partitioning;
use crate::preprocess::{Preprocessor, Transform};

mod classify;
mod cluster;
mod pairs;
mod regression;

pub use classify::{classify, Classify};
pub use cluster::{cluster, BestBy, Cluster};
pub use pairs::{classify_pairs, ClassifyPairs};
pub use regression::{regression, Expansion, Regression};

/// One entry of a ranked prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ranked {
    /// Column index of the algorithm in the dataset.
    pub algorithm: usize,
    pub score: f64,
}

/// Ranked list of algorithms for one instance, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    ranking: Vec<Ranked>,
}

impl Prediction {
    pub fn new(ranking: Vec<Ranked>) -> Result<Self> {
        if ranking.is_empty() {
            return Err(Error::Validation("a prediction needs at least one algorithm".into()));
        }
        let mut seen: Vec<usize> = ranking.iter().map(|r| r.algorithm).collect();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("algorithm repeated in prediction".into()));
        }
        Ok(Prediction { ranking })
    }

    /// A prediction naming one algorithm with score 1.
    pub fn single(algorithm: usize) -> Self {
        Prediction {
            ranking: vec![Ranked {
                algorithm,
                score: 1.0,
            }],
        }
    }

    /// Ranks `(algorithm, score)` pairs by score; equal scores keep column order.
    pub fn ranked_by_score(mut scores: Vec<(usize, f64)>, ascending: bool) -> Self {
        scores.sort_by(|a, b| {
            let ord = if ascending {
                a.1.total_cmp(&b.1)
            } else {
                b.1.total_cmp(&a.1)
            };
            ord.then(a.0.cmp(&b.0))
        });
        Prediction {
            ranking: scores
                .into_iter()
                .map(|(algorithm, score)| Ranked { algorithm, score })
                .collect(),
        }
    }

    /// Vote tally over `n_algorithms`; algorithms without votes are omitted.
    pub fn from_votes(votes: &[usize]) -> Self {
        let scores = votes
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(a, &v)| (a, v as f64))
            .collect();
        Prediction::ranked_by_score(scores, false)
    }

    pub fn top(&self) -> usize {
        self.ranking[0].algorithm
    }

    pub fn ranking(&self) -> &[Ranked] {
        &self.ranking
    }

    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    pub fn score_of(&self, algorithm: usize) -> Option<f64> {
        self.ranking
            .iter()
            .find(|r| r.algorithm == algorithm)
            .map(|r| r.score)
    }
}

/// A selector fitted on one set of training instances.
pub(crate) trait FittedSelector: Send + Sync + fmt::Debug {
    /// Predicts already preprocessed rows.
    fn predict(&self, x: &[Row]) -> Result<Vec<Prediction>>;
}

/// Fitted preprocessing followed by a fitted selector.
#[derive(Debug)]
struct Fitted {
    width: usize,
    transform: Option<Box<dyn Transform>>,
    selector: Box<dyn FittedSelector>,
}

impl Fitted {
    fn predict(&self, rows: &[Row]) -> Result<Vec<Prediction>> {
        if let Some(r) = rows.iter().find(|r| r.len() != self.width) {
            return Err(Error::Schema(format!(
                "row has {} features, the selector was trained on {}",
                r.len(),
                self.width
            )));
        }
        match &self.transform {
            Some(t) => self.selector.predict(&t.apply(rows)?),
            None => self.selector.predict(rows),
        }
    }
}

/// Training view handed to the builder-specific fit functions.
pub(crate) struct Training<'a> {
    pub d: &'a Dataset,
    pub rows: &'a [usize],
    /// Preprocessed feature rows, aligned with `rows`.
    pub x: Vec<Row>,
    pub seed: u64,
}

impl Training<'_> {
    pub fn labels(&self) -> Vec<usize> {
        self.rows.iter().map(|&i| self.d.best(i)).collect()
    }

    pub fn performance(&self, pos: usize, algorithm: usize) -> f64 {
        self.d.performances()[self.rows[pos]][algorithm]
    }
}

/// Result of a builder: per-partition predictions plus a full-data predictor.
#[derive(Debug, Clone)]
pub struct SelectionModel {
    description: String,
    algorithm_names: Vec<String>,
    feature_names: Vec<String>,
    test_sets: Vec<Vec<usize>>,
    predictions: Vec<Vec<Prediction>>,
    predictor: Arc<Fitted>,
}

impl SelectionModel {
    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn algorithm_names(&self) -> &[String] {
        &self.algorithm_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Test partitions the predictions refer to.
    pub fn test_sets(&self) -> &[Vec<usize>] {
        &self.test_sets
    }

    /// Predictions per test partition, aligned with the partition's instances.
    pub fn predictions(&self) -> &[Vec<Prediction>] {
        &self.predictions
    }

    /// Predictions for new feature rows from the model trained on all data.
    pub fn predict_new(&self, rows: &[Row]) -> Result<Vec<Prediction>> {
        self.predictor.predict(rows)
    }
}

/// See [`SelectionModel::predict_new`].
pub fn predict_new(model: &SelectionModel, rows: &[Row]) -> Result<Vec<Prediction>> {
    model.predict_new(rows)
}

type FitFn<'f> = dyn Fn(&Training<'_>) -> Result<Box<dyn FittedSelector>> + Sync + 'f;

fn fit_on(
    d: &Dataset,
    rows: &[usize],
    seed: u64,
    pre: Option<&Arc<dyn Preprocessor>>,
    fit: &FitFn<'_>,
) -> Result<Fitted> {
    let raw: Vec<Row> = rows.iter().map(|&i| d.features()[i].clone()).collect();
    let (transform, x) = match pre {
        Some(p) => {
            let t = p.fit(&raw)?;
            let x = t.apply(&raw)?;
            (Some(t), x)
        }
        None => (None, raw),
    };
    let selector = fit(&Training { d, rows, x, seed })?;
    Ok(Fitted {
        width: d.feature_names().len(),
        transform,
        selector,
    })
}

/// Runs the per-partition protocol shared by all builders.
pub(crate) fn run_protocol(
    p: &Partitioning,
    description: String,
    pre: Option<&Arc<dyn Preprocessor>>,
    fit: &FitFn<'_>,
) -> Result<SelectionModel> {
    let d = p.dataset().as_ref();
    let predictions = (0..p.len())
        .into_par_iter()
        .map(|part| {
            let train = p.train(part);
            if train.is_empty() {
                return Err(Error::Config(format!("partition {part} has no training data")));
            }
            let fitted = fit_on(d, train, p.part_seed(part), pre, fit)?;
            let rows: Vec<Row> = p
                .test(part)
                .iter()
                .map(|&i| d.features()[i].clone())
                .collect();
            fitted.predict(&rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<usize> = (0..d.len()).collect();
    let predictor = fit_on(d, &all, p.part_seed(p.len()), pre, fit)?;
    Ok(SelectionModel {
        description,
        algorithm_names: d.algorithm_names().to_vec(),
        feature_names: d.feature_names().to_vec(),
        test_sets: p.test_sets().to_vec(),
        predictions,
        predictor: Arc::new(predictor),
    })
}

/// One-hot encodes labels from several first-layer models.
pub(crate) fn one_hot(labels: &[usize], n_algorithms: usize) -> Row {
    let mut row = vec![0.0; labels.len() * n_algorithms];
    for (k, &l) in labels.iter().enumerate() {
        row[k * n_algorithms + l] = 1.0;
    }
    row
}

/// Second-layer classifier over engineered inputs; predicts one algorithm.
#[derive(Debug)]
pub(crate) struct Combiner {
    model: TrainedClassifier,
}

impl Combiner {
    pub fn fit(spec: &ClassifierSpec, inputs: &[Row], labels: &[usize], seed: u64) -> Result<Self> {
        Ok(Combiner {
            model: train_classifier(spec, inputs, labels, seed)?,
        })
    }

    pub fn predict(&self, inputs: &[Row]) -> Result<Vec<Prediction>> {
        Ok(self
            .model
            .predict_labels(inputs)?
            .into_iter()
            .map(Prediction::single)
            .collect())
    }
}

/// Builder configuration for any of the four selector kinds.
#[derive(Debug, Clone)]
pub enum SelectorBuilder {
    Classify(Classify),
    Regression(Regression),
    ClassifyPairs(ClassifyPairs),
    Cluster(Cluster),
}

impl SelectorBuilder {
    pub fn build(&self, p: &Partitioning) -> Result<SelectionModel> {
        match self {
            SelectorBuilder::Classify(b) => b.build(p),
            SelectorBuilder::Regression(b) => b.build(p),
            SelectorBuilder::ClassifyPairs(b) => b.build(p),
            SelectorBuilder::Cluster(b) => b.build(p),
        }
    }

    pub fn description(&self) -> String {
        match self {
            SelectorBuilder::Classify(b) => b.description(),
            SelectorBuilder::Regression(b) => b.description(),
            SelectorBuilder::ClassifyPairs(b) => b.description(),
            SelectorBuilder::Cluster(b) => b.description(),
        }
    }
}

fn pre_suffix(pre: Option<&Arc<dyn Preprocessor>>) -> String {
    pre.map(|p| format!(", pre={}", p.name())).unwrap_or_default()
}
