//! Algorithm selection toolkit: data ingestion, partitioning, selector
//! builders, evaluation and preprocessing.

pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod learners;
pub mod partition;
pub mod pipeline;
pub mod preprocess;
pub mod selectors;

pub use dataset::{input, CostInput, Dataset, DatasetParts, FeatureCosts, FeatureGroup, Table};
pub use error::{Error, Result};
pub use evaluate::{
    misclassification_penalties, par_scores, single_best, successes, vbs, BestBy, EvalConfig,
    EvalData, Selector,
};
pub use partition::{cv_folds, train_test, Partitioning};
pub use selectors::{Prediction, SelectionModel, SelectorBuilder};
