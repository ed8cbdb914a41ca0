//! Staged selection: a presolver dispatches easy instances, a gate model
//! predicts the cost of computing the full feature set and falls back to a
//! backup solver when that is too expensive, an optional class model routes
//! the remaining instances to class-specific selectors.
//!
//! Solvers are never executed here; whether the presolver succeeded is
//! supplied by the caller.

use std::collections::BTreeSet;
use std::sync::Arc;

use log::warn;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{
    train_classifier, train_regressor, ClassifierSpec, RegressorSpec, Row, TrainedClassifier,
    TrainedRegressor,
};
use crate::partition::{cv_folds, derive_seed, DEFAULT_FOLDS, DEFAULT_SEED};
use crate::selectors::{Prediction, SelectionModel, SelectorBuilder};

/// Instances on which `presolver` needs more than `limit`.
pub fn presolve_filter(d: &Dataset, presolver: &str, limit: f64) -> Result<Dataset> {
    let rows = presolve_mask(d, presolver, limit)?
        .into_iter()
        .enumerate()
        .filter_map(|(i, keep)| keep.then_some(i))
        .collect::<Vec<_>>();
    if rows.is_empty() {
        return Err(Error::Config(format!(
            "presolver '{presolver}' solves every instance within {limit}; nothing left to train on"
        )));
    }
    d.subset(&rows)
}

fn presolve_mask(d: &Dataset, presolver: &str, limit: f64) -> Result<Vec<bool>> {
    if !(limit > 0.0) {
        return Err(Error::Config(format!("presolve limit must be positive, got {limit}")));
    }
    let a = d
        .algorithm_index(presolver)
        .ok_or_else(|| Error::Config(format!("unknown presolver '{presolver}'")))?;
    Ok(d.performances().iter().map(|r| r[a] > limit).collect())
}

#[derive(Debug, Clone)]
pub struct GateConfig {
    /// Cheap features the gate model sees; must be features of the dataset.
    pub reduced_features: Vec<String>,
    pub regressor: RegressorSpec,
    pub feature_time_limit: f64,
}

#[derive(Debug, Clone)]
pub struct StagedSelectorConfig {
    pub presolver: String,
    pub presolve_limit: f64,
    pub backup: String,
    pub gate: Option<GateConfig>,
    /// Predicts the instance class (for example satisfiable or not) from the
    /// full features; one selector is then trained per class.
    pub class_model: Option<ClassifierSpec>,
    pub builder: SelectorBuilder,
    pub nfolds: usize,
    pub stratify: bool,
    pub seed: u64,
}

impl StagedSelectorConfig {
    pub fn new(presolver: &str, presolve_limit: f64, backup: &str, builder: SelectorBuilder) -> Self {
        StagedSelectorConfig {
            presolver: presolver.into(),
            presolve_limit,
            backup: backup.into(),
            gate: None,
            class_model: None,
            builder,
            nfolds: DEFAULT_FOLDS,
            stratify: false,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Presolved,
    Backup,
    Selected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagedDecision {
    pub stage: Stage,
    pub algorithm: usize,
    pub algorithm_name: String,
    /// Ranking of the class selector when `stage` is `Selected`.
    pub prediction: Option<Prediction>,
}

#[derive(Debug)]
struct Gate {
    model: TrainedRegressor,
    limit: f64,
}

#[derive(Debug, Clone)]
pub struct StagedSelector {
    algorithm_names: Vec<String>,
    presolver: usize,
    backup: usize,
    gate: Option<Arc<Gate>>,
    class_model: Option<TrainedClassifier>,
    class_names: Vec<String>,
    selectors: Vec<SelectionModel>,
    to_solve: Vec<bool>,
}

impl StagedSelector {
    /// Instances the class selectors were trained on, aligned with the
    /// training dataset.
    pub fn to_solve(&self) -> &[bool] {
        &self.to_solve
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Selectors in the order of [`StagedSelector::class_names`]; a single
    /// entry when no class split is used.
    pub fn selectors(&self) -> &[SelectionModel] {
        &self.selectors
    }

    pub fn predicted_feature_time(&self, reduced: &[f64]) -> Result<Option<f64>> {
        match &self.gate {
            None => Ok(None),
            Some(g) => Ok(Some(g.model.predict_values(&[reduced.to_vec()])?[0])),
        }
    }

    /// Walks the stages for one instance.
    ///
    /// `reduced` holds the gate features (ignored without a gate);
    /// `full_features` is only called once the gate lets the instance
    /// through, and its failure sends the instance to the backup solver.
    pub fn decide(
        &self,
        presolved: bool,
        reduced: &[f64],
        full_features: impl FnOnce() -> Result<Row>,
    ) -> Result<StagedDecision> {
        if presolved {
            return Ok(self.fixed(Stage::Presolved, self.presolver));
        }
        if let Some(g) = &self.gate {
            if self.predicted_feature_time(reduced)?.is_some_and(|t| t > g.limit) {
                return Ok(self.fixed(Stage::Backup, self.backup));
            }
        }
        let row = match full_features() {
            Ok(r) => r,
            Err(e) => {
                warn!("feature computation failed, using backup solver: {e}");
                return Ok(self.fixed(Stage::Backup, self.backup));
            }
        };
        let rows = [row];
        let class = match &self.class_model {
            Some(m) => m.predict_labels(&rows)?[0],
            None => 0,
        };
        let prediction = self.selectors[class].predict_new(&rows)?.remove(0);
        let algorithm = prediction.top();
        Ok(StagedDecision {
            stage: Stage::Selected,
            algorithm,
            algorithm_name: self.algorithm_names[algorithm].clone(),
            prediction: Some(prediction),
        })
    }

    fn fixed(&self, stage: Stage, algorithm: usize) -> StagedDecision {
        StagedDecision {
            stage,
            algorithm,
            algorithm_name: self.algorithm_names[algorithm].clone(),
            prediction: None,
        }
    }
}

/// Trains the stages of a [`StagedSelector`].
///
/// `feature_times` (needed with a gate) and `class_labels` (needed with a
/// class model) are aligned with the instances of `d`.
pub fn build_staged(
    cfg: &StagedSelectorConfig,
    d: &Dataset,
    feature_times: Option<&[f64]>,
    class_labels: Option<&[String]>,
) -> Result<StagedSelector> {
    let mut to_solve = presolve_mask(d, &cfg.presolver, cfg.presolve_limit)?;
    let presolver = d.algorithm_index(&cfg.presolver).expect("checked by presolve_mask");
    let backup = d
        .algorithm_index(&cfg.backup)
        .ok_or_else(|| Error::Config(format!("unknown backup solver '{}'", cfg.backup)))?;

    let gate = match &cfg.gate {
        None => None,
        Some(g) => {
            if !(g.feature_time_limit > 0.0) {
                return Err(Error::Config(format!(
                    "feature time limit must be positive, got {}",
                    g.feature_time_limit
                )));
            }
            let times = aligned(feature_times, d.len(), "feature times")?;
            let reduced = d.select_features(&g.reduced_features)?;
            let model = train_regressor(
                &g.regressor,
                reduced.features(),
                times,
                derive_seed(cfg.seed, 0),
            )?;
            for (keep, &t) in to_solve.iter_mut().zip(times) {
                *keep &= t < g.feature_time_limit;
            }
            Some(Arc::new(Gate {
                model,
                limit: g.feature_time_limit,
            }))
        }
    };

    let rows: Vec<usize> = (0..d.len()).filter(|&i| to_solve[i]).collect();
    if rows.is_empty() {
        return Err(Error::Config(
            "no instances left after presolver and feature-time filtering".into(),
        ));
    }

    let (class_model, class_names, groups) = match &cfg.class_model {
        None => (None, Vec::new(), vec![rows.clone()]),
        Some(spec) => {
            let labels = aligned(class_labels, d.len(), "class labels")?;
            let names: Vec<String> = rows
                .iter()
                .map(|&i| labels[i].clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let class_of = |i: usize| names.iter().position(|n| *n == labels[i]).unwrap();
            let groups: Vec<Vec<usize>> = (0..names.len())
                .map(|c| rows.iter().copied().filter(|&i| class_of(i) == c).collect())
                .collect();
            if names.len() == 1 {
                warn!(
                    "all training instances have class '{}'; using a single selector",
                    names[0]
                );
                (None, names, groups)
            } else {
                let x: Vec<Row> = rows.iter().map(|&i| d.features()[i].clone()).collect();
                let y: Vec<usize> = rows.iter().map(|&i| class_of(i)).collect();
                let model = train_classifier(spec, &x, &y, derive_seed(cfg.seed, 1))?;
                (Some(model), names, groups)
            }
        }
    };

    let selectors = groups
        .iter()
        .enumerate()
        .map(|(c, group)| {
            if group.len() < 2 {
                return Err(Error::Config(format!(
                    "class selector {c} has {} training instance(s); at least 2 are needed",
                    group.len()
                )));
            }
            let sub = Arc::new(d.subset(group)?);
            let nfolds = cfg.nfolds.min(group.len());
            let p = cv_folds(sub, nfolds, cfg.stratify, derive_seed(cfg.seed, 2 + c as u64))?;
            cfg.builder.build(&p)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(StagedSelector {
        algorithm_names: d.algorithm_names().to_vec(),
        presolver,
        backup,
        gate,
        class_model,
        class_names,
        selectors,
        to_solve,
    })
}

fn aligned<'a, T>(values: Option<&'a [T]>, n: usize, what: &str) -> Result<&'a [T]> {
    let v = values.ok_or_else(|| Error::Config(format!("{what} are required for this stage")))?;
    if v.len() != n {
        return Err(Error::Schema(format!(
            "{what} cover {} instances, the dataset has {n}",
            v.len()
        )));
    }
    Ok(v)
}
