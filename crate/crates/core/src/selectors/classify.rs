use std::sync::Arc;

use super::{
    one_hot, pre_suffix, run_protocol, Combiner, FittedSelector, Prediction, SelectionModel,
    Training,
};
use crate::error::{Error, Result};
use crate::learners::{train_classifier, ClassifierSpec, Row, TrainedClassifier};
use crate::partition::{derive_seed, Partitioning};
use crate::preprocess::Preprocessor;

/// Predicts the best algorithm directly from the features.
///
/// One learner yields its label with score 1. Several learners form an
/// ensemble whose score is the vote count. With `combine`, the first-layer
/// labels (one-hot encoded) feed a second-layer classifier.
#[derive(Debug, Clone)]
pub struct Classify {
    pub learners: Vec<ClassifierSpec>,
    pub combine: Option<ClassifierSpec>,
    pub pre: Option<Arc<dyn Preprocessor>>,
}

impl Classify {
    pub fn new(learner: ClassifierSpec) -> Self {
        Classify::ensemble(vec![learner])
    }

    pub fn ensemble(learners: Vec<ClassifierSpec>) -> Self {
        Classify {
            learners,
            combine: None,
            pre: None,
        }
    }

    pub fn with_combine(mut self, combine: ClassifierSpec) -> Self {
        self.combine = Some(combine);
        self
    }

    pub fn with_pre(mut self, pre: Arc<dyn Preprocessor>) -> Self {
        self.pre = Some(pre);
        self
    }

    pub fn description(&self) -> String {
        let names: Vec<String> = self.learners.iter().map(ClassifierSpec::name).collect();
        let combine = self
            .combine
            .as_ref()
            .map(|c| format!(", combine={}", c.name()))
            .unwrap_or_default();
        format!(
            "classify[{}{combine}{}]",
            names.join(","),
            pre_suffix(self.pre.as_ref())
        )
    }

    pub fn build(&self, p: &Partitioning) -> Result<SelectionModel> {
        if self.learners.is_empty() {
            return Err(Error::Config(
                "classify needs at least one classifier (a combiner alone is not enough)".into(),
            ));
        }
        run_protocol(p, self.description(), self.pre.as_ref(), &|t| self.fit(t))
    }

    fn fit(&self, t: &Training<'_>) -> Result<Box<dyn FittedSelector>> {
        let labels = t.labels();
        let base = self
            .learners
            .iter()
            .enumerate()
            .map(|(k, spec)| train_classifier(spec, &t.x, &labels, derive_seed(t.seed, k as u64)))
            .collect::<Result<Vec<_>>>()?;
        let n_algorithms = t.d.n_algorithms();
        let combiner = match &self.combine {
            None => None,
            Some(spec) => {
                let inputs = first_layer_inputs(&base, &t.x, n_algorithms)?;
                Some(Combiner::fit(
                    spec,
                    &inputs,
                    &labels,
                    derive_seed(t.seed, base.len() as u64),
                )?)
            }
        };
        Ok(Box::new(FittedClassify {
            base,
            combiner,
            n_algorithms,
        }))
    }
}

fn first_layer_inputs(
    base: &[TrainedClassifier],
    x: &[Row],
    n_algorithms: usize,
) -> Result<Vec<Row>> {
    let per_model = base
        .iter()
        .map(|m| m.predict_labels(x))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..x.len())
        .map(|i| {
            let labels: Vec<usize> = per_model.iter().map(|p| p[i]).collect();
            one_hot(&labels, n_algorithms)
        })
        .collect())
}

#[derive(Debug)]
struct FittedClassify {
    base: Vec<TrainedClassifier>,
    combiner: Option<Combiner>,
    n_algorithms: usize,
}

impl FittedSelector for FittedClassify {
    fn predict(&self, x: &[Row]) -> Result<Vec<Prediction>> {
        if let Some(c) = &self.combiner {
            return c.predict(&first_layer_inputs(&self.base, x, self.n_algorithms)?);
        }
        if let [single] = self.base.as_slice() {
            return Ok(single
                .predict_labels(x)?
                .into_iter()
                .map(Prediction::single)
                .collect());
        }
        let per_model = self
            .base
            .iter()
            .map(|m| m.predict_labels(x))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..x.len())
            .map(|i| {
                let mut votes = vec![0usize; self.n_algorithms];
                for p in &per_model {
                    votes[p[i]] += 1;
                }
                Prediction::from_votes(&votes)
            })
            .collect())
    }
}

/// Builds a [`Classify`] selector; several learners form an ensemble.
pub fn classify(
    learners: Vec<ClassifierSpec>,
    p: &Partitioning,
    pre: Option<Arc<dyn Preprocessor>>,
    combine: Option<ClassifierSpec>,
) -> Result<SelectionModel> {
    Classify {
        learners,
        combine,
        pre,
    }
    .build(p)
}
