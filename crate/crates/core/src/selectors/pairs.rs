use std::sync::Arc;

use super::{pre_suffix, run_protocol, Combiner, FittedSelector, Prediction, SelectionModel, Training};
use crate::error::{Error, Result};
use crate::learners::{train_classifier, ClassifierSpec, Row, TrainedClassifier};
use crate::partition::{derive_seed, Partitioning};
use crate::preprocess::Preprocessor;

/// One binary classifier per unordered pair of algorithms predicts the
/// better of the two; each prediction is a vote. Algorithms are ranked by
/// votes won, every algorithm appears, and the votes of one instance sum to
/// `m(m-1)/2`.
///
/// Pairwise training labels use raw performance; equal performance labels
/// the pair with the earlier algorithm. With `combinator`, a classifier
/// over the vote vector picks the final algorithm.
#[derive(Debug, Clone)]
pub struct ClassifyPairs {
    pub classifier: ClassifierSpec,
    pub combinator: Option<ClassifierSpec>,
    pub pre: Option<Arc<dyn Preprocessor>>,
}

impl ClassifyPairs {
    pub fn new(classifier: ClassifierSpec) -> Self {
        ClassifyPairs {
            classifier,
            combinator: None,
            pre: None,
        }
    }

    pub fn with_combinator(mut self, combinator: ClassifierSpec) -> Self {
        self.combinator = Some(combinator);
        self
    }

    pub fn with_pre(mut self, pre: Arc<dyn Preprocessor>) -> Self {
        self.pre = Some(pre);
        self
    }

    pub fn description(&self) -> String {
        let combinator = self
            .combinator
            .as_ref()
            .map(|c| format!(", combinator={}", c.name()))
            .unwrap_or_default();
        format!(
            "classify_pairs[{}{combinator}{}]",
            self.classifier.name(),
            pre_suffix(self.pre.as_ref())
        )
    }

    pub fn build(&self, p: &Partitioning) -> Result<SelectionModel> {
        let m = p.dataset().n_algorithms();
        if m < 2 {
            return Err(Error::Config(format!(
                "classify_pairs needs at least 2 algorithms, dataset has {m}"
            )));
        }
        run_protocol(p, self.description(), self.pre.as_ref(), &|t| self.fit(t))
    }

    fn fit(&self, t: &Training<'_>) -> Result<Box<dyn FittedSelector>> {
        Ok(Box::new(self.fit_pairs(t)?))
    }

    fn fit_pairs(&self, t: &Training<'_>) -> Result<FittedPairs> {
        let m = t.d.n_algorithms();
        let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
        for a in 0..m {
            for b in a + 1..m {
                let y: Vec<usize> = (0..t.rows.len())
                    .map(|pos| {
                        if t.d.better(t.performance(pos, b), t.performance(pos, a)) {
                            b
                        } else {
                            a
                        }
                    })
                    .collect();
                let seed = derive_seed(t.seed, pairs.len() as u64);
                pairs.push(train_classifier(&self.classifier, &t.x, &y, seed)?);
            }
        }
        let mut fitted = FittedPairs {
            n_algorithms: m,
            pairs,
            combinator: None,
        };
        if let Some(spec) = &self.combinator {
            let votes = fitted.vote_matrix(&t.x)?;
            let seed = derive_seed(t.seed, fitted.pairs.len() as u64);
            fitted.combinator = Some(Combiner::fit(spec, &votes, &t.labels(), seed)?);
        }
        Ok(fitted)
    }
}

#[derive(Debug)]
struct FittedPairs {
    n_algorithms: usize,
    pairs: Vec<TrainedClassifier>,
    combinator: Option<Combiner>,
}

impl FittedPairs {
    /// Pairwise votes won by each algorithm, per row.
    fn votes(&self, x: &[Row]) -> Result<Vec<Vec<usize>>> {
        let mut votes = vec![vec![0usize; self.n_algorithms]; x.len()];
        for model in &self.pairs {
            for (i, winner) in model.predict_labels(x)?.into_iter().enumerate() {
                votes[i][winner] += 1;
            }
        }
        Ok(votes)
    }

    fn vote_matrix(&self, x: &[Row]) -> Result<Vec<Row>> {
        Ok(self
            .votes(x)?
            .into_iter()
            .map(|v| v.into_iter().map(|c| c as f64).collect())
            .collect())
    }
}

impl FittedSelector for FittedPairs {
    fn predict(&self, x: &[Row]) -> Result<Vec<Prediction>> {
        if let Some(c) = &self.combinator {
            return c.predict(&self.vote_matrix(x)?);
        }
        Ok(self
            .votes(x)?
            .into_iter()
            .map(|v| {
                Prediction::ranked_by_score(
                    v.into_iter().enumerate().map(|(a, c)| (a, c as f64)).collect(),
                    false,
                )
            })
            .collect())
    }
}

/// Builds a [`ClassifyPairs`] selector.
pub fn classify_pairs(
    classifier: ClassifierSpec,
    p: &Partitioning,
    combinator: Option<ClassifierSpec>,
    pre: Option<Arc<dyn Preprocessor>>,
) -> Result<SelectionModel> {
    ClassifyPairs {
        classifier,
        combinator,
        pre,
    }
    .build(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, DatasetParts};

    fn training_dataset(m: usize) -> Dataset {
        Dataset::from_parts(DatasetParts {
            instance_ids: (0..6).map(|i| format!("i{i}")).collect(),
            feature_names: vec!["x".into()],
            algorithm_names: (0..m).map(|a| format!("a{a}")).collect(),
            features: (0..6).map(|i| vec![i as f64]).collect(),
            performances: (0..6)
                .map(|i| (0..m).map(|a| ((i + a) % m) as f64 + 1.0).collect())
                .collect(),
            minimize: true,
            ..Default::default()
        })
        .unwrap()
    }

    fn fitted(m: usize) -> FittedPairs {
        let d = training_dataset(m);
        let rows: Vec<usize> = (0..d.len()).collect();
        let t = Training {
            d: &d,
            rows: &rows,
            x: d.features().to_vec(),
            seed: 0,
        };
        ClassifyPairs::new(ClassifierSpec::Stump).fit_pairs(&t).unwrap()
    }

    #[test]
    fn one_model_per_unordered_pair() {
        assert_eq!(fitted(2).pairs.len(), 1);
        let four = fitted(4);
        assert_eq!(four.pairs.len(), 6);
        for v in four.votes(&[vec![0.0], vec![2.5], vec![9.0]]).unwrap() {
            assert_eq!(v.iter().sum::<usize>(), 6);
        }
    }

    #[test]
    fn tournament_tally() {
        // pair outcomes A>B, A>C, B>C
        let votes = [2usize, 1, 0];
        let p = Prediction::ranked_by_score(
            votes.iter().enumerate().map(|(a, &v)| (a, v as f64)).collect(),
            false,
        );
        let scores: Vec<(usize, f64)> = p.ranking().iter().map(|r| (r.algorithm, r.score)).collect();
        assert_eq!(scores, vec![(0, 2.0), (1, 1.0), (2, 0.0)]);
    }
}
