use std::fmt;
use std::sync::Arc;

use super::{pre_suffix, run_protocol, Combiner, FittedSelector, Prediction, SelectionModel, Training};
use crate::error::{Error, Result};
use crate::learners::{train_regressor, ClassifierSpec, RegressorSpec, Row, TrainedRegressor};
use crate::partition::{derive_seed, Partitioning};
use crate::preprocess::Preprocessor;

type ExpandFn = dyn Fn(&[Row]) -> Vec<Row> + Send + Sync;

/// Computes extra stacking inputs from a batch of performance predictions.
///
/// The function receives one row of predicted performances per instance and
/// returns the columns to append, one row per instance. The number of
/// appended columns must not depend on the batch.
#[derive(Clone)]
pub struct Expansion {
    name: String,
    f: Arc<ExpandFn>,
}

impl Expansion {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&[Row]) -> Vec<Row> + Send + Sync + 'static,
    ) -> Self {
        Expansion {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// Absolute differences `|p[a] - p[b]|` for every pair `a < b`.
    pub fn pairwise_abs_diff() -> Self {
        Expansion::new("pairwise-abs-diff", |rows| {
            rows.iter()
                .map(|r| {
                    let mut out = Vec::with_capacity(r.len() * r.len().saturating_sub(1) / 2);
                    for a in 0..r.len() {
                        for b in a + 1..r.len() {
                            out.push((r[a] - r[b]).abs());
                        }
                    }
                    out
                })
                .collect()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Predictions with the expansion columns appended.
    pub fn augment(&self, predictions: &[Row], expected_extra: Option<usize>) -> Result<Vec<Row>> {
        let extra = (self.f)(predictions);
        if extra.len() != predictions.len() {
            return Err(Error::Config(format!(
                "expansion '{}' returned {} rows for {} instances",
                self.name,
                extra.len(),
                predictions.len()
            )));
        }
        let width = expected_extra.or_else(|| extra.first().map(Vec::len)).unwrap_or(0);
        if extra.iter().any(|r| r.len() != width) {
            return Err(Error::Config(format!(
                "expansion '{}' must return a constant number of columns ({width})",
                self.name
            )));
        }
        Ok(predictions
            .iter()
            .zip(extra)
            .map(|(p, e)| p.iter().copied().chain(e).collect())
            .collect())
    }
}

impl fmt::Debug for Expansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Expansion").field(&self.name).finish()
    }
}

/// One regression model per algorithm predicts its performance; algorithms
/// are ranked by predicted performance (ascending when minimising).
///
/// With `combine`, a classifier learns the best algorithm from the vector of
/// predicted performances (optionally augmented by `expand`).
#[derive(Debug, Clone)]
pub struct Regression {
    pub regressor: RegressorSpec,
    pub combine: Option<ClassifierSpec>,
    pub expand: Option<Expansion>,
    pub pre: Option<Arc<dyn Preprocessor>>,
}

impl Regression {
    pub fn new(regressor: RegressorSpec) -> Self {
        Regression {
            regressor,
            combine: None,
            expand: None,
            pre: None,
        }
    }

    pub fn with_combine(mut self, combine: ClassifierSpec) -> Self {
        self.combine = Some(combine);
        self
    }

    pub fn with_expand(mut self, expand: Expansion) -> Self {
        self.expand = Some(expand);
        self
    }

    pub fn with_pre(mut self, pre: Arc<dyn Preprocessor>) -> Self {
        self.pre = Some(pre);
        self
    }

    pub fn description(&self) -> String {
        let mut s = format!("regression[{}", self.regressor.name());
        if let Some(c) = &self.combine {
            s.push_str(&format!(", combine={}", c.name()));
        }
        if let Some(e) = &self.expand {
            s.push_str(&format!(", expand={}", e.name()));
        }
        s.push_str(&pre_suffix(self.pre.as_ref()));
        s.push(']');
        s
    }

    pub fn build(&self, p: &Partitioning) -> Result<SelectionModel> {
        if self.expand.is_some() && self.combine.is_none() {
            return Err(Error::Config(
                "regression: expand is only meaningful together with combine".into(),
            ));
        }
        run_protocol(p, self.description(), self.pre.as_ref(), &|t| self.fit(t))
    }

    fn fit(&self, t: &Training<'_>) -> Result<Box<dyn FittedSelector>> {
        let m = t.d.n_algorithms();
        let models = (0..m)
            .map(|a| {
                let y: Vec<f64> = (0..t.rows.len()).map(|pos| t.performance(pos, a)).collect();
                train_regressor(&self.regressor, &t.x, &y, derive_seed(t.seed, a as u64))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut fitted = FittedRegression {
            models,
            minimize: t.d.minimize(),
            stack: None,
        };
        if let Some(spec) = &self.combine {
            let preds = fitted.predicted_performances(&t.x)?;
            let (inputs, extra) = match &self.expand {
                Some(e) => {
                    let inputs = e.augment(&preds, None)?;
                    let extra = inputs.first().map_or(0, |r| r.len() - m);
                    (inputs, Some(extra))
                }
                None => (preds, None),
            };
            let combiner = Combiner::fit(spec, &inputs, &t.labels(), derive_seed(t.seed, m as u64))?;
            fitted.stack = Some(Stack {
                combiner,
                expand: self.expand.clone().map(|e| (e, extra.unwrap_or(0))),
            });
        }
        Ok(Box::new(fitted))
    }
}

#[derive(Debug)]
struct Stack {
    combiner: Combiner,
    expand: Option<(Expansion, usize)>,
}

#[derive(Debug)]
struct FittedRegression {
    models: Vec<TrainedRegressor>,
    minimize: bool,
    stack: Option<Stack>,
}

impl FittedRegression {
    /// Row-major matrix of predicted performances, instance × algorithm.
    fn predicted_performances(&self, x: &[Row]) -> Result<Vec<Row>> {
        let per_alg = self
            .models
            .iter()
            .map(|m| m.predict_values(x))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..x.len())
            .map(|i| per_alg.iter().map(|p| p[i]).collect())
            .collect())
    }
}

impl FittedSelector for FittedRegression {
    fn predict(&self, x: &[Row]) -> Result<Vec<Prediction>> {
        let preds = self.predicted_performances(x)?;
        match &self.stack {
            None => Ok(preds
                .into_iter()
                .map(|row| {
                    Prediction::ranked_by_score(row.into_iter().enumerate().collect(), self.minimize)
                })
                .collect()),
            Some(stack) => {
                let inputs = match &stack.expand {
                    Some((e, extra)) => e.augment(&preds, Some(*extra))?,
                    None => preds,
                };
                stack.combiner.predict(&inputs)
            }
        }
    }
}

/// Builds a [`Regression`] selector.
pub fn regression(
    regressor: RegressorSpec,
    p: &Partitioning,
    combine: Option<ClassifierSpec>,
    expand: Option<Expansion>,
    pre: Option<Arc<dyn Preprocessor>>,
) -> Result<SelectionModel> {
    Regression {
        regressor,
        combine,
        expand,
        pre,
    }
    .build(p)
}
