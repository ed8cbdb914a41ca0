//! Per-instance evaluation of selectors and the virtual-best / single-best
//! baselines.
//!
//! A run counts as successful when the success table says so or, without a
//! success table, when its performance is below the timeout. Unsuccessful
//! runs score `par_factor * timeout`. Model selectors additionally pay the
//! feature cost of every instance; when that pushes a successful run to or
//! past the timeout, the run is scored as a timeout. Baselines never pay
//! feature costs.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::partition::Partitioning;
use crate::selectors::{Prediction, SelectionModel};

pub const DEFAULT_PAR_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// `None` uses the largest performance value in the dataset.
    pub timeout: Option<f64>,
    pub par_factor: f64,
    /// Charge feature costs to model selectors (when the dataset has costs).
    pub include_costs: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            timeout: None,
            par_factor: DEFAULT_PAR_FACTOR,
            include_costs: true,
        }
    }
}

impl EvalConfig {
    pub fn with_timeout(timeout: f64) -> Self {
        EvalConfig {
            timeout: Some(timeout),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.timeout {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("timeout must be positive, got {t}")));
            }
        }
        if !(self.par_factor >= 1.0 && self.par_factor.is_finite()) {
            return Err(Error::Config(format!(
                "PAR factor must be at least 1, got {}",
                self.par_factor
            )));
        }
        Ok(())
    }

    pub fn timeout_for(&self, d: &Dataset) -> Result<f64> {
        self.validate()?;
        match self.timeout {
            Some(t) => Ok(t),
            None => {
                let t = d.max_performance();
                if t > 0.0 {
                    Ok(t)
                } else {
                    Err(Error::Config(
                        "no timeout given and no positive performance value to default to".into(),
                    ))
                }
            }
        }
    }
}

/// How a single best algorithm (or a cluster's best algorithm) is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BestBy {
    /// Best summed raw performance.
    #[default]
    Performance,
    /// Lowest summed PAR score.
    Par,
    /// Most successful runs.
    Successes,
    /// Most instances on which the algorithm is among the best.
    Count,
}

impl std::str::FromStr for BestBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "performance" => Ok(BestBy::Performance),
            "par" => Ok(BestBy::Par),
            "successes" => Ok(BestBy::Successes),
            "count" => Ok(BestBy::Count),
            other => Err(Error::Config(format!(
                "unknown best-by criterion '{other}' (expected performance, par, successes or count)"
            ))),
        }
    }
}

impl BestBy {
    pub fn as_str(&self) -> &'static str {
        match self {
            BestBy::Performance => "performance",
            BestBy::Par => "par",
            BestBy::Successes => "successes",
            BestBy::Count => "count",
        }
    }

    /// Whether smaller aggregates are better.
    pub fn ascending(&self, minimize: bool) -> bool {
        match self {
            BestBy::Performance => minimize,
            BestBy::Par => true,
            BestBy::Successes | BestBy::Count => false,
        }
    }

    /// Per-algorithm aggregate over `rows`.
    pub fn aggregate(&self, d: &Dataset, rows: &[usize], timeout: f64, par_factor: f64) -> Vec<f64> {
        (0..d.n_algorithms())
            .map(|a| {
                rows.iter()
                    .map(|&i| match self {
                        BestBy::Performance => d.performances()[i][a],
                        BestBy::Par => baseline_par(d, i, a, timeout, par_factor),
                        BestBy::Successes => f64::from(u8::from(run_successful(d, i, a, timeout))),
                        BestBy::Count => f64::from(u8::from(d.best_set(i).contains(&a))),
                    })
                    .sum()
            })
            .collect()
    }
}

/// Success of algorithm `a` on instance `i`, ignoring feature costs.
pub fn run_successful(d: &Dataset, i: usize, a: usize, timeout: f64) -> bool {
    match d.successes() {
        Some(s) => s[i][a],
        None => d.performances()[i][a] < timeout,
    }
}

fn baseline_par(d: &Dataset, i: usize, a: usize, timeout: f64, par_factor: f64) -> f64 {
    if run_successful(d, i, a, timeout) {
        d.performances()[i][a]
    } else {
        par_factor * timeout
    }
}

/// Something that chooses an algorithm per instance.
#[derive(Debug, Clone, Copy)]
pub enum Selector<'a> {
    /// Predictions of a trained model on the test partitions it was built on.
    Model(&'a SelectionModel),
    /// Virtual best solver.
    Vbs,
    /// Always the same algorithm.
    Fixed { algorithm: usize },
}

impl Selector<'_> {
    fn charges_costs(&self) -> bool {
        matches!(self, Selector::Model(_))
    }
}

/// Virtual best solver: always the canonical best algorithm.
pub fn vbs(_d: &Dataset) -> Selector<'static> {
    Selector::Vbs
}

/// Single best algorithm of `d` under `mode`; ties go to column order.
pub fn single_best(d: &Dataset, mode: BestBy, cfg: &EvalConfig) -> Result<Selector<'static>> {
    let timeout = cfg.timeout_for(d)?;
    let rows: Vec<usize> = (0..d.len()).collect();
    let totals = mode.aggregate(d, &rows, timeout, cfg.par_factor);
    let ranked = Prediction::ranked_by_score(
        totals.into_iter().enumerate().collect(),
        mode.ascending(d.minimize()),
    );
    Ok(Selector::Fixed {
        algorithm: ranked.top(),
    })
}

/// Instances an evaluation runs over.
#[derive(Debug, Clone, Copy)]
pub enum EvalData<'a> {
    /// Every instance of the dataset, in order.
    Dataset(&'a Dataset),
    /// Test instances of each partition, concatenated in partition order.
    Partitioning(&'a Partitioning),
}

impl<'a> From<&'a Dataset> for EvalData<'a> {
    fn from(d: &'a Dataset) -> Self {
        EvalData::Dataset(d)
    }
}

impl<'a> From<&'a Partitioning> for EvalData<'a> {
    fn from(p: &'a Partitioning) -> Self {
        EvalData::Partitioning(p)
    }
}

impl<'a> EvalData<'a> {
    pub fn dataset(&self) -> &'a Dataset {
        match self {
            EvalData::Dataset(d) => d,
            EvalData::Partitioning(p) => p.dataset().as_ref(),
        }
    }

    /// Instance indices in evaluation order.
    pub fn instances(&self) -> Vec<usize> {
        match self {
            EvalData::Dataset(d) => (0..d.len()).collect(),
            EvalData::Partitioning(p) => p.test_instances().map(|(_, i)| i).collect(),
        }
    }
}

/// Ranked prediction of `s` for every instance of `data`, in evaluation order.
pub fn predictions<'a>(
    data: impl Into<EvalData<'a>>,
    s: &Selector<'_>,
) -> Result<Vec<(usize, Prediction)>> {
    let data = data.into();
    let d = data.dataset();
    match s {
        Selector::Model(m) => {
            let p = match data {
                EvalData::Partitioning(p) => p,
                EvalData::Dataset(_) => {
                    return Err(Error::Evaluation(
                        "model predictions are tied to a partitioning; evaluate on it".into(),
                    ))
                }
            };
            if m.test_sets() != p.test_sets() {
                return Err(Error::Evaluation(
                    "model was built on a different partitioning".into(),
                ));
            }
            Ok(p.test_instances()
                .zip(m.predictions().iter().flatten())
                .map(|((_, i), pred)| (i, pred.clone()))
                .collect())
        }
        Selector::Vbs => Ok(data
            .instances()
            .into_iter()
            .map(|i| {
                let scores = d.performances()[i].iter().copied().enumerate().collect();
                (i, Prediction::ranked_by_score(scores, d.minimize()))
            })
            .collect()),
        Selector::Fixed { algorithm } => {
            if *algorithm >= d.n_algorithms() {
                return Err(Error::Evaluation(format!("no algorithm with index {algorithm}")));
            }
            Ok(data
                .instances()
                .into_iter()
                .map(|i| (i, Prediction::single(*algorithm)))
                .collect())
        }
    }
}

/// `(instance, chosen algorithm)` in evaluation order.
pub fn choices<'a>(data: impl Into<EvalData<'a>>, s: &Selector<'_>) -> Result<Vec<(usize, usize)>> {
    let data = data.into();
    let d = data.dataset();
    match s {
        Selector::Vbs => Ok(data.instances().into_iter().map(|i| (i, d.best(i))).collect()),
        _ => Ok(predictions(data, s)?
            .into_iter()
            .map(|(i, p)| (i, p.top()))
            .collect()),
    }
}

struct Outcome {
    success: bool,
    cost: f64,
    perf: f64,
}

fn outcomes<'a>(data: EvalData<'a>, s: &Selector<'_>, cfg: &EvalConfig) -> Result<(f64, Vec<Outcome>)> {
    let d = data.dataset();
    let timeout = cfg.timeout_for(d)?;
    let charge = s.charges_costs() && cfg.include_costs && d.costs().is_some();
    let out = choices(data, s)?
        .into_iter()
        .map(|(i, a)| {
            let perf = d.performances()[i][a];
            let mut success = run_successful(d, i, a, timeout);
            let cost = if charge { d.feature_cost(i) } else { 0.0 };
            if charge && perf + cost >= timeout {
                success = false;
            }
            Outcome {
                success,
                cost,
                perf,
            }
        })
        .collect();
    Ok((timeout, out))
}

/// Penalised runtime of the chosen algorithm on each instance.
pub fn par_scores<'a>(
    data: impl Into<EvalData<'a>>,
    s: &Selector<'_>,
    cfg: &EvalConfig,
) -> Result<Vec<f64>> {
    let (timeout, out) = outcomes(data.into(), s, cfg)?;
    Ok(out
        .into_iter()
        .map(|o| {
            if o.success {
                o.perf + o.cost
            } else {
                cfg.par_factor * timeout
            }
        })
        .collect())
}

/// Whether the chosen run (including feature costs) solved each instance.
pub fn successes<'a>(
    data: impl Into<EvalData<'a>>,
    s: &Selector<'_>,
    cfg: &EvalConfig,
) -> Result<Vec<bool>> {
    let (_, out) = outcomes(data.into(), s, cfg)?;
    Ok(out.into_iter().map(|o| o.success).collect())
}

/// Raw performance lost against the best algorithm on each instance.
pub fn misclassification_penalties<'a>(
    data: impl Into<EvalData<'a>>,
    s: &Selector<'_>,
) -> Result<Vec<f64>> {
    let data = data.into();
    let d = data.dataset();
    Ok(choices(data, s)?
        .into_iter()
        .map(|(i, a)| {
            let row = &d.performances()[i];
            let best = row[d.best(i)];
            if d.minimize() {
                row[a] - best
            } else {
                best - row[a]
            }
        })
        .collect())
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}
