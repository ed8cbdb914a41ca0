use log::warn;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{train_regressor, RegressorSpec, Row};
use crate::partition::{derive_seed, DEFAULT_SEED};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImputeOptions {
    /// Stop once no imputed value moves by this much or more.
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for ImputeOptions {
    fn default() -> Self {
        ImputeOptions {
            epsilon: 1e-6,
            max_iter: 100,
            seed: DEFAULT_SEED,
        }
    }
}

/// A censored cell whose imputed value ended up below the recorded cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct BelowCutoff {
    pub instance: usize,
    pub algorithm: usize,
    pub recorded: f64,
    pub imputed: f64,
}

#[derive(Debug, Clone)]
pub struct Imputation {
    pub dataset: Dataset,
    /// Model fits per algorithm, including the initial fit.
    pub iterations: Vec<usize>,
    pub converged: bool,
    pub below_cutoff: Vec<BelowCutoff>,
}

/// Replaces censored performance values (success = false) with regression
/// estimates.
///
/// For each algorithm the regressor is first fit on the uncensored rows; the
/// censored rows are then repeatedly re-estimated by a model fit on all rows
/// until the largest change is below `epsilon`. Uncensored cells are copied
/// unchanged and the returned dataset marks every run as successful.
pub fn impute_censored(d: &Dataset, regressor: &RegressorSpec, opts: &ImputeOptions) -> Result<Imputation> {
    if !(opts.epsilon > 0.0) || opts.max_iter == 0 {
        return Err(Error::Config(
            "imputation needs epsilon > 0 and max_iter >= 1".into(),
        ));
    }
    let successes = d.successes().ok_or_else(|| {
        Error::Config("imputation needs a success table to know which runs are censored".into())
    })?;
    let x = d.features();
    let mut perf = d.performances().to_vec();
    let mut iterations = Vec::with_capacity(d.n_algorithms());
    let mut converged = true;
    let mut below_cutoff = Vec::new();

    for a in 0..d.n_algorithms() {
        let (observed, censored): (Vec<usize>, Vec<usize>) =
            (0..d.len()).partition(|&i| successes[i][a]);
        if observed.is_empty() {
            return Err(Error::Learner(format!(
                "algorithm '{}' has no uncensored runs to learn from",
                d.algorithm_names()[a]
            )));
        }
        if censored.is_empty() {
            iterations.push(0);
            continue;
        }
        let seed = derive_seed(opts.seed, a as u64);
        let censored_x: Vec<Row> = censored.iter().map(|&i| x[i].clone()).collect();

        let train_x: Vec<Row> = observed.iter().map(|&i| x[i].clone()).collect();
        let train_y: Vec<f64> = observed.iter().map(|&i| perf[i][a]).collect();
        let mut current = train_regressor(regressor, &train_x, &train_y, seed)?.predict_values(&censored_x)?;
        let mut fits = 1;
        let mut done = false;
        while fits < opts.max_iter {
            for (&i, &v) in censored.iter().zip(&current) {
                perf[i][a] = v;
            }
            let y: Vec<f64> = perf.iter().map(|r| r[a]).collect();
            let next = train_regressor(regressor, x, &y, seed)?.predict_values(&censored_x)?;
            fits += 1;
            let change = current
                .iter()
                .zip(&next)
                .map(|(c, n)| (c - n).abs())
                .fold(0.0, f64::max);
            current = next;
            if change < opts.epsilon {
                done = true;
                break;
            }
        }
        if !done {
            converged = false;
            warn!(
                "imputation for '{}' did not converge after {} fits",
                d.algorithm_names()[a],
                fits
            );
        }
        for (&i, &v) in censored.iter().zip(&current) {
            let recorded = d.performances()[i][a];
            perf[i][a] = v;
            if v < recorded {
                below_cutoff.push(BelowCutoff {
                    instance: i,
                    algorithm: a,
                    recorded,
                    imputed: v,
                });
            }
        }
        iterations.push(fits);
    }
    let all_true = vec![vec![true; d.n_algorithms()]; d.len()];
    Ok(Imputation {
        dataset: d.with_performances(perf, Some(all_true))?,
        iterations,
        converged,
        below_cutoff,
    })
}
