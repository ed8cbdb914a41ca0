use std::fmt;
use std::sync::Arc;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Scores features for a custom filter; features scoring above the
/// threshold of [`FilterMethod::Scorer`] are kept.
pub trait FeatureScorer: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    /// One score per feature of `d`, in feature order.
    fn score(&self, d: &Dataset) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone)]
pub enum FilterMethod {
    /// Drop features whose population variance is at most `threshold`.
    Variance { threshold: f64 },
    /// Walk the features in order and drop any whose absolute Pearson
    /// correlation with an already kept feature reaches `threshold`.
    Correlation { threshold: f64 },
    Scorer {
        scorer: Arc<dyn FeatureScorer>,
        threshold: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
    /// Score of every original feature, in original order. For the
    /// correlation filter this is the largest |r| against kept predecessors.
    pub scores: Vec<(String, f64)>,
}

fn column(d: &Dataset, j: usize) -> Vec<f64> {
    d.features().iter().map(|r| r[j]).collect()
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Pearson correlation; 0 when either column is constant.
pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Restricts `d` to the features retained by `method`.
///
/// Instances, performances, successes and costs are unchanged.
pub fn feature_filter(method: &FilterMethod, d: &Dataset) -> Result<(Dataset, FilterReport)> {
    let names = d.feature_names();
    let columns: Vec<Vec<f64>> = (0..names.len()).map(|j| column(d, j)).collect();
    let (keep, scores): (Vec<bool>, Vec<f64>) = match method {
        FilterMethod::Variance { threshold } => columns
            .iter()
            .map(|c| {
                let v = variance(c);
                (v > *threshold, v)
            })
            .unzip(),
        FilterMethod::Correlation { threshold } => {
            let mut kept: Vec<usize> = Vec::new();
            let mut out = Vec::with_capacity(columns.len());
            for (j, c) in columns.iter().enumerate() {
                let worst = kept
                    .iter()
                    .map(|&k| pearson(&columns[k], c).abs())
                    .fold(0.0, f64::max);
                let keep = worst < *threshold;
                if keep {
                    kept.push(j);
                }
                out.push((keep, worst));
            }
            out.into_iter().unzip()
        }
        FilterMethod::Scorer { scorer, threshold } => {
            let scores = scorer.score(d)?;
            if scores.len() != names.len() {
                return Err(Error::Config(format!(
                    "feature scorer '{}' returned {} scores for {} features",
                    scorer.name(),
                    scores.len(),
                    names.len()
                )));
            }
            scores.into_iter().map(|s| (s > *threshold, s)).unzip()
        }
    };
    let kept: Vec<String> = names
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(n, _)| n.clone())
        .collect();
    if kept.is_empty() {
        return Err(Error::Config(
            "feature filter removed every feature; relax the threshold".into(),
        ));
    }
    let dropped = names
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| !k)
        .map(|(n, _)| n.clone())
        .collect();
    let filtered = d.select_features(&kept)?;
    Ok((
        filtered,
        FilterReport {
            kept,
            dropped,
            scores: names.iter().cloned().zip(scores).collect(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DatasetParts;

    fn with_features(names: &[&str], cols: &[&[f64]]) -> Dataset {
        let n = cols[0].len();
        Dataset::from_parts(DatasetParts {
            instance_ids: (0..n).map(|i| format!("i{i}")).collect(),
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            algorithm_names: vec!["A".into(), "B".into()],
            features: (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect(),
            performances: (0..n).map(|i| vec![i as f64, 2.0]).collect(),
            minimize: true,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn zero_variance_feature_is_dropped() {
        let d = with_features(&["flat", "x"], &[&[5.0, 5.0, 5.0, 5.0], &[1.0, 2.0, 0.0, 3.0]]);
        let (f, r) = feature_filter(&FilterMethod::Variance { threshold: 0.0 }, &d).unwrap();
        assert_eq!(r.dropped, vec!["flat"]);
        assert_eq!(f.feature_names(), ["x"]);
        assert_eq!(f.performances(), d.performances());
        assert_eq!(f.instance_ids(), d.instance_ids());
    }

    #[test]
    fn varying_features_survive_zero_threshold() {
        let d = with_features(&["a", "b"], &[&[0.3, 0.9, 0.1], &[0.5, 0.2, 0.8]]);
        let (_, r) = feature_filter(&FilterMethod::Variance { threshold: 0.0 }, &d).unwrap();
        assert_eq!(r.kept, vec!["a", "b"]);
    }

    #[test]
    fn duplicated_column_is_dropped() {
        let d = with_features(
            &["a", "copy", "c"],
            &[&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0], &[3.0, -1.0, 3.0]],
        );
        let (_, r) = feature_filter(&FilterMethod::Correlation { threshold: 0.99 }, &d).unwrap();
        assert_eq!(r.dropped, vec!["copy"]);
        assert!((r.scores[1].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dropping_everything_is_an_error() {
        let d = with_features(&["flat"], &[&[1.0, 1.0]]);
        assert!(feature_filter(&FilterMethod::Variance { threshold: 0.0 }, &d).is_err());
    }

    #[derive(Debug)]
    struct ByIndex;

    impl FeatureScorer for ByIndex {
        fn name(&self) -> String {
            "by-index".into()
        }

        fn score(&self, d: &Dataset) -> Result<Vec<f64>> {
            Ok((0..d.feature_names().len()).map(|j| j as f64).collect())
        }
    }

    #[test]
    fn custom_scorer_hook() {
        let d = with_features(&["a", "b", "c"], &[&[1.0, 2.0], &[3.0, 1.0], &[0.0, 9.0]]);
        let m = FilterMethod::Scorer {
            scorer: Arc::new(ByIndex),
            threshold: 0.5,
        };
        let (f, _) = feature_filter(&m, &d).unwrap();
        assert_eq!(f.feature_names(), ["b", "c"]);
    }
}
