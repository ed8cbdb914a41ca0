use super::{modal_label, Classifier, ClassifierModel, Row};
use crate::error::Result;

/// Single-split decision tree minimising training misclassifications.
///
/// Candidate thresholds are midpoints between consecutive distinct values of
/// each feature. Ties between splits go to the lower feature index, then the
/// lower threshold. When no split beats the majority label, the stump is a
/// constant predictor.
#[derive(Debug, Clone, Copy, Default)]
pub struct DecisionStump;

/// Fitted stump: `row[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq)]
pub struct Stump {
    pub width: usize,
    pub split: Option<(usize, f64)>,
    pub left: usize,
    pub right: usize,
}

impl Classifier for DecisionStump {
    fn name(&self) -> String {
        "stump".into()
    }

    fn fit(&self, x: &[Row], y: &[usize], _seed: u64) -> Result<Box<dyn ClassifierModel>> {
        Ok(Box::new(fit_stump(x, y)))
    }
}

fn fit_stump(x: &[Row], y: &[usize]) -> Stump {
    let n_labels = y.iter().max().map_or(0, |m| m + 1);
    let majority = modal_label(y.iter().copied()).expect("non-empty training set");
    let total: Vec<usize> = (0..n_labels)
        .map(|l| y.iter().filter(|&&v| v == l).count())
        .collect();
    let mut best = Stump {
        width: x[0].len(),
        split: None,
        left: majority,
        right: majority,
    };
    let mut best_errors = y.len() - total[majority];

    for f in 0..best.width {
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let mut left = vec![0usize; n_labels];
        for (pos, &i) in order.iter().enumerate().take(order.len() - 1) {
            left[y[i]] += 1;
            let (here, next) = (x[i][f], x[order[pos + 1]][f]);
            if here == next {
                continue;
            }
            let l_label = argmax(&left);
            let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
            let r_label = argmax(&right);
            let correct = left[l_label] + right[r_label];
            let errors = y.len() - correct;
            if errors < best_errors {
                best_errors = errors;
                best.split = Some((f, here + (next - here) / 2.0));
                best.left = l_label;
                best.right = r_label;
            }
        }
    }
    best
}

fn argmax(counts: &[usize]) -> usize {
    let max = counts.iter().max().copied().unwrap_or(0);
    counts.iter().position(|&c| c == max).unwrap_or(0)
}

impl ClassifierModel for Stump {
    fn n_features(&self) -> usize {
        self.width
    }

    fn predict_row(&self, row: &[f64]) -> usize {
        match self.split {
            Some((f, t)) if row[f] > t => self.right,
            Some(_) => self.left,
            None => self.left,
        }
    }
}
