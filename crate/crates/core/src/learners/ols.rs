use nalgebra::{DMatrix, DVector};

use super::{Regressor, RegressorModel, Row};
use crate::error::{Error, Result};

/// Ordinary least squares with an intercept.
///
/// Features and targets are centred first; the slope vector is the
/// minimum-norm least-squares solution of the centred system, so collinear
/// or constant feature columns receive zero weight instead of failing.
#[derive(Debug, Clone, Copy, Default)]
pub struct LeastSquares;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn fit(x: &[Row], y: &[f64]) -> Result<LinearModel> {
        let n = x.len();
        let p = x.first().map_or(0, Vec::len);
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let x_mean: Vec<f64> = (0..p)
            .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64)
            .collect();
        if p == 0 {
            return Ok(LinearModel {
                intercept: y_mean,
                coefficients: Vec::new(),
            });
        }
        let a = DMatrix::from_fn(n, p, |i, j| x[i][j] - x_mean[j]);
        let b = DVector::from_fn(n, |i, _| y[i] - y_mean);
        let svd = a.clone().svd(true, true);
        let largest = svd.singular_values.max();
        let eps = largest * n.max(p) as f64 * f64::EPSILON;
        let beta = if largest == 0.0 {
            DVector::zeros(p)
        } else {
            let solve = |rhs: &DVector<f64>| svd.solve(rhs, eps).map_err(|e| Error::Learner(e.to_string()));
            // the SVD solve alone is only accurate to about 1e-7; refine once
            let beta = solve(&b)?;
            let residual = &b - &a * &beta;
            beta + solve(&residual)?
        };
        let coefficients: Vec<f64> = beta.iter().copied().collect();
        let intercept = y_mean
            - coefficients
                .iter()
                .zip(&x_mean)
                .map(|(c, m)| c * m)
                .sum::<f64>();
        Ok(LinearModel {
            intercept,
            coefficients,
        })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(row)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }
}

impl Regressor for LeastSquares {
    fn name(&self) -> String {
        "least-squares".into()
    }

    fn fit(&self, x: &[Row], y: &[f64], _seed: u64) -> Result<Box<dyn RegressorModel>> {
        Ok(Box::new(LinearModel::fit(x, y)?))
    }
}

impl RegressorModel for LinearModel {
    fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        self.predict(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn exact_line() {
        let m = LinearModel::fit(&[vec![0.0], vec![1.0]], &[0.0, 1.0]).unwrap();
        assert!(close(m.predict(&[2.0]), 2.0));
        let m = LinearModel::fit(&[vec![1.0], vec![2.0]], &[2.0, 4.0]).unwrap();
        assert!(close(m.coefficients[0], 2.0));
        assert!(close(m.intercept, 0.0));
        assert!(close(m.predict(&[3.0]), 6.0));
    }

    #[test]
    fn constant_target_is_intercept_only() {
        let x = vec![vec![1.0, 7.0], vec![3.0, -2.0], vec![4.0, 0.5]];
        let m = LinearModel::fit(&x, &[5.0, 5.0, 5.0]).unwrap();
        assert!(close(m.predict(&[100.0, -30.0]), 5.0));
    }

    #[test]
    fn collinear_columns_get_minimum_norm_weights() {
        // second column duplicates the first: weight is split evenly
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        let m = LinearModel::fit(&x, &[1.0, 3.0, 5.0]).unwrap();
        assert!(close(m.coefficients[0], 1.0));
        assert!(close(m.coefficients[1], 1.0));
        assert!(close(m.predict(&[3.0, 3.0]), 7.0));
    }

    #[test]
    fn constant_feature_column_gets_zero_weight() {
        let x = vec![vec![4.0], vec![4.0]];
        let m = LinearModel::fit(&x, &[1.0, 3.0]).unwrap();
        assert_eq!(m.coefficients, vec![0.0]);
        assert!(close(m.predict(&[10.0]), 2.0));
    }

    #[test]
    fn underdetermined_single_row() {
        let m = LinearModel::fit(&[vec![1.0, 2.0]], &[3.0]).unwrap();
        assert!(close(m.predict(&[1.0, 2.0]), 3.0));
    }

    proptest! {
        #[test]
        fn residuals_are_orthogonal_to_features(
            rows in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 3), 8..20),
            coef in proptest::collection::vec(-3.0f64..3.0, 3),
            noise in proptest::collection::vec(-1.0f64..1.0, 20),
        ) {
            let y: Vec<f64> = rows.iter().enumerate()
                .map(|(i, r)| r.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>() + noise[i])
                .collect();
            let m = LinearModel::fit(&rows, &y).unwrap();
            let resid: Vec<f64> = rows.iter().zip(&y).map(|(r, t)| t - m.predict(r)).collect();
            prop_assert!(resid.iter().sum::<f64>().abs() < 1e-8);
            for j in 0..3 {
                let dot: f64 = rows.iter().zip(&resid).map(|(r, e)| r[j] * e).sum();
                prop_assert!(dot.abs() < 1e-8, "column {} dot {}", j, dot);
            }
        }
    }
}
