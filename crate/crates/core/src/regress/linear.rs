//! Ordinary least squares via the normal equations, with a small ridge
//! jitter on the Gram diagonal so singular designs (duplicated or constant
//! columns) still solve.

use crate::error::{Error, Result};

use super::EnsembleModel;

const RIDGE_JITTER: f64 = 1e-8;

pub fn fit_linear(x: &[Vec<f64>], y: &[f64]) -> Result<EnsembleModel> {
    if x.is_empty() {
        return Err(Error::invalid("regression over an empty sample"));
    }
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "{} rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(Error::invalid(format!(
                "row {i} has {} features, expected {d}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "row {i} contains a non-finite value"
            )));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("targets must be finite"));
    }

    // Augmented design: d coefficients plus an intercept column of ones.
    let m = d + 1;
    let mut gram = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for (row, &target) in x.iter().zip(y) {
        for a in 0..m {
            let va = if a < d { row[a] } else { 1.0 };
            rhs[a] += va * target;
            for b in a..m {
                let vb = if b < d { row[b] } else { 1.0 };
                gram[a][b] += va * vb;
            }
        }
    }
    #[allow(clippy::needless_range_loop)]
    for a in 0..m {
        for b in 0..a {
            gram[a][b] = gram[b][a];
        }
        gram[a][a] += RIDGE_JITTER;
    }

    let solution = solve(gram, rhs)?;
    let (coefficients, intercept) = {
        let mut c = solution;
        let b = c.pop().expect("solution includes the intercept");
        (c, b)
    };
    Ok(EnsembleModel::Linear {
        coefficients,
        intercept,
    })
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty system");
        if a[pivot][col].abs() == 0.0 {
            return Err(Error::invalid("singular system in least squares"));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![1.0, 3.0, 5.0]; // y = 2x + 1
        let m = fit_linear(&x, &y).unwrap();
        let EnsembleModel::Linear {
            coefficients,
            intercept,
        } = &m
        else {
            panic!()
        };
        assert!((coefficients[0] - 2.0).abs() < 1e-6);
        assert!((intercept - 1.0).abs() < 1e-6);
        assert!((m.predict(&[10.0]) - 21.0).abs() < 1e-5);
    }

    #[test]
    fn constant_targets_give_zero_slope() {
        let x = vec![vec![0.0], vec![1.0], vec![4.0]];
        let y = vec![2.0, 2.0, 2.0];
        let m = fit_linear(&x, &y).unwrap();
        let EnsembleModel::Linear {
            coefficients,
            intercept,
        } = &m
        else {
            panic!()
        };
        assert!(coefficients[0].abs() < 1e-6);
        assert!((intercept - 2.0).abs() < 1e-6);
    }

    #[test]
    fn duplicated_columns_still_solve() {
        let x = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let y = vec![2.0, 4.0, 6.0];
        let m = fit_linear(&x, &y).unwrap();
        for (row, &t) in x.iter().zip(&y) {
            assert!((m.predict(row) - t).abs() < 1e-4);
        }
    }

    #[test]
    fn multi_feature_fit() {
        // y = 3a - 2b + 0.5
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![2.0, 1.0],
            vec![1.0, 3.0],
        ];
        let y: Vec<f64> = x.iter().map(|r| 3.0 * r[0] - 2.0 * r[1] + 0.5).collect();
        let m = fit_linear(&x, &y).unwrap();
        assert!((m.predict(&[4.0, 2.0]) - 8.5).abs() < 1e-5);
    }
}
