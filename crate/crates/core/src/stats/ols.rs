//! Least squares by QR with HC3 heteroskedasticity-consistent errors.
//!
//! With `X = QR` (thin), the hat diagonal is `h_ii = |Q_i|^2` and
//! `(X'X)^-1 X' = R^-1 Q'`, so the HC3 sandwich is
//! `R^-1 (Q' W Q) R^-T` with `W = diag(e_i^2 / (1 - h_ii)^2)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::StatsError;

/// Relative size of `|R_jj|` below which column `j` counts as dependent.
const RANK_TOL: f64 = 1e-9;
/// `1 - h_ii` below this is treated as unit leverage.
const LEVERAGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Centered R^2; `None` when the response has zero variance.
    pub r_squared: Option<f64>,
    pub n_obs: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub leverage: Vec<f64>,
    /// Yeo-Johnson parameter applied to the response, if any.
    pub lambda: Option<f64>,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.coefficients[i], self.std_errors[i]))
    }
}

fn column_dependency(r: &DMatrix<f64>, j: usize, names: &[String]) -> Vec<String> {
    // Express column j in terms of the (independent) columns before it.
    let head = r.view((0, 0), (j, j)).clone_owned();
    let rhs = r.view((0, j), (j, 1)).clone_owned();
    let mut involved: Vec<String> = match head.solve_upper_triangular(&rhs) {
        Some(c) if j > 0 => {
            let scale = c.amax().max(f64::MIN_POSITIVE);
            (0..j)
                .filter(|&k| c[k].abs() > 1e-6 * scale)
                .map(|k| names[k].clone())
                .collect()
        }
        _ => Vec::new(),
    };
    involved.push(names[j].clone());
    involved
}

/// Ordinary least squares with HC3 standard errors.
pub fn ols_hc3(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<FitResult, StatsError> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(StatsError::Shape(format!("X has {n} rows but y has {}", y.len())));
    }
    if names.len() != p {
        return Err(StatsError::Shape(format!("{p} columns but {} names", names.len())));
    }
    if n <= p {
        return Err(StatsError::Shape(format!("need more observations ({n}) than columns ({p})")));
    }

    let qr = x.clone().qr();
    let r = qr.r();
    let q = qr.q();
    for j in 0..p {
        let col_norm = x.column(j).norm();
        if col_norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * col_norm {
            return Err(StatsError::RankDeficient {
                columns: column_dependency(&r, j, names),
            });
        }
    }

    let qty = q.transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| StatsError::Numerical("triangular solve failed".into()))?;
    let fitted = x * &beta;
    let residuals = y - &fitted;
    let leverage: Vec<f64> = (0..n).map(|i| q.row(i).norm_squared()).collect();

    let mut weights = Vec::with_capacity(n);
    for (i, (&e, &h)) in residuals.iter().zip(&leverage).enumerate() {
        let slack = 1.0 - h;
        if slack < LEVERAGE_TOL {
            return Err(StatsError::UnitLeverage { row: i });
        }
        weights.push((e / slack).powi(2));
    }

    // Q' W Q
    let mut scaled = q.clone();
    for (i, w) in weights.iter().enumerate() {
        let s = w.sqrt();
        scaled.row_mut(i).scale_mut(s);
    }
    let meat = scaled.transpose() * &scaled;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| StatsError::Numerical("R is singular".into()))?;
    let cov = &r_inv * meat * r_inv.transpose();
    let std_errors: Vec<f64> = (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();

    let mean = y.mean();
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ssr = residuals.norm_squared();
    let r_squared = (sst > 0.0).then(|| 1.0 - ssr / sst);

    Ok(FitResult {
        names: names.to_vec(),
        coefficients: beta.iter().copied().collect(),
        std_errors,
        r_squared,
        n_obs: n,
        residuals: residuals.iter().copied().collect(),
        leverage,
        lambda: None,
    })
}

/// Classical (homoskedastic) OLS standard errors, `s^2 (X'X)^-1` with
/// `s^2 = SSR / (n - p)`.
pub fn classical_std_errors(x: &DMatrix<f64>, fit: &FitResult) -> Result<Vec<f64>, StatsError> {
    let (n, p) = x.shape();
    let xtx_inv = (x.transpose() * x)
        .try_inverse()
        .ok_or_else(|| StatsError::Numerical("X'X is singular".into()))?;
    let s2 = fit.residuals.iter().map(|e| e * e).sum::<f64>() / (n - p) as f64;
    Ok((0..p).map(|j| (s2 * xtx_inv[(j, j)]).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("x{j}")).collect()
    }

    /// Direct evaluation of the HC3 formula with explicit inverses.
    fn hc3_oracle(x: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, Vec<f64>) {
        let xtx_inv = (x.transpose() * x).try_inverse().unwrap();
        let beta = &xtx_inv * x.transpose() * y;
        let e = y - x * &beta;
        let h = x * &xtx_inv * x.transpose();
        let n = x.nrows();
        let omega = DMatrix::from_fn(n, n, |i, j| if i == j { (e[i] / (1.0 - h[(i, i)])).powi(2) } else { 0.0 });
        let cov = &xtx_inv * x.transpose() * omega * x * &xtx_inv;
        let se = (0..x.ncols()).map(|j| cov[(j, j)].sqrt()).collect();
        (beta, se)
    }

    #[test]
    fn noiseless_recovery() {
        let n = 40;
        let x = DMatrix::from_fn(n, 3, |i, j| match j {
            0 => 1.0,
            1 => (i as f64 * 0.37).sin(),
            _ => (i as f64).sqrt(),
        });
        let truth = DVector::from_vec(vec![1.5, -2.0, 0.25]);
        let y = &x * &truth;
        let fit = ols_hc3(&x, &y, &names(3)).unwrap();
        for j in 0..3 {
            assert!((fit.coefficients[j] - truth[j]).abs() < 1e-8);
            assert!(fit.std_errors[j] < 1e-8);
        }
        assert!((fit.r_squared.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_dataset_matches_direct_formula() {
        let x = DMatrix::from_row_slice(5, 2, &[1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 4.0, 1.0, 5.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 2.0, 5.0, 4.0]);
        let fit = ols_hc3(&x, &y, &names(2)).unwrap();
        let (beta, se) = hc3_oracle(&x, &y);
        for j in 0..2 {
            assert!((fit.coefficients[j] - beta[j]).abs() < 1e-10);
            assert!((fit.std_errors[j] - se[j]).abs() < 1e-10);
        }
        // Frozen reference (statsmodels OLS(...).fit(cov_type="HC3")).
        assert!((fit.coefficients[0] - 0.6).abs() < 1e-10);
        assert!((fit.coefficients[1] - 0.8).abs() < 1e-10);
        assert!((fit.std_errors[0] - 1.19097371).abs() < 1e-8);
        assert!((fit.std_errors[1] - 0.41526977).abs() < 1e-8);
        assert!((fit.r_squared.unwrap() - 0.64).abs() < 1e-12);
    }

    #[test]
    fn duplicated_column_names_both() {
        let x = DMatrix::from_fn(10, 3, |i, j| match j {
            0 => 1.0,
            _ => i as f64 * 0.5,
        });
        let y = DVector::from_fn(10, |i, _| i as f64);
        let names = vec!["const".to_string(), "a".into(), "a_copy".into()];
        match ols_hc3(&x, &y, &names) {
            Err(StatsError::RankDeficient { columns }) => {
                assert_eq!(columns, vec!["a".to_string(), "a_copy".to_string()]);
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn unit_leverage_reported() {
        // Row 4 is the only one with a nonzero second column.
        let x = DMatrix::from_row_slice(5, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(matches!(ols_hc3(&x, &y, &names(2)), Err(StatsError::UnitLeverage { row: 4 })));
    }

    #[test]
    fn balanced_design_with_equal_weights_matches_classical() {
        // Orthogonal +-1 design with equal |e_i| and equal leverage.
        let rows: Vec<[f64; 3]> = (0..8)
            .map(|i| [1.0, if i & 1 == 0 { 1.0 } else { -1.0 }, if i & 2 == 0 { 1.0 } else { -1.0 }])
            .collect();
        let x = DMatrix::from_fn(8, 3, |i, j| rows[i][j]);
        let signs = [1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0];
        let truth = DVector::from_vec(vec![2.0, 0.5, -1.0]);
        let y = &x * &truth + DVector::from_vec(signs.to_vec());
        let fit = ols_hc3(&x, &y, &names(3)).unwrap();
        let e_abs: Vec<f64> = fit.residuals.iter().map(|e| e.abs()).collect();
        assert!(e_abs.iter().all(|v| (v - e_abs[0]).abs() < 1e-12));
        assert!(fit.leverage.iter().all(|h| (h - 3.0 / 8.0).abs() < 1e-12));
        let classical = classical_std_errors(&x, &fit).unwrap();
        // With equal weights w, HC3 cov = w (X'X)^-1 and classical = s^2 (X'X)^-1.
        let w = (e_abs[0] / (1.0 - 3.0 / 8.0)).powi(2);
        let s2 = fit.residuals.iter().map(|e| e * e).sum::<f64>() / 5.0;
        for (se, c) in fit.std_errors.iter().zip(&classical) {
            assert!((se - c * (w / s2).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn residuals_orthogonal_to_columns() {
        let x = DMatrix::from_fn(30, 4, |i, j| ((i * (j + 2)) as f64 * 0.71).cos() + if j == 0 { 1.0 } else { 0.0 });
        let y = DVector::from_fn(30, |i, _| (i as f64 * 1.3).sin() * 5.0);
        let fit = ols_hc3(&x, &y, &names(4)).unwrap();
        let e = DVector::from_vec(fit.residuals.clone());
        let xte = x.transpose() * e;
        assert!(xte.amax() < 1e-8 * (1.0 + y.norm()));
    }
}
