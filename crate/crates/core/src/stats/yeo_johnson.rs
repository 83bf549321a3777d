use super::StatsError;

const BRANCH_EPS: f64 = 1e-8;
const SEARCH_LO: f64 = -5.0;
const SEARCH_HI: f64 = 5.0;
const LAMBDA_TOL: f64 = 1e-6;

/// Yeo-Johnson power transform; defined for every real `y`.
pub fn yeo_johnson(y: f64, lambda: f64) -> f64 {
    if y >= 0.0 {
        let l = y.ln_1p();
        if lambda.abs() < BRANCH_EPS {
            l
        } else {
            (lambda * l).exp_m1() / lambda
        }
    } else {
        let l = (-y).ln_1p();
        let p = 2.0 - lambda;
        if p.abs() < BRANCH_EPS {
            -l
        } else {
            -(p * l).exp_m1() / p
        }
    }
}

/// Inverse of [`yeo_johnson`] for a fixed `lambda`.
pub fn inverse_yeo_johnson(z: f64, lambda: f64) -> f64 {
    if z >= 0.0 {
        if lambda.abs() < BRANCH_EPS {
            z.exp_m1()
        } else {
            ((lambda * z).ln_1p() / lambda).exp_m1()
        }
    } else {
        let p = 2.0 - lambda;
        if p.abs() < BRANCH_EPS {
            -(-z).exp_m1()
        } else {
            -((-p * z).ln_1p() / p).exp_m1()
        }
    }
}

/// Profile log-likelihood of `lambda` under a normal model for the
/// transformed values (constants dropped).
pub fn log_likelihood(values: &[f64], lambda: f64) -> f64 {
    let n = values.len() as f64;
    let transformed: Vec<f64> = values.iter().map(|&y| yeo_johnson(y, lambda)).collect();
    let mean = transformed.iter().sum::<f64>() / n;
    let var = transformed.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    let jacobian: f64 = values.iter().map(|&y| y.signum() * y.abs().ln_1p()).sum();
    -0.5 * n * var.ln() + (lambda - 1.0) * jacobian
}

/// Maximum-likelihood `lambda` on `[-5, 5]` by golden-section search.
pub fn fit_lambda(values: &[f64]) -> Result<f64, StatsError> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(StatsError::Degenerate(format!(
            "need at least 3 distinct values to fit lambda, got {}",
            distinct.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::Degenerate("non-finite value in sample".into()));
    }
    let f = |l: f64| -log_likelihood(values, l);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (SEARCH_LO, SEARCH_HI);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > LAMBDA_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Ok((a + b) / 2.0)
}
