use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{build_design, fit_lambda, ols_hc3, FitResult, ModelId, Normalization, RegressionSpec, ResponseTransform, StatsError};
use crate::game::TrajectoryKind;
use crate::metrics::DeviationRow;
use crate::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub transform: ResponseTransform,
    pub normalization: Normalization,
    pub baseline: TrajectoryKind,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            transform: ResponseTransform::YeoJohnsonFit,
            normalization: Normalization::MinMax,
            baseline: TrajectoryKind::Static,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelComparison {
    pub models: Vec<ModelId>,
    pub fits: Vec<FitResult>,
    /// Shared response transform parameter.
    pub lambda: Option<f64>,
    /// Every response value was identical; slopes are reported as 0 and R^2
    /// is undefined.
    pub zero_variance: bool,
    pub options: ModelOptions,
}

/// Fits the requested models on one shared response transform.
pub fn run_models(
    rows: &[DeviationRow],
    models: &[ModelId],
    options: ModelOptions,
    exec: Execution,
) -> Result<ModelComparison, StatsError> {
    if rows.is_empty() {
        return Err(StatsError::Empty);
    }
    let first = rows[0].y;
    let zero_variance = rows.iter().all(|r| r.y == first);
    let transform = if zero_variance {
        ResponseTransform::None
    } else {
        match options.transform {
            ResponseTransform::YeoJohnsonFit => {
                let y: Vec<f64> = rows.iter().map(|r| r.y).collect();
                ResponseTransform::YeoJohnson(fit_lambda(&y)?)
            }
            t => t,
        }
    };
    let lambda = match transform {
        ResponseTransform::YeoJohnson(l) => Some(l),
        _ => None,
    };
    let fits = exec.map(models, |&model| {
        let spec = RegressionSpec {
            model,
            transform,
            normalization: options.normalization,
            baseline: options.baseline,
        };
        let design = build_design(rows, &spec)?;
        if zero_variance {
            let p = design.names.len();
            let mut coefficients = vec![0.0; p];
            coefficients[0] = first;
            return Ok(FitResult {
                names: design.names,
                coefficients,
                std_errors: vec![0.0; p],
                r_squared: None,
                n_obs: rows.len(),
                residuals: vec![0.0; rows.len()],
                leverage: Vec::new(),
                lambda: None,
            });
        }
        let mut fit = ols_hc3(&design.x, &design.y, &design.names)?;
        fit.lambda = lambda;
        Ok(fit)
    });
    Ok(ModelComparison {
        models: models.to_vec(),
        fits: fits.into_iter().collect::<Result<_, StatsError>>()?,
        lambda,
        zero_variance,
        options,
    })
}

/// One coefficient of one model, as written to CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRow {
    pub model: String,
    pub term: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
    pub stars: String,
}

/// Two-sided p-value under the normal approximation.
fn p_value(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

fn stars(p: Option<f64>) -> &'static str {
    match p {
        Some(p) if p < 0.01 => "**",
        Some(p) if p < 0.05 => "*",
        _ => "",
    }
}

impl ModelComparison {
    pub fn term_rows(&self) -> Vec<TermRow> {
        let mut out = Vec::new();
        for (model, fit) in self.models.iter().zip(&self.fits) {
            for ((name, &b), &se) in fit.names.iter().zip(&fit.coefficients).zip(&fit.std_errors) {
                let z = (se > 0.0).then(|| b / se);
                let p = z.map(p_value);
                out.push(TermRow {
                    model: model.to_string(),
                    term: name.clone(),
                    coefficient: b,
                    std_error: se,
                    z,
                    p_value: p,
                    stars: stars(p).to_string(),
                });
            }
        }
        out
    }
}

pub fn write_model_csv<W: Write>(out: W, comparison: &ModelComparison) -> Result<(), StatsError> {
    let mut w = csv::Writer::from_writer(out);
    for row in comparison.term_rows() {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Side-by-side table: one column per model, coefficient with stars and the
/// HC3 standard error in parentheses underneath.
pub fn format_model_table(comparison: &ModelComparison) -> String {
    let mut terms: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(usize, String), (f64, f64, &'static str)> = BTreeMap::new();
    for (m, fit) in comparison.fits.iter().enumerate() {
        for ((name, &b), &se) in fit.names.iter().zip(&fit.coefficients).zip(&fit.std_errors) {
            if !terms.contains(name) {
                terms.push(name.clone());
            }
            let p = (se > 0.0).then(|| p_value(b / se));
            cells.insert((m, name.clone()), (b, se, stars(p)));
        }
    }
    // Intercept and regressors first, fixed effects last.
    terms.sort_by_key(|t| (t.starts_with("FE["), t != "const"));
    let width = 14;
    let mut s = String::new();
    let _ = write!(s, "{:<16}", "");
    for m in &comparison.models {
        let _ = write!(s, "{:>width$}", format!("Model {}", m.number()));
    }
    s.push('\n');
    for term in &terms {
        let mut coef = format!("{term:<16}");
        let mut se_line = format!("{:<16}", "");
        for m in 0..comparison.fits.len() {
            match cells.get(&(m, term.clone())) {
                Some((b, se, st)) => {
                    let _ = write!(coef, "{:>width$}", format!("{b:.3}{st}"));
                    let _ = write!(se_line, "{:>width$}", format!("({se:.3})"));
                }
                None => {
                    let _ = write!(coef, "{:>width$}", "");
                    let _ = write!(se_line, "{:>width$}", "");
                }
            }
        }
        let _ = writeln!(s, "{}", coef.trim_end());
        let _ = writeln!(s, "{}", se_line.trim_end());
    }
    let _ = write!(s, "{:<16}", "# Obs");
    for fit in &comparison.fits {
        let _ = write!(s, "{:>width$}", fit.n_obs);
    }
    s.push('\n');
    let _ = write!(s, "{:<16}", "R^2");
    for fit in &comparison.fits {
        let r2 = fit.r_squared.map_or("n/a".to_string(), |r| format!("{r:.3}"));
        let _ = write!(s, "{:>width$}", r2);
    }
    s.push('\n');
    match comparison.lambda {
        Some(l) => {
            let _ = writeln!(s, "Yeo-Johnson lambda = {l:.4} (shared)");
        }
        None => {
            let _ = writeln!(s, "Response untransformed");
        }
    }
    if comparison.zero_variance {
        let _ = writeln!(s, "Zero-variance response: slopes fixed at 0, R^2 undefined");
    }
    let _ = writeln!(s, "HC3 standard errors in parentheses; * p<0.05, ** p<0.01 (normal approximation)");
    s
}
