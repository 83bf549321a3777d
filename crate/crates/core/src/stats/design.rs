use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{fit_lambda, yeo_johnson, StatsError};
use crate::game::TrajectoryKind;
use crate::metrics::DeviationRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelId {
    M1,
    M2,
    M3,
    M4,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [ModelId::M1, ModelId::M2, ModelId::M3, ModelId::M4];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    /// Regressor names, excluding intercept and path dummies.
    pub fn regressors(self) -> &'static [&'static str] {
        const M1: &[&str] = &["Price", "NE", "theta", "History"];
        const M2: &[&str] = &["Price", "NE", "theta", "History", "Price:theta"];
        const M3: &[&str] = &[
            "Price", "NE", "theta", "History", "Price:theta", "NE:History", "NE:Price", "NE:theta",
        ];
        const M4: &[&str] = &[
            "Price", "NE", "theta", "History", "Price:theta", "NE:History", "Price:History", "theta:History",
        ];
        match self {
            ModelId::M1 => M1,
            ModelId::M2 => M2,
            ModelId::M3 => M3,
            ModelId::M4 => M4,
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.number())
    }
}

impl FromStr for ModelId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().trim_start_matches(['M', 'm']) {
            "1" => Ok(ModelId::M1),
            "2" => Ok(ModelId::M2),
            "3" => Ok(ModelId::M3),
            "4" => Ok(ModelId::M4),
            _ => Err(format!("unknown model {s:?}; expected 1-4")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseTransform {
    None,
    YeoJohnson(f64),
    /// Fit lambda by maximum likelihood on the response.
    #[default]
    YeoJohnsonFit,
}

/// Scaling applied to Price and theta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `(v - min) / (max - min)` over the sample.
    #[default]
    MinMax,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub model: ModelId,
    pub transform: ResponseTransform,
    pub normalization: Normalization,
    pub baseline: TrajectoryKind,
}

impl RegressionSpec {
    pub fn new(model: ModelId) -> Self {
        RegressionSpec {
            model,
            transform: ResponseTransform::default(),
            normalization: Normalization::default(),
            baseline: TrajectoryKind::Static,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub names: Vec<String>,
    pub lambda: Option<f64>,
}

fn scaler(name: &str, values: impl Iterator<Item = f64>, norm: Normalization) -> Result<impl Fn(f64) -> f64, StatsError> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi <= lo {
        return Err(StatsError::ConstantColumn(name.to_string()));
    }
    Ok(move |v: f64| match norm {
        Normalization::MinMax => (v - lo) / (hi - lo),
        Normalization::Raw => v,
    })
}

/// Maps dynamic window lengths to evenly spaced levels in `[0, 1]` by rank;
/// static rows (window 0) map to 0.
fn history_levels(rows: &[DeviationRow]) -> Result<Vec<usize>, StatsError> {
    let levels: Vec<usize> = rows
        .iter()
        .filter(|r| !r.trajectory.is_static())
        .map(|r| r.window)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if levels.len() < 2 {
        return Err(StatsError::ConstantColumn("History".into()));
    }
    Ok(levels)
}

/// Builds `(X, y, names)` for one model. Column order: intercept, regressors,
/// then one dummy per non-baseline path present in the data.
pub fn build_design(rows: &[DeviationRow], spec: &RegressionSpec) -> Result<Design, StatsError> {
    if rows.is_empty() {
        return Err(StatsError::Empty);
    }
    let price = scaler("Price", rows.iter().map(|r| r.price), spec.normalization)?;
    let theta = scaler("theta", rows.iter().map(|r| r.theta), spec.normalization)?;
    let betas: BTreeSet<u64> = rows.iter().map(|r| r.beta.to_bits()).collect();
    if betas.len() < 2 {
        return Err(StatsError::ConstantColumn("NE".into()));
    }
    let ne_level = rows.iter().map(|r| r.beta).fold(f64::NEG_INFINITY, f64::max);
    let levels = history_levels(rows)?;
    let history = |r: &DeviationRow| -> f64 {
        if r.trajectory.is_static() {
            0.0
        } else {
            let rank = levels.binary_search(&r.window).expect("level collected above");
            rank as f64 / (levels.len() - 1) as f64
        }
    };

    let present: BTreeSet<TrajectoryKind> = rows.iter().map(|r| r.trajectory).collect();
    if !present.contains(&spec.baseline) {
        return Err(StatsError::MissingBaseline(spec.baseline.as_str().into()));
    }
    let dummies: Vec<TrajectoryKind> = present.into_iter().filter(|k| *k != spec.baseline).collect();

    let regressors = spec.model.regressors();
    let mut names = Vec::with_capacity(1 + regressors.len() + dummies.len());
    names.push("const".to_string());
    names.extend(regressors.iter().map(|s| s.to_string()));
    names.extend(dummies.iter().map(|k| format!("FE[{}]", k.as_str())));

    let p = names.len();
    let mut x = DMatrix::zeros(rows.len(), p);
    for (i, r) in rows.iter().enumerate() {
        let pr = price(r.price);
        let th = theta(r.theta);
        let ne = if r.beta == ne_level { 1.0 } else { 0.0 };
        let h = history(r);
        x[(i, 0)] = 1.0;
        for (j, name) in regressors.iter().enumerate() {
            x[(i, 1 + j)] = match *name {
                "Price" => pr,
                "NE" => ne,
                "theta" => th,
                "History" => h,
                "Price:theta" => pr * th,
                "NE:History" => ne * h,
                "NE:Price" => ne * pr,
                "NE:theta" => ne * th,
                "Price:History" => pr * h,
                "theta:History" => th * h,
                other => unreachable!("unknown regressor {other}"),
            };
        }
        for (j, k) in dummies.iter().enumerate() {
            x[(i, 1 + regressors.len() + j)] = if r.trajectory == *k { 1.0 } else { 0.0 };
        }
    }

    let raw: Vec<f64> = rows.iter().map(|r| r.y).collect();
    let lambda = match spec.transform {
        ResponseTransform::None => None,
        ResponseTransform::YeoJohnson(l) => Some(l),
        ResponseTransform::YeoJohnsonFit => Some(fit_lambda(&raw)?),
    };
    let y = DVector::from_iterator(raw.len(), raw.iter().map(|&v| lambda.map_or(v, |l| yeo_johnson(v, l))));
    Ok(Design { x, y, names, lambda })
}
