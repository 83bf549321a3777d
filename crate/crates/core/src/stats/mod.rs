//! Regression analysis of the deviation dataset.

mod design;
mod models;
mod ols;
mod yeo_johnson;

use thiserror::Error;

pub use design::{build_design, Design, ModelId, Normalization, RegressionSpec, ResponseTransform};
pub use models::{
    format_model_table, run_models, write_model_csv, ModelComparison, ModelOptions, TermRow,
};
pub use ols::{classical_std_errors, ols_hc3, FitResult};
pub use yeo_johnson::{fit_lambda, inverse_yeo_johnson, log_likelihood, yeo_johnson};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("design matrix is rank deficient; dependent columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("row {row} has leverage 1; HC3 is undefined")]
    UnitLeverage { row: usize },
    #[error("column {0} is constant after normalization")]
    ConstantColumn(String),
    #[error("baseline path {0} does not occur in the data")]
    MissingBaseline(String),
    #[error("no rows to fit")]
    Empty,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
