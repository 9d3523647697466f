//! Trial comparison and questionnaire statistics: percentage difference
//! between prototype and reference device, Likert item and grand means
//! with their verbal bands, and Cronbach's alpha.

mod alpha;
mod io;
mod likert;
mod report;
mod trials;

use thiserror::Error;

pub use alpha::{
    alpha_batch, cronbach_alpha, cronbach_alpha_columns, raw_alpha, standardized_alpha,
    CronbachAlpha,
};
pub use io::{read_survey, read_trials, TRIAL_HEADER};
pub use likert::{grand_mean, likert_item_stats, GrandMean, ItemStats, LikertBand, SurveyMatrix};
pub use report::{
    render_survey_report, render_trial_table, survey_report, trial_report_csv, SurveyReport,
};
pub use trials::{
    compare_trial_pairs, compare_trials, percentage_difference, percentage_differences, TrialCell,
    TrialPair, TrialReport, TrialSeries,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("percentage difference undefined: {v1} + {v2} = 0")]
    ZeroMean { v1: f64, v2: f64 },
    #[error("non-finite input")]
    NonFinite,
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("mean {0} lies outside the 1-5 scale")]
    OutOfScale(f64),
    #[error("score {value} outside 1..5 at row {row}, column `{column}`")]
    InvalidScore {
        row: usize,
        column: String,
        value: String,
    },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("{0}")]
    Shape(String),
    #[error("zero variance in {0}")]
    DegenerateVariance(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Rounds half away from zero at `places` decimals after snapping off
/// binary representation error (so 3.875 stored as 3.87499… still rounds up).
pub fn round_decimal(x: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    snap(x * scale).round() / scale
}

/// Truncates toward zero at `places` decimals, with the same snapping.
pub fn truncate_decimal(x: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    snap(x * scale).trunc() / scale
}

fn snap(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}
