use serde::{Deserialize, Serialize};

use super::likert::SurveyMatrix;
use super::EvalError;
use crate::exec::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CronbachAlpha {
    pub raw: f64,
    pub standardized: f64,
    pub items: usize,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

fn check_shape(columns: &[Vec<f64>]) -> Result<usize, EvalError> {
    if columns.len() < 2 {
        return Err(EvalError::Shape("alpha needs at least 2 items".into()));
    }
    let n = columns[0].len();
    if n < 2 {
        return Err(EvalError::Shape(
            "alpha needs at least 2 respondents".into(),
        ));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(EvalError::LengthMismatch(
            "item columns differ in length".into(),
        ));
    }
    if columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    Ok(n)
}

fn label(labels: Option<&[String]>, i: usize) -> String {
    labels
        .and_then(|l| l.get(i).cloned())
        .unwrap_or_else(|| format!("item {}", i + 1))
}

/// `k/(k−1) · (1 − Σ item variances / total-score variance)`.
pub fn raw_alpha(columns: &[Vec<f64>], exec: Exec) -> Result<f64, EvalError> {
    let n = check_shape(columns)?;
    let k = columns.len() as f64;
    let item_var: f64 = exec.map(columns, |c| sample_variance(c)).into_iter().sum();
    let totals: Vec<f64> = (0..n).map(|r| columns.iter().map(|c| c[r]).sum()).collect();
    let total_var = sample_variance(&totals);
    if total_var == 0.0 {
        return Err(EvalError::DegenerateVariance("total score".into()));
    }
    Ok(k / (k - 1.0) * (1.0 - item_var / total_var))
}

pub(crate) fn standardized(
    columns: &[Vec<f64>],
    labels: Option<&[String]>,
    exec: Exec,
) -> Result<f64, EvalError> {
    check_shape(columns)?;
    let variances = exec.map(columns, |c| sample_variance(c));
    if let Some(i) = variances.iter().position(|v| *v == 0.0) {
        return Err(EvalError::DegenerateVariance(label(labels, i)));
    }
    let k = columns.len();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect();
    let r_sum: f64 = exec
        .map(&pairs, |&(i, j)| correlation(&columns[i], &columns[j]))
        .into_iter()
        .sum();
    let r_bar = r_sum / pairs.len() as f64;
    let k = k as f64;
    Ok(k * r_bar / (1.0 + (k - 1.0) * r_bar))
}

/// `k·r̄ / (1 + (k−1)·r̄)` with `r̄` the mean pairwise Pearson correlation.
pub fn standardized_alpha(columns: &[Vec<f64>], exec: Exec) -> Result<f64, EvalError> {
    standardized(columns, None, exec)
}

/// Both alpha forms over real-valued item columns.
pub fn cronbach_alpha_columns(
    columns: &[Vec<f64>],
    labels: Option<&[String]>,
    exec: Exec,
) -> Result<CronbachAlpha, EvalError> {
    let raw = raw_alpha(columns, exec)?;
    let standardized = standardized(columns, labels, exec)?;
    Ok(CronbachAlpha {
        raw,
        standardized,
        items: columns.len(),
    })
}

pub fn cronbach_alpha(matrix: &SurveyMatrix) -> Result<CronbachAlpha, EvalError> {
    cronbach_alpha_columns(
        &matrix.columns_f64(),
        Some(matrix.labels()),
        Exec::default(),
    )
}

/// Alpha for many independent matrices.
pub fn alpha_batch(matrices: &[SurveyMatrix], exec: Exec) -> Vec<Result<CronbachAlpha, EvalError>> {
    exec.map(matrices, |m| {
        cronbach_alpha_columns(&m.columns_f64(), Some(m.labels()), Exec::Sequential)
    })
}
