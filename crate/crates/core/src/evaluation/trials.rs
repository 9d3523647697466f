use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::control::Thresholds;
use crate::exec::Exec;
use crate::sensors::SensorKind;

/// `|v1 - v2| / |(v1 + v2) / 2| × 100` at full precision.
pub fn percentage_difference(v1: f64, v2: f64) -> Result<f64, EvalError> {
    if !v1.is_finite() || !v2.is_finite() {
        return Err(EvalError::NonFinite);
    }
    let mean = (v1 + v2) / 2.0;
    if mean == 0.0 {
        return Err(EvalError::ZeroMean { v1, v2 });
    }
    Ok((v1 - v2).abs() / mean.abs() * 100.0)
}

pub fn percentage_differences(pairs: &[(f64, f64)], exec: Exec) -> Vec<Result<f64, EvalError>> {
    exec.map(pairs, |&(a, b)| percentage_difference(a, b))
}

/// One prototype/reference measurement pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialPair {
    pub parameter: SensorKind,
    pub trial: u32,
    pub prototype: f64,
    pub commercial: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialCell {
    pub trial: u32,
    pub prototype: f64,
    pub commercial: f64,
    pub percent_difference: f64,
    /// `None` for parameters without an ideal band (light).
    pub prototype_in_range: Option<bool>,
    pub commercial_in_range: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSeries {
    pub parameter: SensorKind,
    pub cells: Vec<TrialCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub series: Vec<TrialSeries>,
}

impl TrialReport {
    pub fn cells(&self) -> impl Iterator<Item = (SensorKind, &TrialCell)> {
        self.series
            .iter()
            .flat_map(|s| s.cells.iter().map(move |c| (s.parameter, c)))
    }

    pub fn trial_count(&self) -> usize {
        self.series.iter().map(|s| s.cells.len()).max().unwrap_or(0)
    }
}

/// Compares aligned series: `prototype[i][j]` and `commercial[i][j]` are
/// trial `j + 1` of parameter `labels[i]`.
pub fn compare_trials(
    prototype: &[Vec<f64>],
    commercial: &[Vec<f64>],
    labels: &[SensorKind],
    thresholds: &Thresholds,
) -> Result<TrialReport, EvalError> {
    if prototype.len() != commercial.len() || prototype.len() != labels.len() {
        return Err(EvalError::LengthMismatch(format!(
            "{} prototype series, {} commercial series, {} labels",
            prototype.len(),
            commercial.len(),
            labels.len()
        )));
    }
    let mut series = Vec::with_capacity(labels.len());
    for ((p, c), &parameter) in prototype.iter().zip(commercial).zip(labels) {
        if p.len() != c.len() {
            return Err(EvalError::LengthMismatch(format!(
                "{parameter}: {} prototype trials vs {} commercial trials",
                p.len(),
                c.len()
            )));
        }
        let cells = p
            .iter()
            .zip(c)
            .enumerate()
            .map(|(j, (&pv, &cv))| {
                Ok(TrialCell {
                    trial: j as u32 + 1,
                    prototype: pv,
                    commercial: cv,
                    percent_difference: percentage_difference(pv, cv)?,
                    prototype_in_range: thresholds.in_ideal_range(parameter, pv),
                    commercial_in_range: thresholds.in_ideal_range(parameter, cv),
                })
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        series.push(TrialSeries { parameter, cells });
    }
    Ok(TrialReport { series })
}

/// Groups loose pairs by parameter (first-seen order) and trial number,
/// then compares them.
pub fn compare_trial_pairs(
    pairs: &[TrialPair],
    thresholds: &Thresholds,
) -> Result<TrialReport, EvalError> {
    let mut labels: Vec<SensorKind> = Vec::new();
    for p in pairs {
        if !labels.contains(&p.parameter) {
            labels.push(p.parameter);
        }
    }
    let mut prototype = Vec::new();
    let mut commercial = Vec::new();
    for &label in &labels {
        let mut rows: Vec<&TrialPair> = pairs.iter().filter(|p| p.parameter == label).collect();
        rows.sort_by_key(|p| p.trial);
        for (i, row) in rows.iter().enumerate() {
            if row.trial != i as u32 + 1 {
                return Err(EvalError::Shape(format!(
                    "{label}: trials must be numbered 1..n without gaps or repeats"
                )));
            }
        }
        prototype.push(rows.iter().map(|p| p.prototype).collect());
        commercial.push(rows.iter().map(|p| p.commercial).collect());
    }
    compare_trials(&prototype, &commercial, &labels, thresholds)
}
