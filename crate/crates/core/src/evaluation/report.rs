use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::alpha::{raw_alpha, standardized};
use super::likert::{grand_mean, likert_item_stats, GrandMean, ItemStats, SurveyMatrix};
use super::trials::TrialReport;
use super::{truncate_decimal, EvalError};
use crate::exec::Exec;

fn flag(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "yes",
        Some(false) => "no",
        None => "-",
    }
}

/// Plain-text table; percentages truncated to one decimal.
pub fn render_trial_table(report: &TrialReport) -> String {
    let header = [
        "parameter",
        "trial",
        "prototype",
        "commercial",
        "% diff",
        "proto ok",
        "comm ok",
    ];
    let mut rows: Vec<[String; 7]> = Vec::new();
    for (parameter, c) in report.cells() {
        rows.push([
            parameter.name().to_string(),
            c.trial.to_string(),
            c.prototype.to_string(),
            c.commercial.to_string(),
            format!("{:.1}", truncate_decimal(c.percent_difference, 1)),
            flag(c.prototype_in_range).to_string(),
            flag(c.commercial_in_range).to_string(),
        ]);
    }
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{cell:<w$}");
            } else {
                let _ = write!(s, "  {cell:>w$}");
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&header);
    for row in &rows {
        line(&row.each_ref().map(String::as_str));
    }
    out
}

/// Computed cells at full precision.
pub fn trial_report_csv(report: &TrialReport) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "parameter",
        "trial",
        "prototype",
        "commercial",
        "percent_difference",
        "prototype_in_range",
        "commercial_in_range",
    ])?;
    for (parameter, c) in report.cells() {
        w.write_record([
            parameter.name().to_string(),
            c.trial.to_string(),
            c.prototype.to_string(),
            c.commercial.to_string(),
            c.percent_difference.to_string(),
            c.prototype_in_range
                .map(|b| b.to_string())
                .unwrap_or_default(),
            c.commercial_in_range
                .map(|b| b.to_string())
                .unwrap_or_default(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| EvalError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemReport {
    pub label: String,
    #[serde(flatten)]
    pub stats: ItemStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    pub respondents: usize,
    pub items: Vec<ItemReport>,
    pub grand_mean: GrandMean,
    /// `None` when the statistic is undefined; see `alpha_notes`.
    pub raw_alpha: Option<f64>,
    pub standardized_alpha: Option<f64>,
    pub alpha_notes: Vec<String>,
}

pub fn survey_report(matrix: &SurveyMatrix) -> Result<SurveyReport, EvalError> {
    let items = matrix
        .labels()
        .iter()
        .zip(matrix.items())
        .map(|(label, column)| {
            Ok(ItemReport {
                label: label.clone(),
                stats: likert_item_stats(column)?,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let means: Vec<f64> = items.iter().map(|i| i.stats.mean).collect();
    let grand = grand_mean(&means)?;

    let columns = matrix.columns_f64();
    let mut notes = Vec::new();
    let mut keep = |r: Result<f64, EvalError>, what: &str| match r {
        Ok(v) => Some(v),
        Err(EvalError::DegenerateVariance(culprit)) => {
            notes.push(format!(
                "{what} alpha undefined: zero variance in {culprit}"
            ));
            None
        }
        Err(e) => {
            notes.push(format!("{what} alpha undefined: {e}"));
            None
        }
    };
    let raw = keep(raw_alpha(&columns, Exec::default()), "raw");
    let standardized = keep(
        standardized(&columns, Some(matrix.labels()), Exec::default()),
        "standardized",
    );

    Ok(SurveyReport {
        respondents: matrix.respondent_count(),
        items,
        grand_mean: grand,
        raw_alpha: raw,
        standardized_alpha: standardized,
        alpha_notes: notes,
    })
}

pub fn render_survey_report(report: &SurveyReport) -> String {
    let width = report
        .items
        .iter()
        .map(|i| i.label.len())
        .chain(["item".len(), "grand mean".len()])
        .max()
        .unwrap_or(4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>5}  {:>9}  interpretation",
        "item", "mean", "std. dev."
    );
    for item in &report.items {
        let _ = writeln!(
            out,
            "{:<width$}  {:>5.2}  {:>9.2}  {}",
            item.label, item.stats.mean, item.stats.std_dev, item.stats.band
        );
    }
    let _ = writeln!(
        out,
        "{:<width$}  {:>5.2}  {:>9}  {}",
        "grand mean", report.grand_mean.rounded, "", report.grand_mean.band
    );
    let alpha = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |a| format!("{a:.3}"));
    let _ = writeln!(
        out,
        "\nrespondents: {}  items: {}",
        report.respondents,
        report.items.len()
    );
    let _ = writeln!(out, "cronbach alpha (raw): {}", alpha(report.raw_alpha));
    let _ = writeln!(
        out,
        "cronbach alpha (standardized): {}",
        alpha(report.standardized_alpha)
    );
    for note in &report.alpha_notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}
