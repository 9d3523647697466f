use std::fmt;

use serde::{Deserialize, Serialize};

use super::{round_decimal, EvalError};

/// Five-point agreement bands over mean scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LikertBand {
    StronglyAgree,
    Agree,
    SlightlyAgree,
    Disagree,
    StronglyDisagree,
}

impl LikertBand {
    pub const ALL: [LikertBand; 5] = [
        LikertBand::StronglyAgree,
        LikertBand::Agree,
        LikertBand::SlightlyAgree,
        LikertBand::Disagree,
        LikertBand::StronglyDisagree,
    ];

    pub fn scale_point(self) -> u8 {
        match self {
            LikertBand::StronglyAgree => 5,
            LikertBand::Agree => 4,
            LikertBand::SlightlyAgree => 3,
            LikertBand::Disagree => 2,
            LikertBand::StronglyDisagree => 1,
        }
    }

    pub fn agreement(self) -> &'static str {
        match self {
            LikertBand::StronglyAgree => "Strongly Agree",
            LikertBand::Agree => "Agree",
            LikertBand::SlightlyAgree => "Slightly Agree",
            LikertBand::Disagree => "Disagree",
            LikertBand::StronglyDisagree => "Strongly Disagree",
        }
    }

    pub fn quality(self) -> &'static str {
        match self {
            LikertBand::StronglyAgree => "Excellent",
            LikertBand::Agree => "Very Good",
            LikertBand::SlightlyAgree => "Good",
            LikertBand::Disagree => "Fair",
            LikertBand::StronglyDisagree => "Deficient",
        }
    }

    /// Closed interval in hundredths.
    fn hundredths(self) -> (i64, i64) {
        match self {
            LikertBand::StronglyAgree => (420, 500),
            LikertBand::Agree => (340, 419),
            LikertBand::SlightlyAgree => (260, 339),
            LikertBand::Disagree => (180, 259),
            LikertBand::StronglyDisagree => (100, 179),
        }
    }

    pub fn interval(self) -> (f64, f64) {
        let (lo, hi) = self.hundredths();
        (lo as f64 / 100.0, hi as f64 / 100.0)
    }

    /// Looks the mean up after rounding it to two decimals, which makes
    /// the printed intervals partition [1.00, 5.00].
    pub fn for_mean(mean: f64) -> Result<LikertBand, EvalError> {
        if !mean.is_finite() {
            return Err(EvalError::NonFinite);
        }
        let h = (round_decimal(mean, 2) * 100.0).round() as i64;
        LikertBand::ALL
            .into_iter()
            .find(|b| {
                let (lo, hi) = b.hundredths();
                lo <= h && h <= hi
            })
            .ok_or(EvalError::OutOfScale(mean))
    }
}

impl fmt::Display for LikertBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.agreement(), self.quality())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemStats {
    pub mean: f64,
    /// Sample standard deviation (n − 1); zero for a single response.
    pub std_dev: f64,
    pub band: LikertBand,
}

pub fn likert_item_stats(scores: &[u8]) -> Result<ItemStats, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::Empty("score column"));
    }
    if let Some(bad) = scores.iter().find(|s| !(1..=5).contains(*s)) {
        return Err(EvalError::OutOfScale(*bad as f64));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().map(|&s| s as f64).sum::<f64>() / n;
    let std_dev = if scores.len() > 1 {
        let ss: f64 = scores.iter().map(|&s| (s as f64 - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(ItemStats {
        mean,
        std_dev,
        band: LikertBand::for_mean(mean)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrandMean {
    pub mean: f64,
    /// Two-decimal display value.
    pub rounded: f64,
    pub band: LikertBand,
}

/// Mean of item means.
pub fn grand_mean(item_means: &[f64]) -> Result<GrandMean, EvalError> {
    if item_means.is_empty() {
        return Err(EvalError::Empty("item means"));
    }
    for &m in item_means {
        if !m.is_finite() {
            return Err(EvalError::NonFinite);
        }
        if !(1.0..=5.0).contains(&m) {
            return Err(EvalError::OutOfScale(m));
        }
    }
    let mean = item_means.iter().sum::<f64>() / item_means.len() as f64;
    Ok(GrandMean {
        mean,
        rounded: round_decimal(mean, 2),
        band: LikertBand::for_mean(mean)?,
    })
}

/// Respondents × items matrix of 1..5 scores, stored item-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyMatrix {
    labels: Vec<String>,
    items: Vec<Vec<u8>>,
}

impl SurveyMatrix {
    /// `rows[r][i]` is respondent `r`'s score on item `i`.
    pub fn from_rows(labels: Vec<String>, rows: &[Vec<u8>]) -> Result<Self, EvalError> {
        let k = labels.len();
        let mut items = vec![Vec::with_capacity(rows.len()); k];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(EvalError::Shape(format!(
                    "row {} has {} cells, expected {k}",
                    r + 1,
                    row.len()
                )));
            }
            for (i, &score) in row.iter().enumerate() {
                if !(1..=5).contains(&score) {
                    return Err(EvalError::InvalidScore {
                        row: r + 1,
                        column: labels[i].clone(),
                        value: score.to_string(),
                    });
                }
                items[i].push(score);
            }
        }
        Ok(Self { labels, items })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn item(&self, i: usize) -> &[u8] {
        &self.items[i]
    }

    pub fn items(&self) -> &[Vec<u8>] {
        &self.items
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn respondent_count(&self) -> usize {
        self.items.first().map_or(0, Vec::len)
    }

    pub fn columns_f64(&self) -> Vec<Vec<f64>> {
        self.items
            .iter()
            .map(|c| c.iter().map(|&s| s as f64).collect())
            .collect()
    }
}
