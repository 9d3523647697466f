use std::io::Read;

use super::likert::SurveyMatrix;
use super::trials::TrialPair;
use super::EvalError;
use crate::sensors::SensorKind;

pub const TRIAL_HEADER: [&str; 4] = ["parameter", "trial", "prototype", "commercial"];

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input)
}

/// `parameter,trial,prototype,commercial` rows.
pub fn read_trials<R: Read>(input: R) -> Result<Vec<TrialPair>, EvalError> {
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRIAL_HEADER) {
        return Err(EvalError::Shape(format!(
            "expected header `{}`",
            TRIAL_HEADER.join(",")
        )));
    }
    let mut pairs = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let err = |message: String| EvalError::Row { line, message };
        let parameter: SensorKind = record[0].parse().map_err(|e| err(format!("{e}")))?;
        let trial: u32 = record[1]
            .parse()
            .map_err(|_| err(format!("bad trial number `{}`", &record[1])))?;
        let number = |i: usize| -> Result<f64, EvalError> {
            record[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad {} value `{}`", TRIAL_HEADER[i], &record[i])))
        };
        pairs.push(TrialPair {
            parameter,
            trial,
            prototype: number(2)?,
            commercial: number(3)?,
        });
    }
    Ok(pairs)
}

/// Header row of item labels, then one row of 1..5 scores per respondent.
pub fn read_survey<R: Read>(input: R) -> Result<SurveyMatrix, EvalError> {
    let mut rdr = reader(input);
    let labels: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if labels.is_empty() || labels.iter().any(String::is_empty) {
        return Err(EvalError::Shape(
            "survey header needs one label per item".into(),
        ));
    }
    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => {
                EvalError::Shape(format!("row {} has the wrong number of cells", r + 1))
            }
            _ => EvalError::Csv(e),
        })?;
        let row = record
            .iter()
            .enumerate()
            .map(|(i, cell)| {
                cell.parse::<u8>()
                    .ok()
                    .filter(|s| (1..=5).contains(s))
                    .ok_or_else(|| EvalError::InvalidScore {
                        row: r + 1,
                        column: labels[i].clone(),
                        value: cell.to_string(),
                    })
            })
            .collect::<Result<Vec<u8>, _>>()?;
        rows.push(row);
    }
    SurveyMatrix::from_rows(labels, &rows)
}
