//! Logged sensor fixtures: `date,time,kind,value` CSV with `MM-DD-YYYY`
//! dates and `HH:MM` 24-hour times. Lines starting with `#` are comments.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, Utc};
use thiserror::Error;

use crate::sensors::{validate_reading, SensorKind, SensorReading};

pub const FIXTURE_HEADER: [&str; 4] = ["date", "time", "kind", "value"];

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("expected header `date,time,kind,value`, found `{0}`")]
    BadHeader(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
}

pub fn parse_timestamp(date: &str, time: &str) -> Option<DateTime<Utc>> {
    let joined = format!("{} {}", date.trim(), time.trim());
    NaiveDateTime::parse_from_str(&joined, "%m-%d-%Y %H:%M")
        .ok()
        .map(|naive| naive.and_utc())
}

/// Parses and validates a fixture, returning readings in timestamp order
/// (rows sharing a timestamp keep their file order).
pub fn parse_fixture<R: Read>(reader: R) -> Result<Vec<SensorReading>, FixtureError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(FIXTURE_HEADER) {
        return Err(FixtureError::BadHeader(
            header.iter().collect::<Vec<_>>().join(","),
        ));
    }
    let mut readings = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row_err = |message: String| FixtureError::Row { line, message };
        let timestamp = parse_timestamp(&record[0], &record[1])
            .ok_or_else(|| row_err(format!("bad date/time `{} {}`", &record[0], &record[1])))?;
        let kind: SensorKind = record[2].parse().map_err(|e| row_err(format!("{e}")))?;
        let value: f64 = record[3]
            .parse()
            .map_err(|_| row_err(format!("bad value `{}`", &record[3])))?;
        let reading =
            validate_reading(kind, value, timestamp).map_err(|e| row_err(e.to_string()))?;
        readings.push(reading);
    }
    readings.sort_by_key(|r| r.timestamp);
    Ok(readings)
}

pub fn read_fixture(path: impl AsRef<Path>) -> Result<Vec<SensorReading>, FixtureError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| FixtureError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_fixture(file)
}

/// Writes readings at minute resolution.
pub fn write_fixture<W: Write>(writer: W, readings: &[SensorReading]) -> Result<(), FixtureError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(FIXTURE_HEADER)?;
    for r in readings {
        wtr.write_record([
            r.timestamp.format("%m-%d-%Y").to_string(),
            r.timestamp.format("%H:%M").to_string(),
            r.kind.name().to_string(),
            r.value.to_string(),
        ])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}
