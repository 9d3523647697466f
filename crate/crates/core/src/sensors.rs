//! Sensor kinds, standard-range validation and pH probe calibration.
//!
//! Every reading carries a validity flag computed against the physical
//! range the sensor can report. A value outside that range points at a
//! sensor or calibration fault rather than at the environment.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("non-finite value {value} for {kind}")]
    NonFinite { kind: SensorKind, value: f64 },
    #[error("unknown sensor kind `{0}`")]
    UnknownKind(String),
    #[error("degenerate calibration: both points share raw value {raw}")]
    DegenerateCalibration { raw: f64 },
    #[error("calibration slope must be finite and non-zero (got {0})")]
    InvalidSlope(f64),
    #[error("calibration reference values must be finite")]
    NonFiniteCalibration,
}

/// The five monitored quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SensorKind {
    GreenhouseTemperature,
    Humidity,
    WaterTemperature,
    PhLevel,
    Light,
}

impl SensorKind {
    pub const ALL: [SensorKind; 5] = [
        SensorKind::GreenhouseTemperature,
        SensorKind::Humidity,
        SensorKind::WaterTemperature,
        SensorKind::PhLevel,
        SensorKind::Light,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SensorKind::GreenhouseTemperature => "GreenhouseTemperature",
            SensorKind::Humidity => "Humidity",
            SensorKind::WaterTemperature => "WaterTemperature",
            SensorKind::PhLevel => "PhLevel",
            SensorKind::Light => "Light",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            SensorKind::GreenhouseTemperature | SensorKind::WaterTemperature => "°C",
            SensorKind::Humidity => "%RH",
            SensorKind::PhLevel => "pH",
            SensorKind::Light => "counts",
        }
    }

    /// Inclusive reportable range of the sensor fitted for this kind.
    pub fn standard_range(self) -> (f64, f64) {
        match self {
            // DHT11 temperature channel
            SensorKind::GreenhouseTemperature => (0.0, 50.0),
            // DHT11 humidity channel
            SensorKind::Humidity => (20.0, 90.0),
            // DS18B20 probe
            SensorKind::WaterTemperature => (-55.0, 125.0),
            // PH4502C
            SensorKind::PhLevel => (0.0, 14.0),
            // LDR module on a 10-bit ADC
            SensorKind::Light => (0.0, 1023.0),
        }
    }

    pub fn contains(self, value: f64) -> bool {
        let (low, high) = self.standard_range();
        low <= value && value <= high
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SensorKind {
    type Err = SensorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SensorKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| SensorError::UnknownKind(s.to_string()))
    }
}

pub fn standard_range(kind: SensorKind) -> (f64, f64) {
    kind.standard_range()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Validity {
    Valid,
    OutOfRange,
}

impl Validity {
    pub fn is_valid(self) -> bool {
        self == Validity::Valid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub kind: SensorKind,
    pub value: f64,
    pub timestamp: DateTime<Utc>,
    pub validity: Validity,
}

impl SensorReading {
    pub fn is_valid(&self) -> bool {
        self.validity.is_valid()
    }
}

/// Builds a reading and flags it against the kind's standard range.
/// The value itself is never altered.
pub fn validate_reading(
    kind: SensorKind,
    value: f64,
    timestamp: DateTime<Utc>,
) -> Result<SensorReading, SensorError> {
    if !value.is_finite() {
        return Err(SensorError::NonFinite { kind, value });
    }
    let validity = if kind.contains(value) {
        Validity::Valid
    } else {
        Validity::OutOfRange
    };
    Ok(SensorReading {
        kind,
        value,
        timestamp,
        validity,
    })
}

/// One buffer-solution measurement: the probe's raw output and the known pH.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub raw: f64,
    pub ph: f64,
}

impl CalibrationPoint {
    pub fn new(raw: f64, ph: f64) -> Self {
        Self { raw, ph }
    }
}

/// Affine map from raw probe output to pH units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve")]
pub struct CalibrationCurve {
    slope: f64,
    offset: f64,
}

#[derive(Deserialize)]
struct RawCurve {
    slope: f64,
    offset: f64,
}

impl TryFrom<RawCurve> for CalibrationCurve {
    type Error = SensorError;

    fn try_from(raw: RawCurve) -> Result<Self, Self::Error> {
        CalibrationCurve::new(raw.slope, raw.offset)
    }
}

impl Default for CalibrationCurve {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl CalibrationCurve {
    pub const IDENTITY: CalibrationCurve = CalibrationCurve {
        slope: 1.0,
        offset: 0.0,
    };

    pub fn new(slope: f64, offset: f64) -> Result<Self, SensorError> {
        if !slope.is_finite() || slope == 0.0 {
            return Err(SensorError::InvalidSlope(slope));
        }
        if !offset.is_finite() {
            return Err(SensorError::NonFiniteCalibration);
        }
        Ok(Self { slope, offset })
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn apply(&self, raw: f64) -> f64 {
        self.slope * raw + self.offset
    }
}

/// Two-point buffer calibration.
pub fn fit_ph_calibration(
    a: CalibrationPoint,
    b: CalibrationPoint,
) -> Result<CalibrationCurve, SensorError> {
    if ![a.raw, a.ph, b.raw, b.ph].iter().all(|v| v.is_finite()) {
        return Err(SensorError::NonFiniteCalibration);
    }
    if a.raw == b.raw {
        return Err(SensorError::DegenerateCalibration { raw: a.raw });
    }
    let slope = (b.ph - a.ph) / (b.raw - a.raw);
    CalibrationCurve::new(slope, a.ph - slope * a.raw)
}

pub fn apply_calibration(curve: &CalibrationCurve, raw: f64) -> f64 {
    curve.apply(raw)
}
