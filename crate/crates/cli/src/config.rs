//! `--config` TOML file. Every key is optional; command-line flags take
//! precedence over the file, and the file over built-in defaults.

use std::path::Path;
use std::time::Duration;

use chrono::{DateTime, Utc};
use hydrostat_core::closed_loop::ClosedLoopConfig;
use hydrostat_core::control::{
    apply_config, ControllerConfig, InvalidReadingPolicy, SetpointUpdate,
};
use hydrostat_core::simulator::{default_start, SimConfig};
use hydrostat_core::ValidationError;
use hydrostat_telemetry::TelemetryConfig;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub controller: ControllerSection,
    pub scenario: ScenarioSection,
    pub telemetry: TelemetryConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub thresholds: SetpointUpdate,
    pub temp_hysteresis: Option<f64>,
    pub ph_hysteresis: Option<f64>,
    pub dwell_seconds: Option<u64>,
    pub tick_seconds: Option<u64>,
    pub invalid_reading_policy: Option<InvalidReadingPolicy>,
    pub ventilation_enabled: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub seed: Option<u64>,
    pub duration: Option<String>,
    pub start: Option<DateTime<Utc>>,
    pub warmup: Option<String>,
    pub water_margin: Option<f64>,
    pub sim: Option<SimConfig>,
}

fn invalid(section: &str, e: ValidationError) -> CliError {
    CliError::Usage(format!("invalid {section}.{}: {}", e.field, e.message))
}

pub fn parse_duration(what: &str, s: &str) -> Result<Duration, CliError> {
    humantime::parse_duration(s.trim())
        .map_err(|e| CliError::Usage(format!("invalid {what} `{s}`: {e}")))
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
    }

    pub fn controller(&self) -> Result<ControllerConfig, CliError> {
        let c = &self.controller;
        let base = ControllerConfig::default();
        let thresholds = apply_config(&base.thresholds, &c.thresholds)
            .map_err(|e| invalid("controller.thresholds", e))?;
        let config = ControllerConfig {
            thresholds,
            temp_hysteresis: c.temp_hysteresis.unwrap_or(base.temp_hysteresis),
            ph_hysteresis: c.ph_hysteresis.unwrap_or(base.ph_hysteresis),
            dwell_seconds: c.dwell_seconds.unwrap_or(base.dwell_seconds),
            tick_seconds: c.tick_seconds.unwrap_or(base.tick_seconds),
            invalid_reading_policy: c
                .invalid_reading_policy
                .unwrap_or(base.invalid_reading_policy),
            ventilation_enabled: c.ventilation_enabled.unwrap_or(base.ventilation_enabled),
        };
        config.validate().map_err(|e| invalid("controller", e))?;
        Ok(config)
    }

    /// Scenario with flag overrides applied.
    pub fn closed_loop(
        &self,
        seed: Option<u64>,
        duration: Option<&str>,
        default_duration: &str,
    ) -> Result<ClosedLoopConfig, CliError> {
        let s = &self.scenario;
        let mut sim = s.sim.clone().unwrap_or_default();
        if let Some(seed) = seed.or(s.seed) {
            sim.seed = seed;
        }
        sim.validate().map_err(|e| invalid("scenario.sim", e))?;
        let duration = parse_duration(
            "duration",
            duration
                .or(s.duration.as_deref())
                .unwrap_or(default_duration),
        )?;
        let warmup = parse_duration("scenario.warmup", s.warmup.as_deref().unwrap_or("1h"))?;
        let water_margin = s.water_margin.unwrap_or(2.0);
        if !(water_margin.is_finite() && water_margin >= 0.0) {
            return Err(CliError::Usage(
                "invalid scenario.water_margin: must be ≥ 0".into(),
            ));
        }
        Ok(ClosedLoopConfig {
            sim,
            controller: self.controller()?,
            duration_seconds: duration.as_secs(),
            start: s.start.unwrap_or_else(default_start),
            warmup_seconds: warmup.as_secs(),
            water_margin,
        })
    }

    pub fn telemetry(&self) -> Result<TelemetryConfig, CliError> {
        self.telemetry
            .validate()
            .map_err(|e| CliError::Usage(format!("invalid telemetry: {e}")))?;
        Ok(self.telemetry.clone())
    }
}
