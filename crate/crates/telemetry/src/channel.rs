use std::collections::BTreeSet;
use std::path::PathBuf;

use hydrostat_core::sensors::SensorKind;
use serde::{Deserialize, Serialize};

use crate::store::FIELD_COUNT;

/// One channel: up to eight named numeric fields behind a write key and
/// a read key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub id: u64,
    #[serde(default = "default_name")]
    pub name: String,
    /// `fields[i]` names `field{i+1}`. Names matching a sensor kind get
    /// range validation and feed the controller.
    #[serde(default = "default_fields")]
    pub fields: Vec<String>,
    pub write_key: String,
    pub read_key: String,
    /// Public channels serve reads without a key.
    #[serde(default = "default_public")]
    pub public: bool,
}

fn default_name() -> String {
    "greenhouse".into()
}

fn default_public() -> bool {
    true
}

pub fn default_fields() -> Vec<String> {
    [
        SensorKind::GreenhouseTemperature,
        SensorKind::Humidity,
        SensorKind::PhLevel,
        SensorKind::Light,
        SensorKind::WaterTemperature,
    ]
    .iter()
    .map(|k| k.name().to_string())
    .collect()
}

impl ChannelConfig {
    pub fn new(id: u64, write_key: impl Into<String>, read_key: impl Into<String>) -> Self {
        Self {
            id,
            name: default_name(),
            fields: default_fields(),
            write_key: write_key.into(),
            read_key: read_key.into(),
            public: true,
        }
    }

    pub fn field_kind(&self, index: usize) -> Option<SensorKind> {
        self.fields.get(index).and_then(|n| n.parse().ok())
    }

    pub fn field_for(&self, kind: SensorKind) -> Option<usize> {
        self.fields.iter().position(|n| n == kind.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TelemetryConfig {
    pub data_dir: PathBuf,
    /// Minimum spacing between consecutive entries of one channel.
    pub min_update_interval_seconds: u64,
    /// Readings older than this are not handed to the controller.
    pub stale_after_seconds: u64,
    /// Alerts kept per channel for the actuator view.
    pub alert_history: usize,
    pub channels: Vec<ChannelConfig>,
}

impl Default for TelemetryConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            min_update_interval_seconds: 15,
            stale_after_seconds: 120,
            alert_history: 50,
            channels: vec![ChannelConfig::new(1, "dev-write-key", "dev-read-key")],
        }
    }
}

impl TelemetryConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.channels.is_empty() {
            return Err("at least one channel is required".into());
        }
        let mut ids = BTreeSet::new();
        let mut keys = BTreeSet::new();
        for c in &self.channels {
            if c.id == 0 {
                return Err("channel id must be positive".into());
            }
            if !ids.insert(c.id) {
                return Err(format!("duplicate channel id {}", c.id));
            }
            if c.write_key.is_empty() || c.read_key.is_empty() {
                return Err(format!("channel {}: keys must be non-empty", c.id));
            }
            if c.write_key == c.read_key {
                return Err(format!(
                    "channel {}: write_key and read_key must differ",
                    c.id
                ));
            }
            for key in [&c.write_key, &c.read_key] {
                if !keys.insert(key.as_str()) {
                    return Err(format!("channel {}: key reused across channels", c.id));
                }
            }
            if c.fields.is_empty() || c.fields.len() > FIELD_COUNT {
                return Err(format!(
                    "channel {}: between 1 and {FIELD_COUNT} fields",
                    c.id
                ));
            }
            if c.fields.iter().any(|f| f.trim().is_empty()) {
                return Err(format!("channel {}: field names must be non-empty", c.id));
            }
        }
        Ok(())
    }
}
