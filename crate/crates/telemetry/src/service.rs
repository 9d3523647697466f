use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use chrono::{DateTime, Duration, SecondsFormat, SubsecRound, Utc};
use hydrostat_core::clock::Clock;
use hydrostat_core::closed_loop::{ControllerAccess, SinkError, TelemetrySink};
use hydrostat_core::control::{
    Actuator, ActuatorState, Alert, ControlDecision, ControlError, Controller, ControllerConfig,
    ReadingSet, SetpointUpdate, Switch, Thresholds,
};
use hydrostat_core::sensors::{validate_reading, SensorKind};
use hydrostat_core::ValidationError;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::channel::{ChannelConfig, TelemetryConfig};
use crate::store::{ChannelLog, Entry, FieldValues, StoreError, FIELD_COUNT};

pub const CSV_HEADER: [&str; 10] = [
    "created_at",
    "entry_id",
    "field1",
    "field2",
    "field3",
    "field4",
    "field5",
    "field6",
    "field7",
    "field8",
];

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("unknown channel {0}")]
    UnknownChannel(u64),
    #[error("invalid API key")]
    Unauthorized,
    #[error("rate limited: retry in {retry_after}s")]
    RateLimited { retry_after: i64 },
    #[error("{}", .0.message)]
    Invalid(ValidationError),
    #[error("unknown actuator `{0}`")]
    UnknownActuator(String),
    #[error("{0}")]
    Conflict(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Store(StoreError),
}

impl TelemetryError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        TelemetryError::Invalid(ValidationError::new(field, message))
    }
}

impl From<StoreError> for TelemetryError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::RateLimited { retry_after, .. } => {
                TelemetryError::RateLimited { retry_after }
            }
            StoreError::OutOfOrder { at, latest } => TelemetryError::invalid(
                "created_at",
                format!(
                    "created_at {} precedes the latest entry ({})",
                    rfc3339(at),
                    rfc3339(latest)
                ),
            ),
            other => TelemetryError::Store(other),
        }
    }
}

pub fn rfc3339(at: DateTime<Utc>) -> String {
    at.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn parse_rfc3339(field: &str, s: &str) -> Result<DateTime<Utc>, TelemetryError> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|_| {
            TelemetryError::invalid(field, format!("{field} `{s}` is not an RFC 3339 timestamp"))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedFilter {
    All,
    Last(usize),
    Range {
        start: Option<DateTime<Utc>>,
        end: Option<DateTime<Utc>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertRecord {
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub alert: Alert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Auto,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorView {
    pub state: Switch,
    pub mode: Mode,
    /// Forced value while in manual mode; the state follows it once dwell allows.
    pub override_value: Option<Switch>,
    pub last_transition: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorsView {
    pub actuators: BTreeMap<String, ActuatorView>,
    pub last_tick: Option<DateTime<Utc>>,
    pub recent_alerts: Vec<AlertRecord>,
}

/// A channel's controller and its recent alerts, shared between the HTTP
/// handlers and the tick loop.
pub struct ControlPlane {
    controller: Mutex<Controller>,
    alerts: Mutex<VecDeque<AlertRecord>>,
    history: usize,
}

impl ControlPlane {
    pub fn new(config: ControllerConfig, history: usize) -> Result<Self, ValidationError> {
        Ok(Self {
            controller: Mutex::new(Controller::new(config)?),
            alerts: Mutex::new(VecDeque::with_capacity(history)),
            history,
        })
    }

    pub fn thresholds(&self) -> Thresholds {
        *self.controller.lock().thresholds()
    }

    pub fn set_thresholds(&self, update: &SetpointUpdate) -> Result<Thresholds, ValidationError> {
        self.controller.lock().set_thresholds(update)
    }

    pub fn set_override(
        &self,
        actuator: Actuator,
        value: Option<Switch>,
    ) -> Result<(), ControlError> {
        self.controller.lock().set_override(actuator, value)
    }

    pub fn tick(
        &self,
        readings: &ReadingSet,
        now: DateTime<Utc>,
    ) -> Result<(ActuatorState, ControlDecision), ControlError> {
        let (state, decision) = self.controller.lock().tick(readings, now)?;
        let mut alerts = self.alerts.lock();
        for &alert in &decision.alerts {
            if alerts.len() == self.history {
                alerts.pop_front();
            }
            alerts.push_back(AlertRecord { at: now, alert });
        }
        Ok((state, decision))
    }

    pub fn view(&self) -> ActuatorsView {
        let (state, overrides, last_tick) = {
            let c = self.controller.lock();
            (*c.state(), *c.overrides(), c.last_tick())
        };
        let actuators = Actuator::ALL
            .into_iter()
            .map(|a| {
                let view = ActuatorView {
                    state: state[a].state,
                    mode: if overrides[a].is_some() {
                        Mode::Manual
                    } else {
                        Mode::Auto
                    },
                    override_value: overrides[a],
                    last_transition: state[a].last_transition,
                };
                (a.name().to_string(), view)
            })
            .collect();
        ActuatorsView {
            actuators,
            last_tick,
            recent_alerts: self.alerts.lock().iter().cloned().collect(),
        }
    }
}

impl ControllerAccess for &ControlPlane {
    fn tick(
        &mut self,
        readings: &ReadingSet,
        now: DateTime<Utc>,
    ) -> Result<(ActuatorState, ControlDecision), ControlError> {
        ControlPlane::tick(self, readings, now)
    }

    fn water_band(&self) -> (f64, f64) {
        let t = self.thresholds();
        (t.water_low, t.water_high)
    }
}

pub struct Channel {
    pub config: ChannelConfig,
    pub log: ChannelLog,
    pub control: ControlPlane,
}

impl Channel {
    fn check_write(&self, key: &str) -> Result<(), TelemetryError> {
        if key == self.config.write_key {
            Ok(())
        } else {
            Err(TelemetryError::Unauthorized)
        }
    }

    fn check_read(&self, key: Option<&str>) -> Result<(), TelemetryError> {
        if self.config.public
            || key.is_some_and(|k| k == self.config.read_key || k == self.config.write_key)
        {
            Ok(())
        } else {
            Err(TelemetryError::Unauthorized)
        }
    }

    /// Field indices whose value lies outside the sensor's standard range.
    pub fn invalid_fields(&self, entry: &Entry) -> Vec<usize> {
        (0..FIELD_COUNT)
            .filter(|&i| {
                let (Some(kind), Some(v)) = (self.config.field_kind(i), entry.fields[i].as_deref())
                else {
                    return false;
                };
                v.parse::<f64>().is_ok_and(|v| !kind.contains(v))
            })
            .collect()
    }

    pub fn metadata(&self) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), self.config.id.into());
        m.insert("name".into(), self.config.name.clone().into());
        for (i, name) in self.config.fields.iter().enumerate() {
            m.insert(format!("field{}", i + 1), name.clone().into());
        }
        m.insert(
            "last_entry_id".into(),
            self.log.latest().map(|e| e.entry_id).into(),
        );
        Value::Object(m)
    }

    pub fn entry_json(&self, entry: &Entry) -> Value {
        let mut m = Map::new();
        m.insert("created_at".into(), rfc3339(entry.created_at).into());
        m.insert("entry_id".into(), entry.entry_id.into());
        for i in 0..self.config.fields.len() {
            m.insert(format!("field{}", i + 1), entry.fields[i].clone().into());
        }
        let invalid: Vec<Value> = self
            .invalid_fields(entry)
            .into_iter()
            .map(|i| format!("field{}", i + 1).into())
            .collect();
        m.insert("invalid_fields".into(), invalid.into());
        Value::Object(m)
    }
}

/// All channels of one server, backed by one log file each.
pub struct TelemetryService {
    channels: BTreeMap<u64, Arc<Channel>>,
    clock: Arc<dyn Clock>,
    min_interval: Duration,
    stale_after: Duration,
}

impl TelemetryService {
    pub fn open(
        config: &TelemetryConfig,
        controller: &ControllerConfig,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, TelemetryError> {
        config.validate().map_err(TelemetryError::Config)?;
        std::fs::create_dir_all(&config.data_dir).map_err(|source| {
            TelemetryError::Store(StoreError::Io {
                path: config.data_dir.clone(),
                source,
            })
        })?;
        let mut channels = BTreeMap::new();
        for c in &config.channels {
            let log = ChannelLog::open(config.data_dir.join(format!("channel-{}.log", c.id)))?;
            let control = ControlPlane::new(controller.clone(), config.alert_history)
                .map_err(TelemetryError::Invalid)?;
            channels.insert(
                c.id,
                Arc::new(Channel {
                    config: c.clone(),
                    log,
                    control,
                }),
            );
        }
        Ok(Self {
            channels,
            clock,
            min_interval: Duration::seconds(config.min_update_interval_seconds as i64),
            stale_after: Duration::seconds(config.stale_after_seconds as i64),
        })
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn channel(&self, id: u64) -> Result<&Arc<Channel>, TelemetryError> {
        self.channels
            .get(&id)
            .ok_or(TelemetryError::UnknownChannel(id))
    }

    pub fn channel_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.channels.keys().copied()
    }

    pub fn channel_for_write_key(&self, key: &str) -> Result<u64, TelemetryError> {
        self.channels
            .values()
            .find(|c| c.config.write_key == key)
            .map(|c| c.config.id)
            .ok_or(TelemetryError::Unauthorized)
    }

    /// Persists one update and returns its entry id. `created_at` defaults
    /// to the server clock; both are kept at whole seconds.
    pub fn ingest_update(
        &self,
        channel_id: u64,
        api_key: &str,
        fields: FieldValues,
        created_at: Option<DateTime<Utc>>,
    ) -> Result<u64, TelemetryError> {
        let channel = self.channel(channel_id)?;
        channel.check_write(api_key)?;
        if fields.iter().all(Option::is_none) {
            return Err(TelemetryError::invalid(
                "fields",
                "no field values supplied",
            ));
        }
        for (i, value) in fields.iter().enumerate() {
            let Some(v) = value else { continue };
            let name = format!("field{}", i + 1);
            if i >= channel.config.fields.len() {
                return Err(TelemetryError::invalid(
                    &name,
                    format!("{name} is not enabled on this channel"),
                ));
            }
            if !v.parse::<f64>().is_ok_and(f64::is_finite) {
                return Err(TelemetryError::invalid(
                    &name,
                    format!("{name} value `{v}` is not a finite number"),
                ));
            }
        }
        let at = created_at
            .unwrap_or_else(|| self.clock.now())
            .trunc_subsecs(0);
        let entry = channel.log.append(fields, at, self.min_interval)?;
        Ok(entry.entry_id)
    }

    pub fn query_feeds(
        &self,
        channel_id: u64,
        api_key: Option<&str>,
        filter: FeedFilter,
    ) -> Result<Vec<Entry>, TelemetryError> {
        let channel = self.channel(channel_id)?;
        channel.check_read(api_key)?;
        Ok(match filter {
            FeedFilter::All => channel.log.all(),
            FeedFilter::Last(n) => channel.log.last_n(n),
            FeedFilter::Range { start, end } => channel.log.range(start, end),
        })
    }

    pub fn feeds_json(
        &self,
        channel_id: u64,
        api_key: Option<&str>,
        filter: FeedFilter,
    ) -> Result<Value, TelemetryError> {
        let entries = self.query_feeds(channel_id, api_key, filter)?;
        let channel = self.channel(channel_id)?;
        Ok(serde_json::json!({
            "channel": channel.metadata(),
            "feeds": entries.iter().map(|e| channel.entry_json(e)).collect::<Vec<_>>(),
        }))
    }

    pub fn export_csv(
        &self,
        channel_id: u64,
        api_key: Option<&str>,
    ) -> Result<String, TelemetryError> {
        let entries = self.query_feeds(channel_id, api_key, FeedFilter::All)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let write_err = |e: csv::Error| TelemetryError::Config(format!("csv export failed: {e}"));
        w.write_record(CSV_HEADER).map_err(write_err)?;
        for e in &entries {
            let mut row = vec![rfc3339(e.created_at), e.entry_id.to_string()];
            row.extend(e.fields.iter().map(|f| f.clone().unwrap_or_default()));
            w.write_record(&row).map_err(write_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| TelemetryError::Config(format!("csv export failed: {}", e.error())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Re-ingests an export, echoing its timestamps. Returns the number of
    /// entries written; rows before a failing row stay committed.
    pub fn import_csv(
        &self,
        channel_id: u64,
        api_key: &str,
        document: &str,
    ) -> Result<usize, TelemetryError> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(document.as_bytes());
        let header = rdr
            .headers()
            .map_err(|e| TelemetryError::invalid("csv", e.to_string()))?
            .clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(TelemetryError::invalid(
                "csv",
                format!("expected header `{}`", CSV_HEADER.join(",")),
            ));
        }
        let mut count = 0;
        for record in rdr.records() {
            let record = record.map_err(|e| TelemetryError::invalid("csv", e.to_string()))?;
            let at = parse_rfc3339("created_at", &record[0])?;
            let mut fields = FieldValues::default();
            for (slot, cell) in fields.iter_mut().zip(record.iter().skip(2)) {
                if !cell.is_empty() {
                    *slot = Some(cell.to_string());
                }
            }
            self.ingest_update(channel_id, api_key, fields, Some(at))?;
            count += 1;
        }
        Ok(count)
    }

    pub fn thresholds(
        &self,
        channel_id: u64,
        api_key: Option<&str>,
    ) -> Result<Thresholds, TelemetryError> {
        let channel = self.channel(channel_id)?;
        channel.check_read(api_key)?;
        Ok(channel.control.thresholds())
    }

    pub fn set_thresholds(
        &self,
        channel_id: u64,
        api_key: &str,
        update: &SetpointUpdate,
    ) -> Result<Thresholds, TelemetryError> {
        let channel = self.channel(channel_id)?;
        channel.check_write(api_key)?;
        channel
            .control
            .set_thresholds(update)
            .map_err(TelemetryError::Invalid)
    }

    pub fn actuators(
        &self,
        channel_id: u64,
        api_key: Option<&str>,
    ) -> Result<ActuatorsView, TelemetryError> {
        let channel = self.channel(channel_id)?;
        channel.check_read(api_key)?;
        Ok(channel.control.view())
    }

    /// `mode` is `on`, `off` or `auto`.
    pub fn set_override(
        &self,
        channel_id: u64,
        api_key: &str,
        actuator: &str,
        mode: &str,
    ) -> Result<ActuatorsView, TelemetryError> {
        let channel = self.channel(channel_id)?;
        channel.check_write(api_key)?;
        let actuator: Actuator = actuator
            .parse()
            .map_err(|_| TelemetryError::UnknownActuator(actuator.to_string()))?;
        let value = match mode.trim() {
            "on" => Some(Switch::On),
            "off" => Some(Switch::Off),
            "auto" => None,
            other => {
                return Err(TelemetryError::invalid(
                    "override",
                    format!("override must be on, off or auto, got `{other}`"),
                ))
            }
        };
        channel
            .control
            .set_override(actuator, value)
            .map_err(|e| match e {
                ControlError::VentilationDisabled => TelemetryError::Conflict(e.to_string()),
                other => TelemetryError::Conflict(other.to_string()),
            })?;
        Ok(channel.control.view())
    }

    /// Newest value per sensor field no older than the staleness window.
    pub fn latest_readings(
        &self,
        channel_id: u64,
        now: DateTime<Utc>,
    ) -> Result<ReadingSet, TelemetryError> {
        let channel = self.channel(channel_id)?;
        let mut set = ReadingSet::new();
        for i in 0..channel.config.fields.len() {
            let Some(kind) = channel.config.field_kind(i) else {
                continue;
            };
            let Some(entry) = channel.log.latest_with_field(i, now) else {
                continue;
            };
            if now - entry.created_at > self.stale_after {
                continue;
            }
            let parsed = entry.fields[i]
                .as_deref()
                .and_then(|v| v.parse::<f64>().ok());
            if let Some(reading) =
                parsed.and_then(|v| validate_reading(kind, v, entry.created_at).ok())
            {
                set.insert(reading);
            }
        }
        Ok(set)
    }

    /// One controller tick on the channel's latest readings.
    pub fn tick_channel(
        &self,
        channel_id: u64,
        now: DateTime<Utc>,
    ) -> Result<(ActuatorState, ControlDecision), TelemetryError> {
        let readings = self.latest_readings(channel_id, now)?;
        self.channel(channel_id)?
            .control
            .tick(&readings, now)
            .map_err(|e| TelemetryError::Conflict(e.to_string()))
    }
}

/// Publishes closed-loop readings into a channel through the ingest path.
pub struct ChannelSink {
    service: Arc<TelemetryService>,
    channel_id: u64,
    fields: Vec<(SensorKind, usize)>,
    write_key: String,
}

impl ChannelSink {
    pub fn new(service: Arc<TelemetryService>, channel_id: u64) -> Result<Self, TelemetryError> {
        let channel = service.channel(channel_id)?;
        let fields = SensorKind::ALL
            .into_iter()
            .filter_map(|k| channel.config.field_for(k).map(|i| (k, i)))
            .collect();
        let write_key = channel.config.write_key.clone();
        Ok(Self {
            service,
            channel_id,
            fields,
            write_key,
        })
    }
}

impl TelemetrySink for ChannelSink {
    fn publish(
        &mut self,
        at: DateTime<Utc>,
        readings: &ReadingSet,
        _: &ControlDecision,
    ) -> Result<(), SinkError> {
        let mut values = FieldValues::default();
        for &(kind, i) in &self.fields {
            if let Some(r) = readings.get(kind) {
                values[i] = Some(r.value.to_string());
            }
        }
        if values.iter().all(Option::is_none) {
            return Ok(());
        }
        self.service
            .ingest_update(self.channel_id, &self.write_key, values, Some(at))
            .map(|_| ())
            .map_err(Into::into)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use hydrostat_core::clock::ManualClock;

    fn start() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2022, 5, 23, 16, 19, 0).unwrap()
    }

    fn service(dir: &std::path::Path, interval: u64) -> (TelemetryService, Arc<ManualClock>) {
        let clock = Arc::new(ManualClock::new(start()));
        let cfg = TelemetryConfig {
            data_dir: dir.to_path_buf(),
            min_update_interval_seconds: interval,
            ..TelemetryConfig::default()
        };
        let svc =
            TelemetryService::open(&cfg, &ControllerConfig::default(), clock.clone()).unwrap();
        (svc, clock)
    }

    fn field(i: usize, v: &str) -> FieldValues {
        let mut f = FieldValues::default();
        f[i] = Some(v.to_string());
        f
    }

    const W: &str = "dev-write-key";

    #[test]
    fn round_trip_and_auth() {
        let dir = tempfile::tempdir().unwrap();
        let (svc, _) = service(dir.path(), 15);
        assert!(matches!(
            svc.ingest_update(1, "nope", field(0, "26"), None),
            Err(TelemetryError::Unauthorized)
        ));
        assert_eq!(svc.ingest_update(1, W, field(0, "26"), None).unwrap(), 1);
        let feeds = svc.query_feeds(1, None, FeedFilter::Last(1)).unwrap();
        assert_eq!(feeds[0].fields[0].as_deref(), Some("26"));
        assert!(matches!(
            svc.ingest_update(2, W, field(0, "1"), None),
            Err(TelemetryError::UnknownChannel(2))
        ));
    }

    #[test]
    fn throttles_within_interval() {
        let dir = tempfile::tempdir().unwrap();
        let (svc, clock) = service(dir.path(), 15);
        svc.ingest_update(1, W, field(0, "26"), None).unwrap();
        clock.advance(Duration::seconds(5));
        assert!(matches!(
            svc.ingest_update(1, W, field(0, "27"), None),
            Err(TelemetryError::RateLimited { retry_after: 10 })
        ));
        clock.advance(Duration::seconds(10));
        assert_eq!(svc.ingest_update(1, W, field(0, "27"), None).unwrap(), 2);
    }

    #[test]
    fn rejects_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        let (svc, _) = service(dir.path(), 0);
        let err = |f| match svc.ingest_update(1, W, f, None) {
            Err(TelemetryError::Invalid(v)) => v.field,
            other => panic!("{other:?}"),
        };
        assert_eq!(err(FieldValues::default()), "fields");
        assert_eq!(err(field(2, "abc")), "field3");
        assert_eq!(err(field(2, "NaN")), "field3");
        assert_eq!(err(field(6, "1")), "field7");
        assert_eq!(svc.channel(1).unwrap().log.len(), 0);
    }

    #[test]
    fn invalid_fields_are_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let (svc, _) = service(dir.path(), 0);
        svc.ingest_update(1, W, field(2, "-3.89"), None).unwrap();
        let json = svc.feeds_json(1, None, FeedFilter::All).unwrap();
        assert_eq!(json["feeds"][0]["field3"], "-3.89");
        assert_eq!(json["feeds"][0]["invalid_fields"][0], "field3");
        assert_eq!(json["channel"]["field3"], "PhLevel");
    }

    #[test]
    fn private_channel_needs_read_key() {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(ManualClock::new(start()));
        let mut cfg = TelemetryConfig {
            data_dir: dir.path().to_path_buf(),
            ..TelemetryConfig::default()
        };
        cfg.channels[0].public = false;
        let svc = TelemetryService::open(&cfg, &ControllerConfig::default(), clock).unwrap();
        assert!(matches!(
            svc.query_feeds(1, None, FeedFilter::All),
            Err(TelemetryError::Unauthorized)
        ));
        assert!(svc
            .query_feeds(1, Some("dev-read-key"), FeedFilter::All)
            .is_ok());
    }

    #[test]
    fn export_shape() {
        let dir = tempfile::tempdir().unwrap();
        let (svc, _) = service(dir.path(), 0);
        svc.ingest_update(1, W, field(0, "26"), None).unwrap();
        let doc = svc.export_csv(1, None).unwrap();
        assert_eq!(
            doc,
            "created_at,entry_id,field1,field2,field3,field4,field5,field6,field7,field8\n\
             2022-05-23T16:19:00Z,1,26,,,,,,,\n"
        );
    }

    #[test]
    fn thresholds_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let (svc, clock) = service(dir.path(), 0);
        assert_eq!(svc.thresholds(1, None).unwrap(), Thresholds::default());
        let bad = SetpointUpdate {
            ph_low: Some(8.0),
            ph_high: Some(6.5),
            ..SetpointUpdate::default()
        };
        assert!(matches!(
            svc.set_thresholds(1, W, &bad),
            Err(TelemetryError::Invalid(_))
        ));
        assert_eq!(svc.thresholds(1, None).unwrap(), Thresholds::default());

        let lower = SetpointUpdate {
            water_high: Some(30.0),
            ..SetpointUpdate::default()
        };
        assert_eq!(svc.set_thresholds(1, W, &lower).unwrap().water_high, 30.0);
        svc.ingest_update(1, W, field(4, "30.5"), None).unwrap();
        let (state, _) = svc.tick_channel(1, clock.now()).unwrap();
        assert_eq!(state.cooling_pump.state, Switch::On);

        assert!(matches!(
            svc.set_override(1, W, "heater", "on"),
            Err(TelemetryError::UnknownActuator(_))
        ));
        assert!(matches!(
            svc.set_override(1, W, "ventilation", "on"),
            Err(TelemetryError::Conflict(_))
        ));
        assert!(matches!(
            svc.set_override(1, W, "dosing_pump", "maybe"),
            Err(TelemetryError::Invalid(_))
        ));
        let view = svc.set_override(1, W, "dosing_pump", "on").unwrap();
        assert_eq!(view.actuators["dosing_pump"].mode, Mode::Manual);
        let view = svc.set_override(1, W, "dosing_pump", "auto").unwrap();
        assert_eq!(view.actuators["dosing_pump"].mode, Mode::Auto);
    }

    #[test]
    fn stale_readings_are_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let (svc, clock) = service(dir.path(), 0);
        svc.ingest_update(1, W, field(4, "29"), None).unwrap();
        assert_eq!(svc.latest_readings(1, clock.now()).unwrap().len(), 1);
        clock.advance(Duration::seconds(121));
        assert!(svc.latest_readings(1, clock.now()).unwrap().is_empty());
    }
}
