//! Threshold controller for the cooling and pH-dosing pumps.
//!
//! `evaluate` is the pure decision rule: it compares the latest validated
//! readings against the ideal bands and derives a target state per
//! actuator. `Controller::tick` wraps it with manual overrides, dwell
//! enforcement and transition bookkeeping.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensors::{SensorKind, SensorReading};

/// Field-level validation failure for setpoints and controller settings.
#[derive(Debug, Error, Clone, PartialEq, Serialize)]
#[error("{message}")]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("clock moved backwards: previous tick at {previous}, now {now}")]
    ClockRegression {
        previous: DateTime<Utc>,
        now: DateTime<Utc>,
    },
    #[error("ventilation is disabled in the controller configuration")]
    VentilationDisabled,
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Ideal operating bands. Temperatures in °C, humidity in %RH.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub ph_low: f64,
    pub ph_high: f64,
    pub water_low: f64,
    pub water_high: f64,
    pub air_low: f64,
    pub air_high: f64,
    pub humidity_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            ph_low: 6.5,
            ph_high: 8.0,
            water_low: 28.0,
            water_high: 31.0,
            air_low: 26.0,
            air_high: 29.0,
            humidity_min: 70.0,
        }
    }
}

impl Thresholds {
    fn fields(&self) -> [(&'static str, f64); 7] {
        [
            ("ph_low", self.ph_low),
            ("ph_high", self.ph_high),
            ("water_low", self.water_low),
            ("water_high", self.water_high),
            ("air_low", self.air_low),
            ("air_high", self.air_high),
            ("humidity_min", self.humidity_min),
        ]
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        for (name, value) in self.fields() {
            if !value.is_finite() {
                return Err(ValidationError::new(name, format!("{name} must be finite")));
            }
        }
        let bands = [
            ("ph_low", "ph_high", self.ph_low, self.ph_high),
            ("water_low", "water_high", self.water_low, self.water_high),
            ("air_low", "air_high", self.air_low, self.air_high),
        ];
        for (low_name, high_name, low, high) in bands {
            if low >= high {
                return Err(ValidationError::new(
                    low_name,
                    format!("{low_name} ≥ {high_name}"),
                ));
            }
        }
        if !(self.humidity_min > 0.0 && self.humidity_min < 100.0) {
            return Err(ValidationError::new(
                "humidity_min",
                "humidity_min outside (0, 100)",
            ));
        }
        Ok(())
    }

    /// Ideal band for a parameter; humidity only has a floor.
    pub fn band(&self, kind: SensorKind) -> Option<(f64, f64)> {
        match kind {
            SensorKind::PhLevel => Some((self.ph_low, self.ph_high)),
            SensorKind::WaterTemperature => Some((self.water_low, self.water_high)),
            SensorKind::GreenhouseTemperature => Some((self.air_low, self.air_high)),
            SensorKind::Humidity => Some((self.humidity_min, f64::INFINITY)),
            SensorKind::Light => None,
        }
    }

    pub fn in_ideal_range(&self, kind: SensorKind, value: f64) -> Option<bool> {
        self.band(kind).map(|(lo, hi)| lo <= value && value <= hi)
    }
}

/// Partial setpoint payload; absent keys keep their active value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetpointUpdate {
    pub ph_low: Option<f64>,
    pub ph_high: Option<f64>,
    pub water_low: Option<f64>,
    pub water_high: Option<f64>,
    pub air_low: Option<f64>,
    pub air_high: Option<f64>,
    pub humidity_min: Option<f64>,
}

impl From<Thresholds> for SetpointUpdate {
    fn from(t: Thresholds) -> Self {
        Self {
            ph_low: Some(t.ph_low),
            ph_high: Some(t.ph_high),
            water_low: Some(t.water_low),
            water_high: Some(t.water_high),
            air_low: Some(t.air_low),
            air_high: Some(t.air_high),
            humidity_min: Some(t.humidity_min),
        }
    }
}

/// Merges `update` over `active` and validates the result. On error the
/// caller keeps `active` as is.
pub fn apply_config(
    active: &Thresholds,
    update: &SetpointUpdate,
) -> Result<Thresholds, ValidationError> {
    let merged = Thresholds {
        ph_low: update.ph_low.unwrap_or(active.ph_low),
        ph_high: update.ph_high.unwrap_or(active.ph_high),
        water_low: update.water_low.unwrap_or(active.water_low),
        water_high: update.water_high.unwrap_or(active.water_high),
        air_low: update.air_low.unwrap_or(active.air_low),
        air_high: update.air_high.unwrap_or(active.air_high),
        humidity_min: update.humidity_min.unwrap_or(active.humidity_min),
    };
    merged.validate()?;
    Ok(merged)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    #[default]
    Off,
}

impl Switch {
    pub fn is_on(self) -> bool {
        self == Switch::On
    }
}

impl fmt::Display for Switch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Switch::On => "on",
            Switch::Off => "off",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actuator {
    CoolingPump,
    DosingPump,
    Ventilation,
}

impl Actuator {
    pub const ALL: [Actuator; 3] = [
        Actuator::CoolingPump,
        Actuator::DosingPump,
        Actuator::Ventilation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Actuator::CoolingPump => "cooling_pump",
            Actuator::DosingPump => "dosing_pump",
            Actuator::Ventilation => "ventilation",
        }
    }
}

impl fmt::Display for Actuator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Actuator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Actuator::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown actuator `{s}`"))
    }
}

/// One value per actuator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerActuator<T> {
    pub cooling_pump: T,
    pub dosing_pump: T,
    pub ventilation: T,
}

impl<T> PerActuator<T> {
    pub fn map<U>(&self, mut f: impl FnMut(Actuator, &T) -> U) -> PerActuator<U> {
        PerActuator {
            cooling_pump: f(Actuator::CoolingPump, &self.cooling_pump),
            dosing_pump: f(Actuator::DosingPump, &self.dosing_pump),
            ventilation: f(Actuator::Ventilation, &self.ventilation),
        }
    }
}

impl<T> Index<Actuator> for PerActuator<T> {
    type Output = T;

    fn index(&self, a: Actuator) -> &T {
        match a {
            Actuator::CoolingPump => &self.cooling_pump,
            Actuator::DosingPump => &self.dosing_pump,
            Actuator::Ventilation => &self.ventilation,
        }
    }
}

impl<T> IndexMut<Actuator> for PerActuator<T> {
    fn index_mut(&mut self, a: Actuator) -> &mut T {
        match a {
            Actuator::CoolingPump => &mut self.cooling_pump,
            Actuator::DosingPump => &mut self.dosing_pump,
            Actuator::Ventilation => &mut self.ventilation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActuatorStatus {
    pub state: Switch,
    pub last_transition: Option<DateTime<Utc>>,
}

pub type ActuatorState = PerActuator<ActuatorStatus>;

impl ActuatorState {
    pub fn switches(&self) -> PerActuator<Switch> {
        self.map(|_, s| s.state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvalidReadingPolicy {
    /// Keep the actuator where it is and raise an alert.
    #[default]
    Hold,
    /// Switch the actuator off and raise an alert.
    Off,
}

impl FromStr for InvalidReadingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hold" => Ok(Self::Hold),
            "off" => Ok(Self::Off),
            other => Err(format!(
                "invalid_reading_policy must be hold|off, got `{other}`"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub thresholds: Thresholds,
    /// Deadband below/inside temperature thresholds, °C.
    pub temp_hysteresis: f64,
    /// Deadband inside the pH band on each side, pH units.
    pub ph_hysteresis: f64,
    /// Minimum time between two transitions of one actuator.
    pub dwell_seconds: u64,
    pub tick_seconds: u64,
    pub invalid_reading_policy: InvalidReadingPolicy,
    pub ventilation_enabled: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            temp_hysteresis: 0.5,
            ph_hysteresis: 0.2,
            dwell_seconds: 60,
            tick_seconds: 15,
            invalid_reading_policy: InvalidReadingPolicy::Hold,
            ventilation_enabled: false,
        }
    }
}

impl ControllerConfig {
    /// Plain threshold comparisons: no deadband, no dwell.
    pub fn without_deadband(mut self) -> Self {
        self.temp_hysteresis = 0.0;
        self.ph_hysteresis = 0.0;
        self.dwell_seconds = 0;
        self
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        self.thresholds.validate()?;
        for (name, h) in [
            ("temp_hysteresis", self.temp_hysteresis),
            ("ph_hysteresis", self.ph_hysteresis),
        ] {
            if !(h.is_finite() && h >= 0.0) {
                return Err(ValidationError::new(name, format!("{name} must be ≥ 0")));
            }
        }
        let t = &self.thresholds;
        if 2.0 * self.ph_hysteresis >= t.ph_high - t.ph_low {
            return Err(ValidationError::new(
                "ph_hysteresis",
                "ph_hysteresis leaves no room inside the pH band",
            ));
        }
        if self.ventilation_enabled && 2.0 * self.temp_hysteresis >= t.air_high - t.air_low {
            return Err(ValidationError::new(
                "temp_hysteresis",
                "temp_hysteresis leaves no room inside the air band",
            ));
        }
        if self.tick_seconds == 0 {
            return Err(ValidationError::new(
                "tick_seconds",
                "tick_seconds must be > 0",
            ));
        }
        Ok(())
    }

    fn dwell(&self) -> Duration {
        Duration::seconds(self.dwell_seconds as i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlertReason {
    OutOfIdealRange,
    InvalidReading,
    HumidityLow,
    StaleData,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub parameter: SensorKind,
    pub reason: AlertReason,
    pub value: Option<f64>,
}

/// Latest reading per kind; inserting a second reading of a kind replaces the first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReadingSet(BTreeMap<SensorKind, SensorReading>);

impl ReadingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, reading: SensorReading) {
        self.0.insert(reading.kind, reading);
    }

    pub fn get(&self, kind: SensorKind) -> Option<&SensorReading> {
        self.0.get(&kind)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SensorReading> {
        self.0.values()
    }
}

impl FromIterator<SensorReading> for ReadingSet {
    fn from_iter<I: IntoIterator<Item = SensorReading>>(iter: I) -> Self {
        let mut set = ReadingSet::new();
        for r in iter {
            set.insert(r);
        }
        set
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlDecision {
    pub at: DateTime<Utc>,
    /// Target per actuator as derived from the readings.
    pub commands: PerActuator<Switch>,
    pub alerts: Vec<Alert>,
    /// Actuators whose target came from a manual override.
    #[serde(default)]
    pub overridden: Vec<Actuator>,
    /// Actuators whose change was held back by dwell.
    #[serde(default)]
    pub suppressed: Vec<Actuator>,
    /// Actuators that actually switched this tick.
    #[serde(default)]
    pub transitions: Vec<Actuator>,
}

impl ControlDecision {
    pub fn alerts_with(&self, reason: AlertReason) -> impl Iterator<Item = &Alert> {
        self.alerts.iter().filter(move |a| a.reason == reason)
    }
}

enum Band {
    /// On above `high`, off at or below `high - hysteresis`.
    Ceiling { high: f64 },
    /// On outside `[low, high]`, off inside the band shrunk by hysteresis.
    Window { low: f64, high: f64 },
}

fn actuate(
    decision: &mut ControlDecision,
    actuator: Actuator,
    kind: SensorKind,
    reading: Option<&SensorReading>,
    band: Band,
    hysteresis: f64,
    policy: InvalidReadingPolicy,
) {
    let Some(r) = reading else {
        decision.alerts.push(Alert {
            parameter: kind,
            reason: AlertReason::StaleData,
            value: None,
        });
        return;
    };
    if !r.is_valid() {
        decision.alerts.push(Alert {
            parameter: kind,
            reason: AlertReason::InvalidReading,
            value: Some(r.value),
        });
        if policy == InvalidReadingPolicy::Off {
            decision.commands[actuator] = Switch::Off;
        }
        return;
    }
    let v = r.value;
    let (trigger, release) = match band {
        Band::Ceiling { high } => (v > high, v <= high - hysteresis),
        Band::Window { low, high } => (
            v < low || v > high,
            v >= low + hysteresis && v <= high - hysteresis,
        ),
    };
    if trigger {
        decision.commands[actuator] = Switch::On;
        decision.alerts.push(Alert {
            parameter: kind,
            reason: AlertReason::OutOfIdealRange,
            value: Some(v),
        });
    } else if release {
        decision.commands[actuator] = Switch::Off;
    }
}

/// Pure decision rule. Commands default to the current state, so any
/// parameter without a usable reading leaves its actuator untouched.
pub fn evaluate(
    readings: &ReadingSet,
    config: &ControllerConfig,
    state: &ActuatorState,
    now: DateTime<Utc>,
) -> ControlDecision {
    let t = &config.thresholds;
    let policy = config.invalid_reading_policy;
    let mut decision = ControlDecision {
        at: now,
        commands: state.switches(),
        alerts: Vec::new(),
        overridden: Vec::new(),
        suppressed: Vec::new(),
        transitions: Vec::new(),
    };

    actuate(
        &mut decision,
        Actuator::CoolingPump,
        SensorKind::WaterTemperature,
        readings.get(SensorKind::WaterTemperature),
        Band::Ceiling { high: t.water_high },
        config.temp_hysteresis,
        policy,
    );
    actuate(
        &mut decision,
        Actuator::DosingPump,
        SensorKind::PhLevel,
        readings.get(SensorKind::PhLevel),
        Band::Window {
            low: t.ph_low,
            high: t.ph_high,
        },
        config.ph_hysteresis,
        policy,
    );

    let air = readings.get(SensorKind::GreenhouseTemperature);
    if config.ventilation_enabled {
        actuate(
            &mut decision,
            Actuator::Ventilation,
            SensorKind::GreenhouseTemperature,
            air,
            Band::Window {
                low: t.air_low,
                high: t.air_high,
            },
            config.temp_hysteresis,
            policy,
        );
    } else {
        decision.commands.ventilation = Switch::Off;
        if let Some(r) = air {
            monitor_only(
                &mut decision,
                r,
                |v| v < t.air_low || v > t.air_high,
                AlertReason::OutOfIdealRange,
            );
        }
    }

    if let Some(r) = readings.get(SensorKind::Humidity) {
        monitor_only(
            &mut decision,
            r,
            |v| v < t.humidity_min,
            AlertReason::HumidityLow,
        );
    }
    if let Some(r) = readings.get(SensorKind::Light) {
        monitor_only(&mut decision, r, |_| false, AlertReason::OutOfIdealRange);
    }
    decision
}

fn monitor_only(
    decision: &mut ControlDecision,
    r: &SensorReading,
    out_of_band: impl Fn(f64) -> bool,
    reason: AlertReason,
) {
    let reason = if !r.is_valid() {
        AlertReason::InvalidReading
    } else if out_of_band(r.value) {
        reason
    } else {
        return;
    };
    decision.alerts.push(Alert {
        parameter: r.kind,
        reason,
        value: Some(r.value),
    });
}

/// Anything that can hand the controller its latest readings.
pub trait ReadingSource {
    fn latest(&mut self, now: DateTime<Utc>) -> ReadingSet;
}

impl ReadingSource for ReadingSet {
    fn latest(&mut self, _now: DateTime<Utc>) -> ReadingSet {
        self.clone()
    }
}

/// Stateful controller: one tick at a time, strictly ordered in time.
#[derive(Debug, Clone)]
pub struct Controller {
    config: ControllerConfig,
    state: ActuatorState,
    overrides: PerActuator<Option<Switch>>,
    last_tick: Option<DateTime<Utc>>,
}

impl Controller {
    pub fn new(config: ControllerConfig) -> Result<Self, ValidationError> {
        config.validate()?;
        Ok(Self {
            config,
            state: ActuatorState::default(),
            overrides: PerActuator::default(),
            last_tick: None,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.config.thresholds
    }

    pub fn state(&self) -> &ActuatorState {
        &self.state
    }

    pub fn overrides(&self) -> &PerActuator<Option<Switch>> {
        &self.overrides
    }

    pub fn last_tick(&self) -> Option<DateTime<Utc>> {
        self.last_tick
    }

    /// Applies a setpoint update between ticks. Rejected updates leave
    /// the active thresholds untouched.
    pub fn set_thresholds(
        &mut self,
        update: &SetpointUpdate,
    ) -> Result<Thresholds, ValidationError> {
        let thresholds = apply_config(&self.config.thresholds, update)?;
        let mut candidate = self.config.clone();
        candidate.thresholds = thresholds;
        candidate.validate()?;
        self.config = candidate;
        Ok(thresholds)
    }

    /// `None` hands the actuator back to the control rule.
    pub fn set_override(
        &mut self,
        actuator: Actuator,
        value: Option<Switch>,
    ) -> Result<(), ControlError> {
        if actuator == Actuator::Ventilation && !self.config.ventilation_enabled && value.is_some()
        {
            return Err(ControlError::VentilationDisabled);
        }
        self.overrides[actuator] = value;
        Ok(())
    }

    pub fn tick(
        &mut self,
        readings: &ReadingSet,
        now: DateTime<Utc>,
    ) -> Result<(ActuatorState, ControlDecision), ControlError> {
        if let Some(previous) = self.last_tick {
            if now < previous {
                return Err(ControlError::ClockRegression { previous, now });
            }
        }
        let mut decision = evaluate(readings, &self.config, &self.state, now);
        let dwell = self.config.dwell();
        for actuator in Actuator::ALL {
            let target = match self.overrides[actuator] {
                Some(forced) => {
                    decision.overridden.push(actuator);
                    forced
                }
                None => decision.commands[actuator],
            };
            let status = &mut self.state[actuator];
            if target == status.state {
                continue;
            }
            let too_soon = status
                .last_transition
                .is_some_and(|last| now - last < dwell);
            if too_soon {
                decision.suppressed.push(actuator);
            } else {
                status.state = target;
                status.last_transition = Some(now);
                decision.transitions.push(actuator);
            }
        }
        self.last_tick = Some(now);
        Ok((self.state, decision))
    }
}

/// One sense→decide step against a reading source.
pub fn step<S: ReadingSource + ?Sized>(
    controller: &mut Controller,
    source: &mut S,
    now: DateTime<Utc>,
) -> Result<(ActuatorState, ControlDecision), ControlError> {
    if let Some(previous) = controller.last_tick {
        if now < previous {
            return Err(ControlError::ClockRegression { previous, now });
        }
    }
    let readings = source.latest(now);
    controller.tick(&readings, now)
}
