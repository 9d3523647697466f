//! Deterministic virtual greenhouse.
//!
//! Air temperature, humidity and light relax toward a 24 h profile; the
//! reservoir water follows the air with a longer lag and is pulled down
//! while the cooling pump runs; pH random-walks and is pulled toward
//! neutral while the dosing pump runs. All randomness comes from seeded
//! ChaCha streams, so a seed fully determines a run.

use std::f64::consts::PI;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::control::{PerActuator, ReadingSet, ReadingSource, Switch, ValidationError};
use crate::fixtures::{read_fixture, FixtureError};
use crate::sensors::{validate_reading, CalibrationCurve, SensorKind, SensorReading};

const DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub air_temp: f64,
    pub humidity: f64,
    pub light: f64,
    pub water_temp: f64,
    pub ph: f64,
    /// Seconds since the start of the run.
    pub sim_time: f64,
}

impl EnvState {
    fn clamped(mut self) -> Self {
        self.humidity = self.humidity.clamp(0.0, 100.0);
        self.light = self.light.clamp(0.0, 1023.0);
        self.ph = self.ph.clamp(0.0, 14.0);
        self
    }

    pub fn value(&self, kind: SensorKind) -> f64 {
        match kind {
            SensorKind::GreenhouseTemperature => self.air_temp,
            SensorKind::Humidity => self.humidity,
            SensorKind::WaterTemperature => self.water_temp,
            SensorKind::PhLevel => self.ph,
            SensorKind::Light => self.light,
        }
    }
}

/// Per-kind measurement noise (standard deviations, in each kind's unit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorNoise {
    pub temperature: f64,
    pub humidity: f64,
    pub light: f64,
    pub ph: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        Self {
            temperature: 0.2,
            humidity: 1.0,
            light: 5.0,
            ph: 0.05,
        }
    }
}

impl SensorNoise {
    pub const ZERO: SensorNoise = SensorNoise {
        temperature: 0.0,
        humidity: 0.0,
        light: 0.0,
        ph: 0.0,
    };

    pub fn sigma(&self, kind: SensorKind) -> f64 {
        match kind {
            SensorKind::GreenhouseTemperature | SensorKind::WaterTemperature => self.temperature,
            SensorKind::Humidity => self.humidity,
            SensorKind::Light => self.light,
            SensorKind::PhLevel => self.ph,
        }
    }
}

/// Simulation parameters. Times in seconds, temperatures in °C, light in
/// LDR counts (high = dark).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub dt: f64,
    pub air_min: f64,
    pub air_max: f64,
    /// Hour of day at which the air temperature peaks.
    pub peak_hour: f64,
    pub humidity_min: f64,
    pub humidity_max: f64,
    pub light_day: f64,
    pub light_night: f64,
    pub sunrise_hour: f64,
    pub sunset_hour: f64,
    /// Time constant of air, humidity and light toward the daily profile.
    pub env_tau: f64,
    /// Time constant of the water toward the air temperature.
    pub water_tau: f64,
    pub reservoir_ambient: f64,
    /// °C/s pull toward `reservoir_ambient` while cooling runs.
    pub cooling_rate: f64,
    /// pH units/s pull toward 7.0 while dosing runs.
    pub dosing_rate: f64,
    /// Std-dev of the pH random walk per step.
    pub ph_drift_std: f64,
    /// Deterministic pH drift, pH units/s.
    pub ph_drift_rate: f64,
    /// °C/s pull toward `ventilation_target` while ventilation runs.
    pub ventilation_rate: f64,
    pub ventilation_target: f64,
    pub air_noise_std: f64,
    pub humidity_noise_std: f64,
    pub light_noise_std: f64,
    pub initial_water_temp: f64,
    pub initial_ph: f64,
    pub sensor_noise: SensorNoise,
    /// Applied to the probe signal before validation; a wrong curve
    /// produces out-of-range pH readings.
    pub ph_calibration: CalibrationCurve,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dt: 15.0,
            air_min: 26.0,
            air_max: 34.0,
            peak_hour: 13.0,
            humidity_min: 46.0,
            humidity_max: 84.0,
            light_day: 83.0,
            light_night: 1013.0,
            sunrise_hour: 6.0,
            sunset_hour: 18.0,
            env_tau: 900.0,
            water_tau: 7200.0,
            reservoir_ambient: 27.0,
            cooling_rate: 0.002,
            dosing_rate: 0.0005,
            ph_drift_std: 0.002,
            ph_drift_rate: 0.00001,
            ventilation_rate: 0.001,
            ventilation_target: 27.5,
            air_noise_std: 0.02,
            humidity_noise_std: 0.1,
            light_noise_std: 1.0,
            initial_water_temp: 28.0,
            initial_ph: 7.0,
            sensor_noise: SensorNoise::default(),
            ph_calibration: CalibrationCurve::IDENTITY,
        }
    }
}

impl SimConfig {
    /// Same dynamics with every random term switched off.
    pub fn noiseless(mut self) -> Self {
        self.ph_drift_std = 0.0;
        self.air_noise_std = 0.0;
        self.humidity_noise_std = 0.0;
        self.light_noise_std = 0.0;
        self.sensor_noise = SensorNoise::ZERO;
        self
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let positive = [
            ("dt", self.dt),
            ("env_tau", self.env_tau),
            ("water_tau", self.water_tau),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ValidationError::new(name, format!("{name} must be > 0")));
            }
        }
        let non_negative = [
            ("cooling_rate", self.cooling_rate),
            ("dosing_rate", self.dosing_rate),
            ("ventilation_rate", self.ventilation_rate),
            ("ph_drift_std", self.ph_drift_std),
            ("air_noise_std", self.air_noise_std),
            ("humidity_noise_std", self.humidity_noise_std),
            ("light_noise_std", self.light_noise_std),
            ("sensor_noise.temperature", self.sensor_noise.temperature),
            ("sensor_noise.humidity", self.sensor_noise.humidity),
            ("sensor_noise.light", self.sensor_noise.light),
            ("sensor_noise.ph", self.sensor_noise.ph),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ValidationError::new(name, format!("{name} must be ≥ 0")));
            }
        }
        let finite = [
            ("air_min", self.air_min),
            ("air_max", self.air_max),
            ("humidity_min", self.humidity_min),
            ("humidity_max", self.humidity_max),
            ("sunrise_hour", self.sunrise_hour),
            ("sunset_hour", self.sunset_hour),
            ("peak_hour", self.peak_hour),
            ("ph_drift_rate", self.ph_drift_rate),
            ("reservoir_ambient", self.reservoir_ambient),
            ("ventilation_target", self.ventilation_target),
            ("initial_water_temp", self.initial_water_temp),
            ("initial_ph", self.initial_ph),
            ("light_day", self.light_day),
            ("light_night", self.light_night),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(ValidationError::new(name, format!("{name} must be finite")));
            }
        }
        if self.air_min > self.air_max {
            return Err(ValidationError::new("air_min", "air_min > air_max"));
        }
        if self.humidity_min > self.humidity_max {
            return Err(ValidationError::new(
                "humidity_min",
                "humidity_min > humidity_max",
            ));
        }
        if !(0.0 <= self.sunrise_hour
            && self.sunrise_hour < self.sunset_hour
            && self.sunset_hour <= 24.0)
        {
            return Err(ValidationError::new(
                "sunrise_hour",
                "need 0 ≤ sunrise_hour < sunset_hour ≤ 24",
            ));
        }
        Ok(())
    }
}

/// Daily forcing the environment relaxes toward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiurnalBase {
    pub air_temp: f64,
    pub light: f64,
    pub humidity: f64,
}

pub fn diurnal_profile(config: &SimConfig, sim_time: f64) -> DiurnalBase {
    let tod = sim_time.rem_euclid(DAY);
    let phase = 2.0 * PI * (tod - config.peak_hour * 3600.0) / DAY;
    let swing = phase.cos();

    let air_mid = 0.5 * (config.air_min + config.air_max);
    let air_amp = 0.5 * (config.air_max - config.air_min);
    let hum_mid = 0.5 * (config.humidity_min + config.humidity_max);
    let hum_amp = 0.5 * (config.humidity_max - config.humidity_min);

    let sunrise = config.sunrise_hour * 3600.0;
    let sunset = config.sunset_hour * 3600.0;
    let daylight = if tod > sunrise && tod < sunset {
        (PI * (tod - sunrise) / (sunset - sunrise)).sin()
    } else {
        0.0
    };

    DiurnalBase {
        air_temp: air_mid + air_amp * swing,
        humidity: hum_mid - hum_amp * swing,
        light: config.light_night + (config.light_day - config.light_night) * daylight,
    }
}

fn gauss<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sigma * z
}

/// Moves `value` toward `target` by at most `max_step`, never past it.
fn pull_toward(value: f64, target: f64, max_step: f64) -> f64 {
    if value > target {
        (value - max_step).max(target)
    } else {
        (value + max_step).min(target)
    }
}

/// Advances the environment by one `config.dt`.
pub fn env_step<R: Rng + ?Sized>(
    state: &EnvState,
    commands: &PerActuator<Switch>,
    config: &SimConfig,
    rng: &mut R,
) -> EnvState {
    let dt = config.dt;
    let next_time = state.sim_time + dt;
    let base = diurnal_profile(config, next_time);
    let env_gain = 1.0 - (-dt / config.env_tau).exp();
    let water_gain = 1.0 - (-dt / config.water_tau).exp();

    let mut air_temp = state.air_temp
        + (base.air_temp - state.air_temp) * env_gain
        + gauss(rng, config.air_noise_std);
    if commands.ventilation.is_on() {
        air_temp = pull_toward(
            air_temp,
            config.ventilation_target,
            config.ventilation_rate * dt,
        );
    }
    let humidity = state.humidity
        + (base.humidity - state.humidity) * env_gain
        + gauss(rng, config.humidity_noise_std);
    let light =
        state.light + (base.light - state.light) * env_gain + gauss(rng, config.light_noise_std);

    let mut water_temp = state.water_temp + (state.air_temp - state.water_temp) * water_gain;
    if commands.cooling_pump.is_on() && water_temp > config.reservoir_ambient {
        water_temp = pull_toward(
            water_temp,
            config.reservoir_ambient,
            config.cooling_rate * dt,
        );
    }

    let mut ph = state.ph + gauss(rng, config.ph_drift_std) + config.ph_drift_rate * dt;
    if commands.dosing_pump.is_on() {
        ph = pull_toward(ph, 7.0, config.dosing_rate * dt);
    }

    EnvState {
        air_temp,
        humidity,
        light,
        water_temp,
        ph,
        sim_time: next_time,
    }
    .clamped()
}

/// One validated reading per kind. The pH signal goes through `calibration`;
/// the light channel saturates at the ends of the 10-bit ADC.
pub fn sample_sensors<R: Rng + ?Sized>(
    state: &EnvState,
    noise: &SensorNoise,
    calibration: &CalibrationCurve,
    timestamp: DateTime<Utc>,
    rng: &mut R,
) -> ReadingSet {
    SensorKind::ALL
        .into_iter()
        .map(|kind| {
            let mut value = state.value(kind) + gauss(rng, noise.sigma(kind));
            match kind {
                SensorKind::PhLevel => value = calibration.apply(value),
                SensorKind::Light => value = value.clamp(0.0, 1023.0),
                _ => {}
            }
            validate_reading(kind, value, timestamp).expect("simulated values are finite")
        })
        .collect()
}

/// Default wall-clock origin of simulated runs: midnight at the start of
/// the logged trial days.
pub fn default_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2022, 5, 23, 0, 0, 0).unwrap()
}

/// Environment plus its random streams.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    state: EnvState,
    start: DateTime<Utc>,
    env_rng: ChaCha8Rng,
    sensor_rng: ChaCha8Rng,
}

impl Simulator {
    pub fn new(config: SimConfig, start: DateTime<Utc>) -> Result<Self, ValidationError> {
        config.validate()?;
        let base = diurnal_profile(&config, 0.0);
        let state = EnvState {
            air_temp: base.air_temp,
            humidity: base.humidity,
            light: base.light,
            water_temp: config.initial_water_temp,
            ph: config.initial_ph,
            sim_time: 0.0,
        }
        .clamped();
        let mut env_rng = ChaCha8Rng::seed_from_u64(config.seed);
        env_rng.set_stream(0);
        let mut sensor_rng = ChaCha8Rng::seed_from_u64(config.seed);
        sensor_rng.set_stream(1);
        Ok(Self {
            config,
            state,
            start,
            env_rng,
            sensor_rng,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.start + Duration::milliseconds((self.state.sim_time * 1000.0).round() as i64)
    }

    pub fn step(&mut self, commands: &PerActuator<Switch>) -> &EnvState {
        self.state = env_step(&self.state, commands, &self.config, &mut self.env_rng);
        &self.state
    }

    pub fn sample(&mut self) -> ReadingSet {
        let now = self.now();
        sample_sensors(
            &self.state,
            &self.config.sensor_noise,
            &self.config.ph_calibration,
            now,
            &mut self.sensor_rng,
        )
    }
}

impl ReadingSource for Simulator {
    fn latest(&mut self, _now: DateTime<Utc>) -> ReadingSet {
        self.sample()
    }
}

/// Time-ordered readings from a logged fixture.
pub fn replay_fixture(
    path: impl AsRef<Path>,
) -> Result<std::vec::IntoIter<SensorReading>, FixtureError> {
    Ok(read_fixture(path)?.into_iter())
}

/// Groups time-ordered readings (possibly from several fixtures) into one
/// reading set per distinct timestamp.
pub fn merge_ticks<I>(readings: I) -> Vec<(DateTime<Utc>, ReadingSet)>
where
    I: IntoIterator<Item = SensorReading>,
{
    let mut all: Vec<SensorReading> = readings.into_iter().collect();
    all.sort_by_key(|r| r.timestamp);
    let mut ticks: Vec<(DateTime<Utc>, ReadingSet)> = Vec::new();
    for r in all {
        match ticks.last_mut() {
            Some((at, set)) if *at == r.timestamp => set.insert(r),
            _ => {
                let mut set = ReadingSet::new();
                set.insert(r);
                ticks.push((r.timestamp, set));
            }
        }
    }
    ticks
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn off() -> PerActuator<Switch> {
        PerActuator::default()
    }

    fn cooling_on() -> PerActuator<Switch> {
        PerActuator {
            cooling_pump: Switch::On,
            ..PerActuator::default()
        }
    }

    #[test]
    fn profile_extremes_and_period() {
        let cfg = SimConfig::default();
        let peak = diurnal_profile(&cfg, 13.0 * 3600.0);
        assert!((peak.air_temp - 34.0).abs() < 1e-12);
        assert!((peak.humidity - 46.0).abs() < 1e-12);
        let trough = diurnal_profile(&cfg, 1.0 * 3600.0);
        assert!((trough.humidity - 84.0).abs() < 1e-12);
        assert!((trough.air_temp - 26.0).abs() < 1e-12);
        for t in [0.0, 1234.5, 40_000.0, 86_399.0] {
            let a = diurnal_profile(&cfg, t);
            let b = diurnal_profile(&cfg, t + DAY);
            assert!((a.air_temp - b.air_temp).abs() < 1e-9);
            assert!((a.humidity - b.humidity).abs() < 1e-9);
            assert!((a.light - b.light).abs() < 1e-9);
        }
        // LDR counts are high in the dark
        assert_eq!(diurnal_profile(&cfg, 0.0).light, 1013.0);
        assert!((diurnal_profile(&cfg, 12.0 * 3600.0).light - 83.0).abs() < 1e-9);
    }

    #[test]
    fn cooling_pulls_water_down() {
        let cfg = SimConfig::default().noiseless();
        let state = EnvState {
            air_temp: 30.0,
            humidity: 70.0,
            light: 100.0,
            water_temp: 32.0,
            ph: 7.0,
            sim_time: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let next = env_step(&state, &cooling_on(), &cfg, &mut rng);
        assert!(next.water_temp < 32.0);
    }

    #[test]
    fn relaxation_matches_first_order_response() {
        // Constant forcing: collapse the daily swing.
        let cfg = SimConfig {
            air_min: 30.0,
            air_max: 30.0,
            humidity_min: 60.0,
            humidity_max: 60.0,
            light_day: 500.0,
            light_night: 500.0,
            ph_drift_rate: 0.0,
            ..SimConfig::default()
        }
        .noiseless();
        let mut state = EnvState {
            air_temp: 20.0,
            humidity: 90.0,
            light: 0.0,
            water_temp: 30.0,
            ph: 7.0,
            sim_time: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let steps = (5.0 * cfg.env_tau / cfg.dt).ceil() as usize;
        for _ in 0..steps {
            state = env_step(&state, &off(), &cfg, &mut rng);
        }
        // closed form: x(t) = base + (x0 - base)·exp(-t/τ)
        let t = steps as f64 * cfg.dt;
        let expected_air = 30.0 + (20.0 - 30.0) * (-t / cfg.env_tau).exp();
        assert!((state.air_temp - expected_air).abs() < 1e-9);
        assert!((state.air_temp - 30.0).abs() <= 0.01 * 30.0);
        assert!((state.humidity - 60.0).abs() <= 0.01 * 60.0);
        assert!((state.light - 500.0).abs() <= 0.01 * 500.0);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let run = || {
            let mut sim = Simulator::new(
                SimConfig {
                    seed: 42,
                    ..SimConfig::default()
                },
                default_start(),
            )
            .unwrap();
            let mut trace = Vec::new();
            for i in 0..1000 {
                let cmd = if i % 200 < 100 { cooling_on() } else { off() };
                trace.push(*sim.step(&cmd));
                trace.push(*sim.state());
            }
            (trace, sim.sample())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn noiseless_identity_sampling_is_exact() {
        let state = EnvState {
            air_temp: 27.0,
            humidity: 75.0,
            light: 83.0,
            water_temp: 27.94,
            ph: 7.77,
            sim_time: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = sample_sensors(
            &state,
            &SensorNoise::ZERO,
            &CalibrationCurve::IDENTITY,
            default_start(),
            &mut rng,
        );
        assert_eq!(set.len(), 5);
        for r in set.iter() {
            assert_eq!(r.value, state.value(r.kind));
            assert!(r.is_valid());
        }
    }

    #[test]
    fn miscalibrated_probe_reads_negative() {
        let state = EnvState {
            air_temp: 27.0,
            humidity: 75.0,
            light: 83.0,
            water_temp: 28.0,
            ph: 7.0,
            sim_time: 0.0,
        };
        let curve = CalibrationCurve::new(1.0, -10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = sample_sensors(
            &state,
            &SensorNoise::default(),
            &curve,
            default_start(),
            &mut rng,
        );
        let ph = set.get(SensorKind::PhLevel).unwrap();
        assert!(ph.value < 0.0);
        assert!(!ph.is_valid());
    }

    #[test]
    fn sensor_noise_mean_within_standard_error() {
        let state = EnvState {
            air_temp: 27.0,
            humidity: 75.0,
            light: 83.0,
            water_temp: 29.0,
            ph: 7.0,
            sim_time: 0.0,
        };
        let noise = SensorNoise {
            temperature: 0.1,
            ..SensorNoise::ZERO
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let sum: f64 = (0..n)
            .map(|_| {
                sample_sensors(
                    &state,
                    &noise,
                    &CalibrationCurve::IDENTITY,
                    default_start(),
                    &mut rng,
                )
                .get(SensorKind::WaterTemperature)
                .unwrap()
                .value
            })
            .sum();
        let mean = sum / n as f64;
        assert!((mean - 29.0).abs() < 3.0 * 0.1 / (n as f64).sqrt());
    }

    #[test]
    fn merge_groups_by_timestamp() {
        let t = default_start();
        let r = |k, v, m: i64| validate_reading(k, v, t + Duration::minutes(m)).unwrap();
        let ticks = merge_ticks(vec![
            r(SensorKind::PhLevel, 7.0, 5),
            r(SensorKind::Light, 80.0, 0),
            r(SensorKind::WaterTemperature, 28.0, 5),
        ]);
        assert_eq!(ticks.len(), 2);
        assert_eq!(ticks[0].1.len(), 1);
        assert_eq!(ticks[1].1.len(), 2);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let err = Simulator::new(
            SimConfig {
                dt: 0.0,
                ..SimConfig::default()
            },
            default_start(),
        )
        .unwrap_err();
        assert_eq!(err.field, "dt");
        let err = SimConfig {
            cooling_rate: -1.0,
            ..SimConfig::default()
        }
        .validate()
        .unwrap_err();
        assert_eq!(err.field, "cooling_rate");
    }

    fn arb_state() -> impl Strategy<Value = EnvState> {
        (
            -10.0f64..60.0,
            -50.0f64..150.0,
            -500.0f64..2000.0,
            0.0f64..50.0,
            0.0f64..14.0,
            0.0f64..200_000.0,
        )
            .prop_map(
                |(air_temp, humidity, light, water_temp, ph, sim_time)| EnvState {
                    air_temp,
                    humidity,
                    light,
                    water_temp,
                    ph,
                    sim_time,
                },
            )
    }

    fn arb_commands() -> impl Strategy<Value = PerActuator<Switch>> {
        (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(c, d, v)| {
            let s = |b: bool| if b { Switch::On } else { Switch::Off };
            PerActuator {
                cooling_pump: s(c),
                dosing_pump: s(d),
                ventilation: s(v),
            }
        })
    }

    proptest! {
        #[test]
        fn clamps_always_hold(state in arb_state(), cmd in arb_commands(), seed in any::<u64>(),
                              light_noise in 0.0f64..500.0, hum_noise in 0.0f64..100.0) {
            let cfg = SimConfig { light_noise_std: light_noise, humidity_noise_std: hum_noise, ..SimConfig::default() };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let next = env_step(&state, &cmd, &cfg, &mut rng);
            prop_assert!((0.0..=100.0).contains(&next.humidity));
            prop_assert!((0.0..=1023.0).contains(&next.light));
            prop_assert!(next.air_temp.is_finite() && next.water_temp.is_finite() && next.ph.is_finite());
        }

        #[test]
        fn cooling_decreases_water_monotonically(water in 27.5f64..45.0, air in 26.0f64..34.0) {
            let cfg = SimConfig {
                air_min: air,
                air_max: air,
                ..SimConfig::default()
            }.noiseless();
            let mut state = EnvState { air_temp: air, humidity: 65.0, light: 500.0, water_temp: water, ph: 7.0, sim_time: 0.0 };
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let step_size = cfg.cooling_rate * cfg.dt;
            for _ in 0..20_000 {
                let next = env_step(&state, &cooling_on(), &cfg, &mut rng);
                if state.water_temp - cfg.reservoir_ambient <= step_size {
                    break;
                }
                prop_assert!(next.water_temp < state.water_temp);
                state = next;
            }
            prop_assert!(state.water_temp - cfg.reservoir_ambient <= step_size);
        }

        #[test]
        fn dosing_moves_ph_toward_neutral(ph in 0.0f64..14.0) {
            let cfg = SimConfig { ph_drift_rate: 0.0, ..SimConfig::default() }.noiseless();
            let state = EnvState { air_temp: 28.0, humidity: 70.0, light: 500.0, water_temp: 28.0, ph, sim_time: 0.0 };
            let cmd = PerActuator { dosing_pump: Switch::On, ..PerActuator::default() };
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let next = env_step(&state, &cmd, &cfg, &mut rng);
            let max_step = cfg.dosing_rate * cfg.dt;
            if ph > 7.0 {
                prop_assert!(next.ph < ph);
                prop_assert!(next.ph >= 7.0 - max_step);
            } else if ph < 7.0 {
                prop_assert!(next.ph > ph);
                prop_assert!(next.ph <= 7.0 + max_step);
            } else {
                prop_assert_eq!(next.ph, 7.0);
            }
        }
    }
}
