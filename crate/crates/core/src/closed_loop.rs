//! Simulator → sensors → controller → telemetry, stepped in simulated time.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{
    Actuator, ActuatorState, ControlDecision, ControlError, Controller, ControllerConfig,
    PerActuator, ReadingSet, ValidationError,
};
use crate::exec::Exec;
use crate::sensors::SensorKind;
use crate::simulator::{default_start, EnvState, SimConfig, Simulator};

pub type SinkError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum LoopError {
    #[error(transparent)]
    Config(#[from] ValidationError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("telemetry sink failed: {0}")]
    Sink(SinkError),
}

/// Receives every tick's readings and decision.
pub trait TelemetrySink {
    fn publish(
        &mut self,
        at: DateTime<Utc>,
        readings: &ReadingSet,
        decision: &ControlDecision,
    ) -> Result<(), SinkError>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TelemetrySink for NullSink {
    fn publish(
        &mut self,
        _: DateTime<Utc>,
        _: &ReadingSet,
        _: &ControlDecision,
    ) -> Result<(), SinkError> {
        Ok(())
    }
}

/// How the loop reaches the controller; lets a shared, lock-guarded
/// controller take part in the loop.
pub trait ControllerAccess {
    fn tick(
        &mut self,
        readings: &ReadingSet,
        now: DateTime<Utc>,
    ) -> Result<(ActuatorState, ControlDecision), ControlError>;

    fn water_band(&self) -> (f64, f64);
}

impl ControllerAccess for Controller {
    fn tick(
        &mut self,
        readings: &ReadingSet,
        now: DateTime<Utc>,
    ) -> Result<(ActuatorState, ControlDecision), ControlError> {
        Controller::tick(self, readings, now)
    }

    fn water_band(&self) -> (f64, f64) {
        let t = self.thresholds();
        (t.water_low, t.water_high)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopConfig {
    pub sim: SimConfig,
    pub controller: ControllerConfig,
    pub duration_seconds: u64,
    pub start: DateTime<Utc>,
    /// Ticks before this many seconds are excluded from the band statistic.
    pub warmup_seconds: u64,
    /// Margin around the water band used by the band statistic, °C.
    pub water_margin: f64,
}

impl Default for ClosedLoopConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            controller: ControllerConfig::default(),
            duration_seconds: 48 * 3600,
            start: default_start(),
            warmup_seconds: 3600,
            water_margin: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    min: f64,
    max: f64,
    sum: f64,
    count: usize,
}

impl Accumulator {
    fn push(&mut self, v: f64) {
        if self.count == 0 {
            self.min = v;
            self.max = v;
        } else {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
        self.sum += v;
        self.count += 1;
    }

    fn finish(self) -> Option<ParamStats> {
        (self.count > 0).then(|| ParamStats {
            min: self.min,
            max: self.max,
            mean: self.sum / self.count as f64,
            count: self.count,
        })
    }
}

/// Per-tick record kept for post-run checks.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub at: DateTime<Utc>,
    pub env: EnvState,
    pub state: ActuatorState,
    pub transitions: Vec<Actuator>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub duration_seconds: u64,
    pub ticks: usize,
    /// True environment state sampled at each tick.
    pub environment: BTreeMap<SensorKind, ParamStats>,
    pub invalid_readings: usize,
    pub transitions: PerActuator<usize>,
    pub min_transition_gap_seconds: PerActuator<Option<i64>>,
    pub alerts: BTreeMap<String, usize>,
    /// Share of post-warmup ticks with water inside the band ± margin.
    pub water_in_band_fraction: Option<f64>,
    pub water_band: (f64, f64),
    #[serde(skip)]
    pub trace: Vec<TickRecord>,
}

pub fn run_closed_loop<C, S>(
    config: &ClosedLoopConfig,
    controller: &mut C,
    sink: &mut S,
) -> Result<RunSummary, LoopError>
where
    C: ControllerAccess + ?Sized,
    S: TelemetrySink + ?Sized,
{
    config.controller.validate()?;
    let mut sim = Simulator::new(config.sim.clone(), config.start)?;
    let tick = config.controller.tick_seconds as f64;
    let duration = config.duration_seconds as f64;

    let mut env_stats: BTreeMap<SensorKind, Accumulator> = BTreeMap::new();
    let mut alerts: BTreeMap<String, usize> = BTreeMap::new();
    let mut transitions = PerActuator::<usize>::default();
    let mut last_switch = PerActuator::<Option<DateTime<Utc>>>::default();
    let mut min_gap = PerActuator::<Option<i64>>::default();
    let mut invalid = 0;
    let mut trace = Vec::new();
    let mut next_tick = 0.0;
    let mut commands = PerActuator::default();

    while sim.state().sim_time < duration - 1e-9 {
        if sim.state().sim_time + 1e-9 >= next_tick {
            let now = sim.now();
            let readings = sim.sample();
            let (state, decision) = controller.tick(&readings, now)?;
            sink.publish(now, &readings, &decision)
                .map_err(LoopError::Sink)?;
            commands = state.switches();

            let env = *sim.state();
            for kind in SensorKind::ALL {
                env_stats.entry(kind).or_default().push(env.value(kind));
            }
            invalid += readings.iter().filter(|r| !r.is_valid()).count();
            for alert in &decision.alerts {
                *alerts.entry(format!("{:?}", alert.reason)).or_default() += 1;
            }
            for &a in &decision.transitions {
                transitions[a] += 1;
                if let Some(prev) = last_switch[a] {
                    let gap = (now - prev).num_seconds();
                    min_gap[a] = Some(min_gap[a].map_or(gap, |g: i64| g.min(gap)));
                }
                last_switch[a] = Some(now);
            }
            trace.push(TickRecord {
                at: now,
                env,
                state,
                transitions: decision.transitions.clone(),
            });
            next_tick += tick;
        }
        sim.step(&commands);
    }

    let (water_low, water_high) = controller.water_band();
    let band = (
        water_low - config.water_margin,
        water_high + config.water_margin,
    );
    let warm = config.start + Duration::seconds(config.warmup_seconds as i64);
    let after: Vec<f64> = trace
        .iter()
        .filter(|t| t.at >= warm)
        .map(|t| t.env.water_temp)
        .collect();
    let water_in_band_fraction = (!after.is_empty()).then(|| {
        after
            .iter()
            .filter(|w| band.0 <= **w && **w <= band.1)
            .count() as f64
            / after.len() as f64
    });

    Ok(RunSummary {
        seed: config.sim.seed,
        duration_seconds: config.duration_seconds,
        ticks: trace.len(),
        environment: env_stats
            .into_iter()
            .filter_map(|(k, acc)| acc.finish().map(|s| (k, s)))
            .collect(),
        invalid_readings: invalid,
        transitions,
        min_transition_gap_seconds: min_gap,
        alerts,
        water_in_band_fraction,
        water_band: band,
        trace,
    })
}

/// Runs one independent closed loop per seed.
pub fn sweep_seeds(
    base: &ClosedLoopConfig,
    seeds: &[u64],
    exec: Exec,
) -> Result<Vec<RunSummary>, LoopError> {
    exec.map(seeds, |&seed| {
        let mut cfg = base.clone();
        cfg.sim.seed = seed;
        let mut controller = Controller::new(cfg.controller.clone())?;
        let mut summary = run_closed_loop(&cfg, &mut controller, &mut NullSink)?;
        summary.trace.clear();
        Ok(summary)
    })
    .into_iter()
    .collect()
}
