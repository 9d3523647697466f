use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::SecondsFormat;
use hydrostat_core::control::PerActuator;
use hydrostat_core::sensors::SensorKind;
use hydrostat_core::simulator::Simulator;
use serde::Serialize;

use super::{emit, to_json};
use crate::config::FileConfig;
use crate::{CliError, SimArgs};

#[derive(Serialize)]
struct Row {
    timestamp: String,
    values: BTreeMap<SensorKind, f64>,
    out_of_range: Vec<SensorKind>,
}

pub fn run(file: &FileConfig, args: SimArgs) -> Result<(), CliError> {
    let cfg = file.closed_loop(args.seed, args.duration.as_deref(), "24h")?;
    let mut sim =
        Simulator::new(cfg.sim.clone(), cfg.start).map_err(|e| CliError::Usage(e.to_string()))?;
    let tick = cfg.controller.tick_seconds as f64;
    let off = PerActuator::default();

    let mut rows = Vec::new();
    let mut next = 0.0;
    while sim.state().sim_time < cfg.duration_seconds as f64 - 1e-9 {
        if sim.state().sim_time + 1e-9 >= next {
            let at = sim.now();
            let readings = sim.sample();
            rows.push(Row {
                timestamp: at.to_rfc3339_opts(SecondsFormat::Secs, true),
                values: readings.iter().map(|r| (r.kind, r.value)).collect(),
                out_of_range: readings
                    .iter()
                    .filter(|r| !r.is_valid())
                    .map(|r| r.kind)
                    .collect(),
            });
            next += tick;
        }
        sim.step(&off);
    }

    let (name, body) = if args.json {
        ("readings.json", to_json(&rows))
    } else {
        let mut s = String::from("timestamp");
        for k in SensorKind::ALL {
            let _ = write!(s, ",{k}");
        }
        s.push('\n');
        for row in &rows {
            s.push_str(&row.timestamp);
            for k in SensorKind::ALL {
                let _ = write!(s, ",{:.3}", row.values[&k]);
            }
            s.push('\n');
        }
        ("readings.csv", s)
    };
    emit(args.out.as_deref(), name, &body)
}
