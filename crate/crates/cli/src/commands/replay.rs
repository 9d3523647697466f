use std::fmt::Write as _;
use std::sync::Arc;

use hydrostat_core::clock::ManualClock;
use hydrostat_core::control::{ControlDecision, Controller};
use hydrostat_core::fixtures::{read_fixture, FixtureError};
use hydrostat_core::sensors::{SensorKind, SensorReading};
use hydrostat_core::simulator::merge_ticks;
use hydrostat_telemetry::service::rfc3339;
use hydrostat_telemetry::{FieldValues, TelemetryService};
use serde::Serialize;

use super::{emit, fresh_out_dir, to_json};
use crate::config::FileConfig;
use crate::{CliError, ReplayArgs};

#[derive(Serialize)]
struct FixtureStats {
    path: String,
    kinds: Vec<SensorKind>,
    readings: usize,
    out_of_range: usize,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct ReplayReport {
    channel: u64,
    entries: usize,
    field_values: usize,
    fixtures: Vec<FixtureStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decisions: Option<Vec<ControlDecision>>,
}

fn stats(path: String, readings: &[SensorReading]) -> FixtureStats {
    let mut kinds: Vec<SensorKind> = readings.iter().map(|r| r.kind).collect();
    kinds.sort();
    kinds.dedup();
    let values = readings.iter().map(|r| r.value);
    FixtureStats {
        path,
        kinds,
        readings: readings.len(),
        out_of_range: readings.iter().filter(|r| !r.is_valid()).count(),
        min: values.clone().fold(f64::INFINITY, f64::min),
        max: values.fold(f64::NEG_INFINITY, f64::max),
    }
}

fn decision_line(d: &ControlDecision) -> String {
    let mut s = format!(
        "{}  cooling_pump={} dosing_pump={} ventilation={}",
        rfc3339(d.at),
        d.commands.cooling_pump,
        d.commands.dosing_pump,
        d.commands.ventilation
    );
    for a in &d.alerts {
        let _ = write!(s, "  [{:?} {}", a.reason, a.parameter);
        if let Some(v) = a.value {
            let _ = write!(s, " {v}");
        }
        s.push(']');
    }
    s
}

pub fn run(file: &FileConfig, args: ReplayArgs) -> Result<(), CliError> {
    let controller_cfg = file.controller()?;
    let mut telemetry = file.telemetry()?;
    let mut fixtures = Vec::new();
    let mut all = Vec::new();
    for path in &args.fixtures {
        let readings = read_fixture(path).map_err(|e| match e {
            FixtureError::Io { .. } => CliError::Usage(e.to_string()),
            other => CliError::Usage(format!("{}: {other}", path.display())),
        })?;
        fixtures.push(stats(path.display().to_string(), &readings));
        all.extend(readings);
    }
    let ticks = merge_ticks(all);

    let _scratch;
    telemetry.data_dir = match &args.out {
        Some(dir) => fresh_out_dir(dir)?,
        None => {
            _scratch = tempfile::tempdir().map_err(CliError::runtime)?;
            _scratch.path().to_path_buf()
        }
    };
    let channel = telemetry.channels[0].clone();
    let start = ticks.first().map_or_else(chrono::Utc::now, |(at, _)| *at);
    let service = TelemetryService::open(
        &telemetry,
        &controller_cfg,
        Arc::new(ManualClock::new(start)),
    )
    .map_err(CliError::runtime)?;
    let mut controller =
        Controller::new(controller_cfg).map_err(|e| CliError::Usage(e.to_string()))?;

    let mut entries = 0;
    let mut field_values = 0;
    let mut decisions = Vec::new();
    for (at, set) in &ticks {
        let mut fields = FieldValues::default();
        for r in set.iter() {
            if let Some(i) = channel.field_for(r.kind) {
                fields[i] = Some(r.value.to_string());
                field_values += 1;
            }
        }
        if fields.iter().any(Option::is_some) {
            service
                .ingest_update(channel.id, &channel.write_key, fields, Some(*at))
                .map_err(CliError::runtime)?;
            entries += 1;
        }
        if args.control {
            let (_, decision) = controller.tick(set, *at).map_err(CliError::runtime)?;
            decisions.push(decision);
        }
    }

    let report = ReplayReport {
        channel: channel.id,
        entries,
        field_values,
        fixtures,
        decisions: args.control.then_some(decisions),
    };
    let body = if args.json {
        to_json(&report)
    } else {
        let mut s = format!(
            "ingested {} entries ({} field values) into channel {}\n",
            report.entries, report.field_values, report.channel
        );
        for f in &report.fixtures {
            let _ = writeln!(
                s,
                "{}: {} readings, {} out of range, min {}, max {}",
                f.path, f.readings, f.out_of_range, f.min, f.max
            );
        }
        if let Some(decisions) = &report.decisions {
            s.push_str("\ndecisions:\n");
            for d in decisions {
                s.push_str(&decision_line(d));
                s.push('\n');
            }
        }
        s
    };
    emit(None, "", &body)
}
