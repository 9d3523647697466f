use std::fmt::Write as _;
use std::sync::Arc;

use hydrostat_core::clock::ManualClock;
use hydrostat_core::closed_loop::{run_closed_loop, RunSummary};
use hydrostat_core::control::Actuator;
use hydrostat_core::sensors::SensorKind;
use hydrostat_telemetry::{ChannelSink, TelemetryService};
use serde::Serialize;

use super::serve::{bind, serve_until_interrupted};
use super::{emit, fresh_out_dir, to_json};
use crate::config::FileConfig;
use crate::{CliError, ClosedLoopArgs};

#[derive(Serialize)]
struct Output<'a> {
    #[serde(flatten)]
    summary: &'a RunSummary,
    channel: u64,
    channel_entries: usize,
}

fn render(out: &Output) -> String {
    let s = out.summary;
    let mut text = format!(
        "seed {}  duration {}s  ticks {}  channel {} entries {}\n\n",
        s.seed, s.duration_seconds, s.ticks, out.channel, out.channel_entries
    );
    let _ = writeln!(
        text,
        "{:<22} {:>9} {:>9} {:>9}",
        "parameter", "min", "max", "mean"
    );
    for kind in SensorKind::ALL {
        if let Some(p) = s.environment.get(&kind) {
            let _ = writeln!(
                text,
                "{:<22} {:>9.2} {:>9.2} {:>9.2}",
                kind.name(),
                p.min,
                p.max,
                p.mean
            );
        }
    }
    text.push('\n');
    for a in Actuator::ALL {
        let gap = s.min_transition_gap_seconds[a].map_or("-".to_string(), |g| format!("{g}s"));
        let _ = writeln!(
            text,
            "{:<14} transitions {:>4}  min gap {gap}",
            a.name(),
            s.transitions[a]
        );
    }
    let _ = writeln!(text, "invalid readings {}", s.invalid_readings);
    for (reason, n) in &s.alerts {
        let _ = writeln!(text, "alerts {reason}: {n}");
    }
    if let Some(f) = s.water_in_band_fraction {
        let _ = writeln!(
            text,
            "water within [{}, {}] °C after warm-up: {:.1}% of ticks",
            s.water_band.0,
            s.water_band.1,
            f * 100.0
        );
    }
    text
}

pub fn run(file: &FileConfig, args: ClosedLoopArgs) -> Result<(), CliError> {
    let cfg = file.closed_loop(args.seed, args.duration.as_deref(), "48h")?;
    let mut telemetry = file.telemetry()?;
    if cfg.controller.tick_seconds < telemetry.min_update_interval_seconds {
        return Err(CliError::Usage(format!(
            "controller.tick_seconds ({}) is shorter than telemetry.min_update_interval_seconds ({})",
            cfg.controller.tick_seconds, telemetry.min_update_interval_seconds
        )));
    }
    let _scratch;
    telemetry.data_dir = match &args.out {
        Some(dir) => fresh_out_dir(dir)?,
        None => {
            _scratch = tempfile::tempdir().map_err(CliError::runtime)?;
            _scratch.path().to_path_buf()
        }
    };
    let channel_id = telemetry.channels[0].id;
    let service = Arc::new(
        TelemetryService::open(
            &telemetry,
            &cfg.controller,
            Arc::new(ManualClock::new(cfg.start)),
        )
        .map_err(CliError::runtime)?,
    );

    let runtime = match args.port {
        Some(_) => Some(tokio::runtime::Runtime::new().map_err(CliError::runtime)?),
        None => None,
    };
    let listener = match (&runtime, args.port) {
        (Some(rt), Some(port)) => Some(rt.block_on(bind(port))?),
        _ => None,
    };
    let server = match (&runtime, listener) {
        (Some(rt), Some(listener)) => {
            Some(rt.spawn(serve_until_interrupted(listener, service.clone())))
        }
        _ => None,
    };

    let channel = service
        .channel(channel_id)
        .map_err(CliError::runtime)?
        .clone();
    let mut sink = ChannelSink::new(service.clone(), channel_id).map_err(CliError::runtime)?;
    let summary =
        run_closed_loop(&cfg, &mut &channel.control, &mut sink).map_err(CliError::runtime)?;

    let output = Output {
        summary: &summary,
        channel: channel_id,
        channel_entries: channel.log.len(),
    };
    let json = to_json(&output);
    if let Some(dir) = &args.out {
        emit(Some(dir), "summary.json", &json)?;
    }
    print!("{}", if args.json { json } else { render(&output) });

    if let (Some(rt), Some(server)) = (runtime, server) {
        rt.block_on(server).map_err(CliError::runtime)??;
    }
    Ok(())
}
