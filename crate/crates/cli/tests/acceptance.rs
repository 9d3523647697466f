//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any criterion fails.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitCode, Stdio};
use std::sync::{Arc, Barrier, Mutex};
use std::thread;
use std::time::{Duration as StdDuration, Instant};

use chrono::{DateTime, Datelike, Duration, TimeZone, Utc};
use hydrostat_core::clock::{ManualClock, SystemClock};
use hydrostat_core::closed_loop::{run_closed_loop, ClosedLoopConfig, NullSink};
use hydrostat_core::control::{
    Actuator, AlertReason, Controller, ControllerConfig, Switch, Thresholds,
};
use hydrostat_core::evaluation::{
    compare_trial_pairs, grand_mean, percentage_difference, percentage_differences, raw_alpha,
    read_trials, EvalError, SurveyMatrix,
};
use hydrostat_core::fixtures::read_fixture;
use hydrostat_core::simulator::merge_ticks;
use hydrostat_core::Exec;
use hydrostat_telemetry::{
    FeedFilter, FieldValues, TelemetryConfig, TelemetryError, TelemetryService,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;
type Check = fn() -> Verdict;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn trial_table() -> Verdict {
    const PRINTED: [f64; 15] = [
        7.37, 0.9, 0.3, 1.32, 0.18, 2.33, 3.5, 3.1, 0.0, 4.1, 6.8, 6.8, 1.1, 2.4, 2.4,
    ];
    const TOLERANCE: f64 = 0.15;
    let started = Instant::now();
    let file = File::open(fixture("trials.csv")).map_err(|e| e.to_string())?;
    let pairs = read_trials(file).map_err(|e| e.to_string())?;
    let report = compare_trial_pairs(&pairs, &Thresholds::default()).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let cells: Vec<f64> = report.cells().map(|(_, c)| c.percent_difference).collect();
    ensure(cells.len() == PRINTED.len(), || {
        format!("{} cells, expected 15", cells.len())
    })?;
    let worst = cells
        .iter()
        .zip(PRINTED)
        .map(|(got, want)| (got - want).abs())
        .fold(0.0, f64::max);
    ensure(worst <= TOLERANCE, || {
        format!("worst deviation {worst:.4} > {TOLERANCE}")
    })?;
    ensure(elapsed < StdDuration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "15/15 cells within ±{TOLERANCE} (worst {worst:.3}), {elapsed:?}"
    ))
}

fn grand_means() -> Verdict {
    let sets: [(&[f64], f64, &str, Option<&str>); 7] = [
        (
            &[4.30, 4.30, 4.20, 4.10, 3.70, 4.30, 3.90, 4.00, 4.30],
            4.12,
            "Agree",
            Some("Very Good"),
        ),
        (
            &[4.20, 4.40, 3.90, 4.10, 4.40],
            4.20,
            "Strongly Agree",
            Some("Excellent"),
        ),
        (
            &[4.40, 4.70, 4.10, 4.00, 3.80, 4.00],
            4.17,
            "Agree",
            Some("Very Good"),
        ),
        (&[3.80, 3.80, 3.80, 4.10], 3.88, "Agree", None),
        (
            &[3.80, 4.30, 3.80, 3.80, 4.00, 4.20, 4.30, 3.80],
            4.00,
            "Agree",
            None,
        ),
        (
            &[3.60, 4.10, 3.90, 3.40, 4.20, 4.10],
            3.88,
            "Agree",
            Some("Very Good"),
        ),
        (
            &[4.60, 3.60, 4.10, 4.10, 3.90],
            4.06,
            "Agree",
            Some("Very Good"),
        ),
    ];
    let mut shown = Vec::new();
    for (means, want, agreement, quality) in sets {
        let g = grand_mean(means).map_err(|e| e.to_string())?;
        ensure(g.rounded == want, || format!("{} != {want}", g.rounded))?;
        ensure(g.band.agreement() == agreement, || {
            format!("{want}: {}", g.band)
        })?;
        if let Some(q) = quality {
            ensure(g.band.quality() == q, || format!("{want}: {}", g.band))?;
        }
        shown.push(format!("{:.2}", g.rounded));
    }
    Ok(format!(
        "{} with matching interpretations",
        shown.join(", ")
    ))
}

fn covariance_alpha(columns: &[Vec<f64>]) -> f64 {
    let k = columns.len() as f64;
    let n = columns[0].len() as f64;
    let means: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let (mut trace, mut total) = (0.0, 0.0);
    for (i, a) in columns.iter().enumerate() {
        for (j, b) in columns.iter().enumerate() {
            let cov: f64 = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - means[i]) * (y - means[j]))
                .sum::<f64>()
                / (n - 1.0);
            total += cov;
            if i == j {
                trace += cov;
            }
        }
    }
    k / (k - 1.0) * (1.0 - trace / total)
}

fn alpha_properties() -> Verdict {
    let seq = Exec::Sequential;
    let column = vec![2.0, 4.0, 1.0, 5.0, 3.0, 3.0, 4.0];
    for k in 2..=10 {
        let a = raw_alpha(&vec![column.clone(); k], seq).map_err(|e| e.to_string())?;
        ensure((a - 1.0).abs() <= 1e-12, || {
            format!("identical items, k={k}: {a}")
        })?;
    }
    for i in 1..=9 {
        let r = i as f64 / 10.0;
        let x = [1.0, -1.0, 1.0, -1.0];
        let z = [1.0, 1.0, -1.0, -1.0];
        let y: Vec<f64> = x
            .iter()
            .zip(&z)
            .map(|(a, b)| r * a + (1.0 - r * r).sqrt() * b)
            .collect();
        let a = raw_alpha(&[x.to_vec(), y], seq).map_err(|e| e.to_string())?;
        let want = 2.0 * r / (1.0 + r);
        ensure((a - want).abs() <= 1e-9, || format!("r={r}: {a} vs {want}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2022);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < 100 {
        let items = rng.random_range(2..=20);
        let respondents = rng.random_range(3..=30);
        let rows: Vec<Vec<u8>> = (0..respondents)
            .map(|_| (0..items).map(|_| rng.random_range(1..=5)).collect())
            .collect();
        let labels = (1..=items).map(|i| format!("q{i}")).collect();
        let columns = SurveyMatrix::from_rows(labels, &rows)
            .map_err(|e| e.to_string())?
            .columns_f64();
        match raw_alpha(&columns, Exec::Parallel) {
            Ok(a) => {
                let oracle = covariance_alpha(&columns);
                worst = worst.max((a - oracle).abs());
                checked += 1;
            }
            Err(EvalError::DegenerateVariance(_)) => continue,
            Err(e) => return Err(e.to_string()),
        }
    }
    ensure(worst <= 1e-9, || format!("oracle deviation {worst:e}"))?;
    Ok(format!(
        "identical items = 1, 2r/(1+r) for r = 0.1..0.9, 100 random matrices within {worst:.1e} of the covariance oracle"
    ))
}

fn fixture_validation() -> Verdict {
    let read = |name: &str| read_fixture(fixture(name)).map_err(|e| e.to_string());
    let ph = read("ph_level.csv")?;
    let invalid = ph.iter().filter(|r| !r.is_valid()).count();
    ensure(ph.len() == 9 && invalid == 3, || {
        format!("pH: {invalid} of {} out of range", ph.len())
    })?;
    let span = |rs: &[hydrostat_core::sensors::SensorReading]| {
        rs.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.value), hi.max(r.value))
            })
    };
    let air = span(&read("air_temperature.csv")?);
    ensure(air == (26.0, 34.0), || format!("air span {air:?}"))?;
    let water = span(&read("water_temperature.csv")?);
    ensure(water.1 == 32.69, || format!("water max {}", water.1))?;
    Ok(format!(
        "pH 3/9 out of range, air min/max {}/{}, water max {}",
        air.0, air.1, water.1
    ))
}

fn controller_replay() -> Verdict {
    let config = ControllerConfig::default().without_deadband();
    let mut c = Controller::new(config.clone()).map_err(|e| e.to_string())?;
    let water = read_fixture(fixture("water_temperature.csv")).map_err(|e| e.to_string())?;
    let mut on = Vec::new();
    for (at, set) in merge_ticks(water) {
        let (state, _) = c.tick(&set, at).map_err(|e| e.to_string())?;
        on.push((at.day(), state.cooling_pump.state == Switch::On));
    }
    let wrong: Vec<_> = on
        .iter()
        .filter(|(day, is_on)| (*day == 25) != *is_on)
        .collect();
    ensure(wrong.is_empty(), || format!("cooling mismatches {wrong:?}"))?;

    let mut c = Controller::new(config).map_err(|e| e.to_string())?;
    let ph = read_fixture(fixture("ph_level.csv")).map_err(|e| e.to_string())?;
    let (mut alerts, mut changes) = (0, 0);
    for (at, set) in merge_ticks(ph) {
        let before = c.state().dosing_pump.state;
        let (state, decision) = c.tick(&set, at).map_err(|e| e.to_string())?;
        let n = decision.alerts_with(AlertReason::InvalidReading).count();
        if n > 0 {
            alerts += n;
            if state.dosing_pump.state != before
                || decision.transitions.contains(&Actuator::DosingPump)
            {
                changes += 1;
            }
        }
    }
    ensure(alerts == 3 && changes == 0, || {
        format!("{alerts} invalid-reading alerts, {changes} dosing changes")
    })?;
    Ok(
        "cooling on for exactly the three 05-25 entries; 3 invalid pH alerts, 0 dosing changes"
            .into(),
    )
}

fn closed_loop() -> Verdict {
    const MIN_FRACTION: f64 = 0.95;
    let cfg = ClosedLoopConfig::default();
    let dwell = cfg.controller.dwell_seconds as i64;
    let mut c = Controller::new(cfg.controller.clone()).map_err(|e| e.to_string())?;
    let summary = run_closed_loop(&cfg, &mut c, &mut NullSink).map_err(|e| e.to_string())?;
    ensure(cfg.duration_seconds == 48 * 3600, || {
        "run is not 48 h".into()
    })?;
    let fraction = summary
        .water_in_band_fraction
        .ok_or("no ticks after warm-up")?;
    ensure(summary.water_band == (26.0, 33.0), || {
        format!("band {:?}", summary.water_band)
    })?;
    ensure(fraction >= MIN_FRACTION, || {
        format!("{:.2}% in band", fraction * 100.0)
    })?;
    let mut transitions = 0;
    for a in Actuator::ALL {
        let times: Vec<DateTime<Utc>> = summary
            .trace
            .iter()
            .filter(|t| t.transitions.contains(&a))
            .map(|t| t.at)
            .collect();
        transitions += times.len();
        if let Some(w) = times
            .windows(2)
            .find(|w| (w[1] - w[0]).num_seconds() < dwell)
        {
            return Err(format!(
                "{a} switched {}s apart",
                (w[1] - w[0]).num_seconds()
            ));
        }
    }
    Ok(format!(
        "seed {}: {:.1}% of ticks in [26, 33] after hour 1, {transitions} transitions all ≥ {dwell}s apart",
        cfg.sim.seed,
        fraction * 100.0
    ))
}

fn one_field(i: usize, v: String) -> FieldValues {
    let mut f = FieldValues::default();
    f[i] = Some(v);
    f
}

fn concurrent_writers() -> Result<String, String> {
    const WRITERS: usize = 1000;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = TelemetryConfig {
        data_dir: dir.path().to_path_buf(),
        min_update_interval_seconds: 0,
        ..TelemetryConfig::default()
    };
    let svc = Arc::new(
        TelemetryService::open(&cfg, &ControllerConfig::default(), Arc::new(SystemClock))
            .map_err(|e| e.to_string())?,
    );
    let barrier = Arc::new(Barrier::new(WRITERS));
    let handles: Vec<_> = (0..WRITERS)
        .map(|w| {
            let (svc, barrier) = (svc.clone(), barrier.clone());
            thread::spawn(move || {
                barrier.wait();
                svc.ingest_update(1, "dev-write-key", one_field(w % 5, format!("{w}")), None)
            })
        })
        .collect();
    let mut ids = Vec::with_capacity(WRITERS);
    for h in handles {
        ids.push(
            h.join()
                .map_err(|_| "writer panicked")?
                .map_err(|e| e.to_string())?,
        );
    }
    ids.sort_unstable();
    ensure(ids == (1..=WRITERS as u64).collect::<Vec<_>>(), || {
        "ids are not 1..1000".into()
    })?;
    drop(svc);
    let reopened =
        TelemetryService::open(&cfg, &ControllerConfig::default(), Arc::new(SystemClock))
            .map_err(|e| e.to_string())?;
    let stored = reopened
        .query_feeds(1, None, FeedFilter::All)
        .map_err(|e| e.to_string())?;
    ensure(stored.len() == WRITERS, || {
        format!("{} entries after reopen", stored.len())
    })?;
    Ok(format!("{WRITERS} concurrent writers got ids 1..{WRITERS}"))
}

/// A `hydrostat serve` child that is SIGKILLed on drop.
struct Server {
    child: Child,
    base: String,
}

impl Server {
    fn start(data: &Path) -> Result<Self, String> {
        let mut child = Command::new(env!("CARGO_BIN_EXE_hydrostat"))
            .args(["serve", "--port", "0", "--out"])
            .arg(data)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())?;
        let mut line = String::new();
        BufReader::new(child.stdout.take().ok_or("no stdout")?)
            .read_line(&mut line)
            .map_err(|e| e.to_string())?;
        let base = line
            .trim()
            .strip_prefix("listening on ")
            .ok_or_else(|| format!("unexpected first line `{line}`"))?
            .to_string();
        Ok(Self { child, base })
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.kill();
    }
}

fn http() -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder()
        .no_proxy()
        .timeout(StdDuration::from_secs(10))
        .build()
        .expect("http client")
}

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2022, 5, 23, 16, 0, 0).unwrap()
}

/// Writes until killed; returns the acknowledged `(id, value)` pairs.
fn write_until_killed(server: &mut Server, first: u64, kill_after: usize) -> Vec<(u64, String)> {
    let acked = Arc::new(Mutex::new(Vec::new()));
    let writer = {
        let (acked, base) = (acked.clone(), server.base.clone());
        thread::spawn(move || {
            let client = http();
            for i in first.. {
                let at = t0() + Duration::seconds(15 * i as i64);
                let value = format!("{}.{:02}", 20 + i % 10, i % 100);
                let resp = client
                    .post(format!("{base}/update"))
                    .query(&[
                        ("api_key", "dev-write-key"),
                        ("field5", value.as_str()),
                        ("created_at", &at.format("%Y-%m-%dT%H:%M:%SZ").to_string()),
                    ])
                    .send();
                let Ok(resp) = resp else { break };
                if !resp.status().is_success() {
                    break;
                }
                let Ok(body) = resp.text() else { break };
                let Ok(id) = body.trim().parse::<u64>() else {
                    break;
                };
                acked.lock().unwrap().push((id, value));
            }
        })
    };
    while acked.lock().unwrap().len() < kill_after {
        thread::sleep(StdDuration::from_millis(2));
    }
    server.kill();
    let _ = writer.join();
    let acked = acked.lock().unwrap().clone();
    acked
}

fn feeds(client: &reqwest::blocking::Client, base: &str) -> Result<Vec<(u64, String)>, String> {
    let body: serde_json::Value = client
        .get(format!("{base}/channels/1/feeds.json"))
        .send()
        .and_then(|r| r.json())
        .map_err(|e| e.to_string())?;
    body["feeds"]
        .as_array()
        .ok_or("no feeds array")?
        .iter()
        .map(|f| {
            Ok((
                f["entry_id"].as_u64().ok_or("no entry_id")?,
                f["field5"].as_str().unwrap_or_default().to_string(),
            ))
        })
        .collect()
}

fn kill_restart_export() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let client = http();
    let mut acked: Vec<(u64, String)> = Vec::new();
    for round in 0..3 {
        let mut server = Server::start(dir.path())?;
        let stored = feeds(&client, &server.base)?;
        let first = stored.last().map_or(1, |(id, _)| id + 1);
        for (id, value) in &acked {
            if !stored.contains(&(*id, value.clone())) {
                return Err(format!("round {round}: acknowledged entry {id} lost"));
            }
        }
        acked.extend(write_until_killed(&mut server, first, 40));
    }
    let server = Server::start(dir.path())?;
    let stored = feeds(&client, &server.base)?;
    let lost = acked.iter().filter(|a| !stored.contains(a)).count();
    ensure(lost == 0, || format!("{lost} acknowledged entries lost"))?;
    ensure(
        stored.iter().map(|(id, _)| *id).eq(1..=stored.len() as u64),
        || "ids not gapless".into(),
    )?;

    let export = client
        .get(format!("{}/channels/1/feeds.csv", server.base))
        .send()
        .and_then(|r| r.text())
        .map_err(|e| e.to_string())?;
    let copy = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = TelemetryConfig {
        data_dir: copy.path().to_path_buf(),
        ..TelemetryConfig::default()
    };
    let svc = TelemetryService::open(&cfg, &ControllerConfig::default(), Arc::new(SystemClock))
        .map_err(|e| e.to_string())?;
    svc.import_csv(1, "dev-write-key", &export)
        .map_err(|e| e.to_string())?;
    let again = svc.export_csv(1, None).map_err(|e| e.to_string())?;
    ensure(again == export, || "re-exported csv differs".into())?;

    let update = |created_at: Option<&str>| {
        let mut q = vec![("api_key", "dev-write-key"), ("field1", "27.5")];
        if let Some(at) = created_at {
            q.push(("created_at", at));
        }
        client
            .post(format!("{}/update", server.base))
            .query(&q)
            .send()
            .map(|r| r.status().as_u16())
            .map_err(|e| e.to_string())
    };
    let first = update(None)?;
    let second = update(None)?;
    ensure((first, second) == (200, 429), || {
        format!("back-to-back writes gave {first}, {second}")
    })?;
    Ok(format!(
        "{} acknowledged entries survived 3 SIGKILLs, {} stored, csv round trip identical, back-to-back HTTP write 429",
        acked.len(),
        stored.len()
    ))
}

fn rate_limiter() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = TelemetryConfig {
        data_dir: dir.path().to_path_buf(),
        ..TelemetryConfig::default()
    };
    let clock = Arc::new(ManualClock::new(t0()));
    let svc = TelemetryService::open(&cfg, &ControllerConfig::default(), clock.clone())
        .map_err(|e| e.to_string())?;
    let write = |v: &str| svc.ingest_update(1, "dev-write-key", one_field(0, v.into()), None);
    write("26").map_err(|e| e.to_string())?;
    let mut rejected = 0;
    for _ in 1..15 {
        clock.advance(Duration::seconds(1));
        match write("26") {
            Err(TelemetryError::RateLimited { .. }) => rejected += 1,
            other => return Err(format!("write inside the interval gave {other:?}")),
        }
    }
    clock.advance(Duration::seconds(1));
    write("26").map_err(|e| format!("write at 15 s rejected: {e}"))?;
    Ok(format!(
        "{rejected}/14 writes inside 15 s rejected, write at 15 s accepted"
    ))
}

fn telemetry() -> Verdict {
    let parts = [
        concurrent_writers()?,
        kill_restart_export()?,
        rate_limiter()?,
    ];
    Ok(parts.join("; "))
}

fn percentage_difference_properties() -> Verdict {
    const PAIRS: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let pairs: Vec<(f64, f64)> = (0..PAIRS)
        .map(|i| {
            let a: f64 = rng.random_range(-1e4..1e4);
            let b = match i % 10 {
                0 => a,
                1 => -a,
                _ => rng.random_range(-1e4..1e4),
            };
            (a, b)
        })
        .collect();
    let batch = percentage_differences(&pairs, Exec::Parallel);
    for (&(a, b), d) in pairs.iter().zip(&batch) {
        if a + b == 0.0 {
            ensure(matches!(d, Err(EvalError::ZeroMean { .. })), || {
                format!("({a}, {b}) zero sum gave {d:?}")
            })?;
            continue;
        }
        let d = *d.as_ref().map_err(|e| format!("({a}, {b}): {e}"))?;
        let swapped = percentage_difference(b, a).map_err(|e| e.to_string())?;
        ensure(d == swapped, || format!("({a}, {b}) not symmetric"))?;
        ensure((d == 0.0) == (a == b), || format!("({a}, {b}) gave {d}"))?;
        let k: f64 = rng.random_range(1e-3..1e3);
        let scaled = percentage_difference(a * k, b * k).map_err(|e| e.to_string())?;
        ensure((scaled - d).abs() <= 1e-9 * d.max(1.0), || {
            format!("({a}, {b}) x {k}: {scaled} vs {d}")
        })?;
    }
    Ok(format!(
        "symmetry, scale invariance, zero iff equal, zero-sum error over {PAIRS} pairs"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 8] = [
        ("trial comparison", trial_table),
        ("grand means", grand_means),
        ("cronbach alpha properties", alpha_properties),
        ("fixture validation", fixture_validation),
        ("controller replay", controller_replay),
        ("closed loop", closed_loop),
        ("telemetry", telemetry),
        (
            "percentage difference properties",
            percentage_difference_properties,
        ),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match verdict {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
