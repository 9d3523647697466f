use std::io::Write as _;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use hydrostat_core::clock::SystemClock;
use hydrostat_telemetry::{router, TelemetryService};

use crate::config::FileConfig;
use crate::{CliError, ServeArgs};

/// Ticks every channel's controller on its latest readings.
pub async fn tick_loop(service: Arc<TelemetryService>, every: Duration) {
    let mut interval = tokio::time::interval(every);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        interval.tick().await;
        let now = service.now();
        let ids: Vec<u64> = service.channel_ids().collect();
        for id in ids {
            if let Err(e) = service.tick_channel(id, now) {
                eprintln!("channel {id}: tick failed: {e}");
            }
        }
    }
}

/// Binds the API on localhost and prints the address once listening.
pub async fn bind(port: u16) -> Result<tokio::net::TcpListener, CliError> {
    let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], port)))
        .await
        .map_err(|e| CliError::Runtime(format!("cannot bind port {port}: {e}")))?;
    let addr = listener.local_addr().map_err(CliError::runtime)?;
    println!("listening on http://{addr}");
    let _ = std::io::stdout().flush();
    Ok(listener)
}

pub async fn serve_until_interrupted(
    listener: tokio::net::TcpListener,
    service: Arc<TelemetryService>,
) -> Result<(), CliError> {
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(CliError::runtime)
}

pub fn run(file: &FileConfig, args: ServeArgs) -> Result<(), CliError> {
    let controller = file.controller()?;
    let mut telemetry = file.telemetry()?;
    if let Some(dir) = args.out {
        telemetry.data_dir = dir;
    }
    let service = Arc::new(
        TelemetryService::open(&telemetry, &controller, Arc::new(SystemClock)).map_err(
            |e| match e {
                hydrostat_telemetry::TelemetryError::Config(m) => CliError::Usage(m),
                other => CliError::runtime(other),
            },
        )?,
    );
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::runtime)?;
    runtime.block_on(async move {
        let listener = bind(args.port).await?;
        tokio::spawn(tick_loop(
            service.clone(),
            Duration::from_secs(controller.tick_seconds),
        ));
        serve_until_interrupted(listener, service).await
    })
}
