mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Greenhouse monitoring and control: simulate, replay logs, serve
/// telemetry, run the closed loop, and analyze evaluation data.
#[derive(Debug, Parser)]
#[command(name = "hydrostat", version)]
struct Cli {
    /// TOML file with [controller], [scenario] and [telemetry] sections.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the environment simulator open-loop and print sensor readings.
    Sim(SimArgs),
    /// Ingest logged fixtures into a channel, optionally through the controller.
    Replay(ReplayArgs),
    /// Serve the telemetry HTTP API with a live controller per channel.
    Serve(ServeArgs),
    /// Simulator, controller and telemetry stepped together in simulated time.
    ClosedLoop(ClosedLoopArgs),
    /// Trial comparison and questionnaire statistics.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated span, e.g. `24h` or `90m`.
    #[arg(long)]
    duration: Option<String>,
    #[arg(long)]
    json: bool,
    /// Directory for the readings file instead of stdout.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// `date,time,kind,value` log; repeat for several logs.
    #[arg(long = "fixture", value_name = "PATH", required = true)]
    fixtures: Vec<PathBuf>,
    /// Feed each merged timestamp through the controller and print decisions.
    #[arg(long)]
    control: bool,
    #[arg(long)]
    json: bool,
    /// Directory for the channel log; a temporary one is used otherwise.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Directory for channel logs; overrides `telemetry.data_dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClosedLoopArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated span, e.g. `48h`.
    #[arg(long)]
    duration: Option<String>,
    #[arg(long)]
    json: bool,
    /// Directory for the channel log and `summary.json`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also serve the HTTP API during the run and keep serving afterwards.
    #[arg(long)]
    port: Option<u16>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// `parameter,trial,prototype,commercial` CSV.
    #[arg(long, value_name = "PATH")]
    trials: Option<PathBuf>,
    /// One header row of item labels, one row of 1-5 scores per respondent.
    #[arg(long, value_name = "PATH")]
    survey: Option<PathBuf>,
    #[arg(long)]
    json: bool,
    /// Directory for the computed-cell CSV.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or inputs; nothing has run.
    Usage(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl CliError {
    pub fn runtime(e: impl fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match config::FileConfig::load(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    let result = match cli.command {
        Command::Sim(args) => commands::sim::run(&file, args),
        Command::Replay(args) => commands::replay::run(&file, args),
        Command::Serve(args) => commands::serve::run(&file, args),
        Command::ClosedLoop(args) => commands::closed_loop::run(&file, args),
        Command::Analyze(args) => commands::analyze::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        CliError::Usage(_) => ExitCode::from(2),
        CliError::Runtime(_) => ExitCode::from(1),
    }
}
