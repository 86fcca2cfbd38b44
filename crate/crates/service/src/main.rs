use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fmds_core::time::Timestamp;
use fmds_service::{start, Config, ScenarioSource};
use tracing_subscriber::EnvFilter;

#[derive(Parser, Debug)]
#[command(name = "fmds-server", version, about = "Flow management decision support service")]
struct Args {
    /// Address to listen on.
    #[arg(long, alias = "bind", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// State directory. FMDS_DATA_DIR takes precedence when set.
    #[arg(long, default_value = "fmds-data")]
    data_dir: PathBuf,
    /// Flight schedule (JSON lines) used when the data directory is new.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Constraint overlays (JSON lines).
    #[arg(long, requires = "schedule")]
    overlays: Option<PathBuf>,
    /// Seed for a generated scenario when no schedule is given.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    flights: usize,
    #[arg(long, default_value_t = 12)]
    overlay_count: usize,
    /// Clock start (ISO-8601). Defaults to the first departure hour.
    #[arg(long, value_parser = parse_time)]
    start: Option<Timestamp>,
    /// Run the clock at this multiple of wall time.
    #[arg(long)]
    speedup: Option<f64>,
    #[arg(long, default_value_t = 60)]
    step_seconds: u32,
    /// Header carrying the caller's identity.
    #[arg(long, default_value = fmds_service::api::DEFAULT_ACTOR_HEADER)]
    actor_header: String,
}

fn parse_time(text: &str) -> Result<Timestamp, String> {
    Timestamp::parse_iso(text)
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let data_dir = std::env::var_os("FMDS_DATA_DIR").map_or(args.data_dir, PathBuf::from);
    let source = match args.schedule {
        Some(schedule) => ScenarioSource::Files {
            schedule,
            overlays: args.overlays,
        },
        None => ScenarioSource::Generated {
            seed: args.seed,
            flights: args.flights,
            overlays: args.overlay_count,
        },
    };
    let mut config = Config::new(data_dir, source);
    config.bind = args.listen;
    config.actor_header = args.actor_header;
    config.start = args.start;
    config.speedup = args.speedup;
    config.step_seconds = args.step_seconds;

    let server = match start(config).await {
        Ok(server) => server,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            return ExitCode::from(2);
        }
    };
    match server.run_until_ctrl_c().await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
