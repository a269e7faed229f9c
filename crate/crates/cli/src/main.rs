use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use bess_service::{Server, ServiceConfig, ServiceError};
use bess_sim::calibrate::{calibrate, CalibrationGrid};
use bess_sim::runner::{run_headless, sweep, write_sweep_csv};
use bess_sim::scenario::{parse_scenario, ScenarioConfig};
use clap::{Parser, Subcommand};

/// Runs load-frequency-control scenarios under network attacks.
#[derive(Debug, Parser)]
#[command(name = "bess", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run a scenario to completion and write telemetry.csv and report.json.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the scenario's `outputs.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One run per value of a scalar parameter; prints a CSV summary.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Dotted path, e.g. `attacks.s2c.drop.drop_rate`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        values: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write sweep.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the scenario over HTTP and WebSocket, starting paused.
    Serve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        port: u16,
        /// Listen on all interfaces instead of localhost.
        #[arg(long)]
        public: bool,
    },
    /// Parse and validate a scenario without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Grid-search PID gains against the scenario (no attacks applied);
    /// prints the best candidates as CSV.
    Calibrate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<bess_sim::Error> for Failure {
    fn from(e: bess_sim::Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Sim(e) => e.into(),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<ScenarioConfig, Failure> {
    let mut cfg = parse_scenario(path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Run { scenario, seed, out } => {
            let cfg = load(&scenario, seed)?;
            let dir = out.unwrap_or_else(|| cfg.outputs.dir.clone());
            let outcome = run_headless(&cfg, &dir)?;
            let s = &outcome.stability;
            println!(
                "{}: mean {:.4} Hz, p2p {:.4} Hz, abnormal {:.3} -> {}",
                s.classification,
                s.settled_mean_hz,
                s.peak_to_peak_hz,
                s.abnormal_share,
                dir.display()
            );
        }
        Cmd::Sweep { scenario, param, values, seed, out } => {
            let cfg = load(&scenario, seed)?;
            let rows = sweep(&cfg, &param, &values)?;
            write_sweep_csv(&rows, std::io::stdout().lock())?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
                let path = dir.join("sweep.csv");
                let file = std::fs::File::create(&path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
                write_sweep_csv(&rows, file)?;
            }
        }
        Cmd::Serve { scenario, port, public } => {
            let cfg = load(&scenario, None)?;
            let ip = if public { Ipv4Addr::UNSPECIFIED } else { Ipv4Addr::LOCALHOST };
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Runtime(e.to_string()))?;
            rt.block_on(async {
                let server = Server::bind(cfg, SocketAddr::from((ip, port)), ServiceConfig::default()).await?;
                println!("listening on http://{}", server.local_addr());
                server.run().await
            })?;
        }
        Cmd::Validate { scenario } => {
            let cfg = load(&scenario, None)?;
            // Also catches consumption files that are missing or too short.
            cfg.load_consumption()?;
            println!("ok {}", cfg.hash());
        }
        Cmd::Calibrate { scenario, top } => {
            let cfg = load(&scenario, None)?;
            let mut base = cfg.clone();
            base.attacks = Default::default();
            let ranked = calibrate(&base, &CalibrationGrid::default())?;
            println!("kp,ki,kd,itae,feasible");
            for c in ranked.iter().take(top) {
                println!("{},{},{},{:.6},{}", c.kp, c.ki, c.kd, c.itae, c.feasible());
            }
        }
    }
    Ok(())
}
