use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use affecta_cli::{commands, http};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "affecta", version, about = "Context maps and behavior prioritization for a social robot")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Explore the training rooms and build the context map.
    Explore,
    /// Explore, then collect simulated votes.
    Train,
    /// Pick a behavior for the validation room.
    Validate {
        /// Trained map document; trains from scratch when omitted.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Export one layer of a saved map.
    Heatmap {
        #[arg(long)]
        map: PathBuf,
        /// `attribute:<i>` or `behavior`.
        #[arg(long, default_value = "behavior")]
        layer: String,
        /// Also print the grid as text.
        #[arg(long)]
        ascii: bool,
    },
    /// Evaluate many seeds in parallel.
    Sweep {
        #[arg(long, default_value_t = 100)]
        runs: usize,
    },
    /// Serve the trainer HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory with the trainer UI bundle.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
    /// Re-run a saved report and check it reproduces.
    Replay {
        #[arg(long)]
        report: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let c = &cli.common;
    match cli.command {
        Command::Serve { addr, ui } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(http::serve(addr, ui))
        }
        Command::Replay { report } => commands::replay_report(&report),
        command => {
            let cfg = commands::load_config(c.config.as_deref(), c.seed)?;
            let dir = commands::out_dir(&cfg, c.out.as_deref())?;
            match command {
                Command::Explore => commands::explore(&cfg, &dir),
                Command::Train => commands::train(&cfg, &dir),
                Command::Validate { map } => commands::validate(&cfg, map.as_deref(), &dir),
                Command::Heatmap { map, layer, ascii } => commands::heatmap(&map, &layer, &dir, ascii),
                Command::Sweep { runs } => commands::sweep(&cfg, c.seed.unwrap_or(cfg.seed), runs, &dir).map(|_| ()),
                Command::Serve { .. } | Command::Replay { .. } => unreachable!(),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
