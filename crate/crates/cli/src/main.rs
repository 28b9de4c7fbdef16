//! Police commissioner console. Run without a subcommand for the
//! interactive menu; every menu action is also a subcommand with the
//! same repository and file effects.

mod commands;
mod config;
mod ops;
mod session;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use patrol_core::model::Tick;

use crate::commands::{QueryArgs, SimulateArgs};
use crate::config::Config;
use crate::ops::Failure;

#[derive(Parser)]
#[command(
    name = "commissioner",
    version,
    about = "Patrol data console: RFID detection, zone aggregation, trajectory anonymization, routing benchmarks"
)]
struct Cli {
    /// Officer registry file: aggregator id on the first line, then one officer id per line.
    #[arg(long, global = true, value_name = "FILE")]
    registry: Option<PathBuf>,

    /// Pattern repository file; created on first store.
    #[arg(long, global = true, value_name = "FILE")]
    repo: Option<PathBuf>,

    /// key=value config file (paths inside resolve relative to it).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Seed for the anonymizer's randomized passes.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Split scanned RFID tags into registered officers and criminals.
    Detect {
        #[arg(required = true, value_name = "ID")]
        ids: Vec<u64>,
    },
    /// Aggregate officer sighting files for one zone and store pattern records.
    Process {
        /// Zone number; its officers come from the config's zone.N key.
        #[arg(long, value_name = "N")]
        zone: u32,
        /// Skip the batch if these exact files were already stored.
        #[arg(long)]
        guard: bool,
        /// One sighting file per reporting officer.
        #[arg(required = true, value_name = "FILE")]
        files: Vec<PathBuf>,
    },
    /// Anonymize a trajectory dataset: clusters of at least K within diameter DELTA.
    Obfuscate {
        /// Anonymity level (minimum cluster size, >= 2).
        #[arg(long, value_name = "K")]
        k: usize,
        /// Uncertainty (maximum cluster diameter, > 0).
        #[arg(long, value_name = "D")]
        delta: f64,
        /// Trajectory file; defaults to the config's data= entry.
        #[arg(long, value_name = "FILE")]
        data: Option<PathBuf>,
        /// Output file; defaults to the config's anon_out=, else anonymized.txt.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Compare randomized vs shortest-path routing across a load sweep.
    Simulate {
        /// Topology file: "range R", "aggregator ID", then "id x y" lines.
        #[arg(long, value_name = "FILE")]
        topology: Option<PathBuf>,
        /// Seed range a..b (inclusive) or a single seed.
        #[arg(long, default_value = "0..19", value_name = "A..B")]
        seeds: String,
        /// Comma-separated injection rates in reports per tick.
        #[arg(long, default_value = "0.25,0.5,1.0", value_name = "L1,L2,…")]
        loads: String,
        /// Random-walk hops before each share turns toward the aggregator.
        #[arg(long, default_value_t = 8, value_name = "N")]
        ttl: u32,
        /// Shares per report.
        #[arg(long, default_value_t = 2, value_name = "M")]
        shares: u8,
        /// Shares needed to reconstruct a report.
        #[arg(long, default_value_t = 2, value_name = "T")]
        threshold: u8,
        /// Ticks per run.
        #[arg(long, default_value_t = 400, value_name = "N")]
        duration: Tick,
        /// Inject only from these node ids (comma or space separated).
        #[arg(long, value_name = "IDS")]
        sources: Option<String>,
        /// Also write the sweep as tab-separated plot data.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Ask the pattern repository; exactly one selector.
    Query {
        /// All records for this criminal id.
        #[arg(long, value_name = "ID")]
        criminal: Option<u64>,
        /// All records for this zone.
        #[arg(long, value_name = "N")]
        zone: Option<u32>,
        /// How many crimes are recorded for this criminal id.
        #[arg(long, value_name = "ID")]
        count: Option<u64>,
        /// Records whose time window overlaps T0..T1.
        #[arg(long, value_name = "T0..T1")]
        window: Option<String>,
        /// Tab-separated output for scripts.
        #[arg(long)]
        tsv: bool,
    },
    /// Run the frozen load sweep on the bundled 50-node topology.
    Bench {
        /// Override the bundled topology.
        #[arg(long, value_name = "FILE")]
        topology: Option<PathBuf>,
        /// Also write the sweep as tab-separated plot data.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path).map_err(|e| Failure::Usage(format!("{e:#}")))?,
        None => Config::default(),
    };
    if let Some(path) = cli.registry {
        config.registry = Some(path);
    }
    if let Some(path) = cli.repo {
        config.repo = Some(path);
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }

    match cli.command {
        None => session::run(&config).map(|code| code as u8),
        Some(Command::Detect { ids }) => commands::detect(&config, &ids).map(|()| 0),
        Some(Command::Process { zone, guard, files }) => {
            commands::process(&config, zone, &files, guard).map(|()| 0)
        }
        Some(Command::Obfuscate { k, delta, data, out }) => {
            commands::obfuscate(&config, k, delta, data, out).map(|()| 0)
        }
        Some(Command::Simulate {
            topology,
            seeds,
            loads,
            ttl,
            shares,
            threshold,
            duration,
            sources,
            out,
        }) => {
            let args = SimulateArgs {
                topology,
                seeds,
                loads,
                ttl,
                shares,
                threshold,
                duration,
                sources,
                out,
            };
            commands::simulate(&config, &args).map(|()| 0)
        }
        Some(Command::Query {
            criminal,
            zone,
            count,
            window,
            tsv,
        }) => {
            let args = QueryArgs {
                criminal,
                zone,
                count,
                window,
                tsv,
            };
            commands::query(&config, &args).map(|()| 0)
        }
        Some(Command::Bench { topology, out }) => {
            commands::bench(&config, topology, out).map(|()| 0)
        }
    }
}
