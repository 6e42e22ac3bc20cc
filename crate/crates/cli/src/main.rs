use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use v2psim_cli::sweep::{run_sweep, write_sweep_csv, SweepParam};
use v2psim_cli::{cmd_replay, cmd_run, cmd_validate, load_scenario, parse_origin};

/// Deterministic V2P pedestrian-safety co-simulation.
#[derive(Parser)]
#[command(name = "v2psim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario; exit 0 on a clean run, 2 if it ended in collision.
    Run {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for trace.csv and summary.json (created if missing).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress the summary line.
        #[arg(long)]
        quiet: bool,
    },
    /// Map a recorded pose log into the virtual frame.
    Replay {
        /// Pose log CSV (header: t,x,y,heading_deg,speed).
        #[arg(long)]
        log: PathBuf,
        /// Reference pose in the real lot, as `x,y,heading_deg`.
        #[arg(long, default_value = "0,0,0")]
        real_origin: String,
        /// Matching reference pose in the virtual world, as `x,y,heading_deg`.
        #[arg(long, default_value = "0,0,0")]
        virtual_origin: String,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Run the cross product of parameter ranges; writes sweep.csv.
    Sweep {
        /// Base scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Swept axis as `name=start:stop:step` (repeatable, stop inclusive).
        #[arg(long = "param", required = true)]
        params: Vec<String>,
        /// Worker threads; output order does not depend on this.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Override the base scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for sweep.csv (created if missing).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Parse and validate a scenario; print the fully defaulted config.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { scenario, seed, out, quiet } => {
            let outcome = cmd_run(&scenario, seed, out.as_deref(), quiet)?;
            Ok(if outcome.collided { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
        Command::Replay { log, real_origin, virtual_origin, out, quiet } => {
            let real = parse_origin(&real_origin)?;
            let virt = parse_origin(&virtual_origin)?;
            cmd_replay(&log, real, virt, out.as_deref(), quiet)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { scenario, params, workers, seed, out, quiet } => {
            let mut base = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                base.seed = seed;
            }
            let params = params
                .iter()
                .map(|s| SweepParam::parse(s))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let rows = run_sweep(&base, &params, workers)?;
            std::fs::create_dir_all(&out)?;
            let path = out.join("sweep.csv");
            let file = std::fs::File::create(&path)?;
            write_sweep_csv(&params, &rows, std::io::BufWriter::new(file))?;
            if !quiet {
                println!("{} cells -> {}", rows.len(), path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { scenario } => {
            cmd_validate(&scenario)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
