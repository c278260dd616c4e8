use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lindblad_mf::exec::set_thread_count;
use lindblad_mf::sweep::{emit_flow_field, load_config, run_sweep, run_trajectories, RunSummary, SweepConfig};
use lindblad_mf::{Error, Execution};

/// Mean-field, trajectory and exact steady-state sweeps of dissipative
/// spin lattice models.
#[derive(Parser)]
#[command(name = "lindblad-mf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed points and phases (mean field), ensemble estimates (qtmc) or
    /// steady states (exact) over the parameter grid.
    Sweep(RunArgs),
    /// Flow samples on a plane through the mean-field state space.
    Flowfield(RunArgs),
    /// Individual quantum trajectories with their jump events.
    Trajectory(RunArgs),
    /// Parse and validate a config without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_FATAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if matches!(e, Error::Config(_)) { EXIT_CONFIG } else { EXIT_FATAL })
}

fn prepare(args: &RunArgs) -> Result<(SweepConfig, PathBuf), Error> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::Config("no output directory (pass --out or set `output`)".into()))?;
    match args.threads {
        Some(0) => return Err(Error::Config("--threads must be >= 1".into())),
        Some(n) => {
            set_thread_count(n);
        }
        None => {}
    }
    Ok((cfg, out))
}

fn run(args: RunArgs, f: fn(&SweepConfig, &Path, Execution) -> lindblad_mf::Result<RunSummary>) -> ExitCode {
    let (cfg, out) = match prepare(&args) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let execution = if args.threads == Some(1) { Execution::Sequential } else { Execution::default() };
    match f(&cfg, &out, execution) {
        Ok(summary) => {
            let total = summary.manifest.status_per_point.len();
            eprintln!(
                "{} of {total} points ok, {} files written to {}",
                total - summary.failures,
                summary.manifest.files.len(),
                out.display()
            );
            for s in summary.manifest.status_per_point.iter().filter(|s| !s.ok) {
                eprintln!("point {} failed: {}", s.index, s.error.as_deref().unwrap_or("unknown"));
            }
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep(args) => run(args, run_sweep),
        Command::Flowfield(args) => run(args, emit_flow_field),
        Command::Trajectory(args) => run(args, run_trajectories),
        Command::ValidateConfig { config } => match load_config(&config) {
            Ok(cfg) => {
                let cells = cfg.lattice().map(|l| cfg.cells(&l).len()).unwrap_or(0);
                println!("ok: {} grid points, {cells} spins", cfg.points().len());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
    }
}
