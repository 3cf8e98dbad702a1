mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::settings::Overrides;

/// Random walks in dynamic random environments: estimation, sweeps and
/// verification suites.
#[derive(Debug, Parser)]
#[command(name = "dynwalk", version)]
struct Cli {
    /// Worker threads for trial fan-out (default: machine parallelism).
    /// Results do not depend on this value.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the speed v(eps) by Monte Carlo.
    Estimate {
        #[command(flatten)]
        sim: SimArgs,
        /// Also estimate v(-eps) with an independent seed and test antisymmetry.
        #[arg(long)]
        antisymmetry: bool,
        /// Write the paths of the first K trials to trajectories.csv.
        #[arg(long, value_name = "K", default_value_t = 0)]
        trajectories: usize,
    },
    /// Estimate v(eps) over a grid of eps values.
    Sweep {
        #[command(flatten)]
        sim: SimArgs,
        /// `start:stop:step` or a comma-separated list.
        #[arg(long, allow_hyphen_values = true, default_value = "-0.4:0.4:0.1")]
        grid: String,
    },
    /// Run a named verification suite.
    Verify {
        /// non-crossing | backward-law | detailed-balance | oracle-antisymmetry | continuous-reduction
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Build coupled forward/backward pairs at the endpoint used in the
    /// antisymmetry argument and report how often each walk reaches its
    /// typical displacement.
    Walkthrough {
        #[command(flatten)]
        sim: SimArgs,
        /// Write the first K pairs to pairs.csv.
        #[arg(long, value_name = "K", default_value_t = 10)]
        pairs: usize,
    },
    /// Re-run a manifest and check the result payload is reproduced exactly.
    Replay {
        manifest: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SimArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// frozen | iid | ssep | east (or the full kind names).
    #[arg(long)]
    env: Option<String>,
    #[arg(long = "L")]
    size: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    substeps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    /// Steps (discrete) or time horizon (continuous).
    #[arg(long = "N")]
    horizon: Option<f64>,
    /// Independent trials.
    #[arg(long = "M")]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// discrete | continuous
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl SimArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            env: self.env.clone(),
            size: self.size,
            p: self.p,
            substeps: self.substeps,
            eps: self.eps,
            horizon: self.horizon,
            trials: self.trials,
            seed: self.seed,
            mode: self.mode.clone(),
        }
    }
}

/// Failure classes mapped onto the exit-code contract.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or I/O: exit 2.
    Usage(String),
    /// A verification ran and did not pass: exit 1.
    Verification(String),
}

impl From<dynwalk::Error> for Failure {
    fn from(e: dynwalk::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Failure::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("worker pool: {e}")))?;
    }
    match cli.command {
        Command::Estimate {
            sim,
            antisymmetry,
            trajectories,
        } => {
            let cfg = settings::resolve(sim.config.as_deref(), &sim.overrides())?;
            commands::estimate(&cfg, antisymmetry, trajectories, sim.out.as_deref())
        }
        Command::Sweep { sim, grid } => {
            let cfg = settings::resolve(sim.config.as_deref(), &sim.overrides())?;
            let grid = settings::parse_grid(&grid)?;
            commands::sweep(&cfg, &grid, sim.out.as_deref())
        }
        Command::Verify { suite, seed, out } => commands::verify(&suite, seed, out.as_deref()),
        Command::Walkthrough { sim, pairs } => {
            let cfg = settings::resolve(sim.config.as_deref(), &sim.overrides())?;
            commands::walkthrough(&cfg, pairs, sim.out.as_deref())
        }
        Command::Replay { manifest, out } => commands::replay(&manifest, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
