use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use safebo_harness::config::ConfigOverrides;
use safebo_harness::{cmd_audit, cmd_replay, cmd_run, HarnessError};

#[derive(Parser)]
#[command(
    name = "safebo",
    version,
    about = "Safe Bayesian optimization benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Override the config's output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores); results are identical either way
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a comparison experiment (traces, aggregates, plots)
    Run {
        /// Experiment config (TOML, kind = "comparison")
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        /// Skip SVG rendering
        #[arg(long)]
        no_plots: bool,
    },
    /// Run a confidence-bound audit (per-schedule violation statistics)
    Audit {
        /// Experiment config (TOML, kind = "audit")
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Re-run a comparison config on one recorded function
    Replay {
        /// Function record written by a previous run (functions/fn_*.txt)
        record: PathBuf,
        /// Experiment config (TOML, kind = "comparison")
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        /// Skip SVG rendering
        #[arg(long)]
        no_plots: bool,
    },
}

fn setup(common: &CommonArgs) -> Result<ConfigOverrides, HarnessError> {
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(HarnessError::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| HarnessError::config(format!("cannot configure worker pool: {e}")))?;
    }
    Ok(ConfigOverrides {
        master_seed: common.seed,
        output_dir: common.out.clone(),
    })
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run {
            config,
            common,
            no_plots,
        } => {
            let overrides = setup(&common)?;
            cmd_run(&config, &overrides, no_plots)
        }
        Command::Audit { config, common } => {
            let overrides = setup(&common)?;
            cmd_audit(&config, &overrides)
        }
        Command::Replay {
            record,
            config,
            common,
            no_plots,
        } => {
            let overrides = setup(&common)?;
            cmd_replay(&record, &config, &overrides, no_plots)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
