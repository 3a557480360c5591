//! Config-driven experiment runner around `swr-core`.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, Context, EXIT_OK};
use config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(
    name = "swr",
    version,
    about = "Schwarz waveform relaxation experiments for the semilinear heat equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Print the default configuration as TOML and exit.
    #[arg(long)]
    pub dump_defaults: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every closed-form constant with its inputs.
    Theory(Common),
    /// Monolithic solve with field and slice output.
    Solve(Common),
    /// Run the relaxation and check the decay bound and barrier.
    Swr(Common),
    /// Repeat `swr` over `study.overlap_fractions` and tabulate the fitted rates.
    SweepStudy(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration; defaults are used for every missing key.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Concurrent band solves; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Recorded in the sidecars; the pipelines themselves are deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override a key, as `section.key=value`; repeatable.
    #[arg(long = "vary", value_name = "KEY=VALUE")]
    pub vary: Vec<String>,
}

/// Runs the parsed command line and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    if cli.dump_defaults {
        print!("{}", config::dump_defaults());
        return EXIT_OK;
    }
    let Some(command) = cli.command else {
        eprintln!("no subcommand given; see --help");
        return commands::EXIT_VALIDATION;
    };
    let (name, common) = match &command {
        Command::Theory(c) => ("theory", c),
        Command::Solve(c) => ("solve", c),
        Command::Swr(c) => ("swr", c),
        Command::SweepStudy(c) => ("sweep-study", c),
    };
    let result = load_config(common).and_then(|config| {
        let ctx = Context {
            command: name.into(),
            out: common.out.clone(),
            workers: common.workers,
            seed: common.seed,
        };
        std::fs::create_dir_all(&ctx.out)?;
        match command {
            Command::Theory(_) => commands::cmd_theory(&ctx, &config),
            Command::Solve(_) => commands::cmd_solve(&ctx, &config),
            Command::Swr(_) => commands::cmd_swr(&ctx, &config),
            Command::SweepStudy(_) => commands::cmd_sweep_study(&ctx, &config),
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, CliError> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("config: cannot read {}: {e}", path.display()))
        })?,
        None => String::new(),
    };
    Ok(config::load(&text, &common.vary)?)
}
