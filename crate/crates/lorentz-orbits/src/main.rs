use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lorentz_orbits::cli::{
    cmd_check_assumptions, cmd_fields_probe, cmd_find_orbits, cmd_simulate, CliError, EXIT_CONFIG,
};
use lorentz_orbits::config::ScenarioConfig;

/// Periodic orbits of a relativistic charged particle in the fields of
/// periodically moving charges.
#[derive(Parser)]
#[command(name = "lorentz-orbits", version, disable_help_subcommand = true)]
struct Cli {
    /// Scenario configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the configured PRNG seed.
    #[arg(long, global = true)]
    seed_rng: Option<u64>,

    /// Worker thread count (env LORENTZ_ORBITS_THREADS as fallback).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured initial state and export the trajectory.
    Simulate,
    /// Run the potential/field assumption checkers.
    CheckAssumptions,
    /// Scan the configured seeds for distinct periodic orbits.
    FindOrbits,
    /// Tabulate V, A, E, B on the configured probe points.
    FieldsProbe,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let threads = cli.threads.or_else(|| {
        std::env::var("LORENTZ_ORBITS_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = threads {
        // ignore the error if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config is required"))?;
    let mut config = ScenarioConfig::from_file(config_path)?;
    if let Some(seed) = cli.seed_rng {
        config.solver.rng_seed = seed;
        config.assumptions.rng_seed = seed;
    }
    let out = config
        .output_dir
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| cli.out.clone());

    match cli.command {
        Command::Simulate => cmd_simulate(&config, &out),
        Command::CheckAssumptions => cmd_check_assumptions(&config, &out),
        Command::FindOrbits => cmd_find_orbits(&config, &out),
        Command::FieldsProbe => cmd_fields_probe(&config, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            let code = if (0..=255).contains(&e.code) { e.code } else { EXIT_CONFIG };
            ExitCode::from(code as u8)
        }
    }
}
