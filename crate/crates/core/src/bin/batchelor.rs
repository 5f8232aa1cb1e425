use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand as ClapSubcommand};

use batchelor::config::ExperimentConfig;
use batchelor::experiments::{run, Subcommand};
use batchelor::Error;

/// Batchelor-spectrum experiments for pulsed-diffusion scalars on the torus.
///
/// Every experiment reads a TOML config (see `print-config` for all keys and
/// defaults) and writes CSV/JSON artifacts plus `summary.json` into `--out`.
/// Exit status: 0 ok, 2 config error, 3 numerical failure.
/// `BATCHELOR_THREADS` caps the worker thread count.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Pulse norms, centroid drift and variance (pulses.csv, track.csv).
    Pulses(RunArgs),
    /// Stationary spectrum E|g(k)|^2 (spectrum.csv).
    Stationary(RunArgs),
    /// Cumulative law E||P_{<=N} g||^2 (cumulative.csv).
    Cumulative(RunArgs),
    /// Exponential-shell masses (shells.csv).
    Shells(RunArgs),
    /// Sector maxima away from the stable line (sector.csv).
    Sector(RunArgs),
    /// Off-pulse mass below a radius.
    Offpulse(RunArgs),
    /// Mass in the dissipative range |k| >= kappa^{-1/2}.
    Dissipative(RunArgs),
    /// Decay rates, enhanced dissipation and critical scales (probes.csv).
    Decay(RunArgs),
    /// Monte Carlo cross-checks (mc_report.json).
    Mc(RunArgs),
    /// Self-checks on the configured map (validate.json).
    Validate(RunArgs),
    /// Print the default config.
    PrintConfig,
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error kind={} code={} message={}", e.kind(), e.exit_code(), e.to_string().replace('\n', " "));
    ExitCode::from(e.exit_code() as u8)
}

fn configure_threads() {
    let Ok(v) = std::env::var("BATCHELOR_THREADS") else { return };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring BATCHELOR_THREADS={v:?}"),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    configure_threads();
    let cli = Cli::parse();
    let (sub, args) = match cli.command {
        Command::PrintConfig => {
            return match ExperimentConfig::default().to_toml() {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            };
        }
        Command::Pulses(a) => (Subcommand::Pulses, a),
        Command::Stationary(a) => (Subcommand::Stationary, a),
        Command::Cumulative(a) => (Subcommand::Cumulative, a),
        Command::Shells(a) => (Subcommand::Shells, a),
        Command::Sector(a) => (Subcommand::Sector, a),
        Command::Offpulse(a) => (Subcommand::Offpulse, a),
        Command::Dissipative(a) => (Subcommand::Dissipative, a),
        Command::Decay(a) => (Subcommand::Decay, a),
        Command::Mc(a) => (Subcommand::Mc, a),
        Command::Validate(a) => (Subcommand::Validate, a),
    };
    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    match run(sub, &cfg, &args.out) {
        Ok(summary) => {
            println!("{} ok -> {}", summary.subcommand, args.out.join("summary.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
