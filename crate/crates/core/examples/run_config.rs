//! Runs every experiment on a TOML config and writes the same artifacts the
//! `batchelor` binary does.
//!
//! `cargo run --release --example run_config -- examples/configs/perturbed.toml out/perturbed`

use std::path::PathBuf;

use batchelor::config::ExperimentConfig;
use batchelor::experiments::{run, Subcommand};

fn main() {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| "examples/configs/perturbed.toml".into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/perturbed".into()));
    let cfg = match ExperimentConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    };
    for sub in Subcommand::ALL {
        let dir = out.join(sub.name());
        match run(sub, &cfg, &dir) {
            Ok(summary) => println!("{:<12} {} -> {}", sub.name(), summary.status, dir.display()),
            Err(e) => println!("{:<12} failed: {e}", sub.name()),
        }
    }
}
