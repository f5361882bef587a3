use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cqed_lab::{run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "cqed", version, about = "Light/atom state transfer in a lossy cavity")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML file layered over the built-in defaults.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// `key=value` override, applied after the file; repeatable.
    #[arg(long = "set", short = 's', value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory (default: config, then $CQED_OUT_DIR, then ./out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Check the integrator against closed-form cavity and Rabi solutions.
    Validate,
    /// Emission from the configured initial level under the Ω₂ rise.
    SinglePhoton,
    /// Adiabatic and incoherent absorption of λ₁ at t1_ns.
    Absorb,
    /// r = p_a/p_i against the arrival time of λ₁.
    Sweep,
    /// Photon number against the λ₂ phase, with and without Ω₁.
    Fringe,
    /// Efficiency budget and the simulated transfer per photon.
    Efficiency,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Validate => Command::Validate,
            Cmd::SinglePhoton => Command::SinglePhoton,
            Cmd::Absorb => Command::Absorb,
            Cmd::Sweep => Command::Sweep,
            Cmd::Fringe => Command::Fringe,
            Cmd::Efficiency => Command::Efficiency,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut overrides = cli.overrides;
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(w) = cli.workers {
        overrides.push(format!("workers={w}"));
    }
    if let Some(dir) = &cli.out_dir {
        overrides.push(format!("out_dir={:?}", dir.display().to_string()));
    }
    let result = RunConfig::load(cli.config.as_deref(), &overrides).and_then(|c| run(cli.command.into(), c));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
