use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cgpe::config::{ExperimentConfig, Kind, Overrides, Preset};
use cgpe::harness::{exit_code, run, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "cgpe", version, about = "Complex Gross-Pitaevskii experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for a radial stationary state.
    Stationary(Common),
    /// Bogoliubov-de Gennes scan of a stationary state.
    Stability(Common),
    /// Maximum growth rate against the pump radius.
    Curve(Common),
    /// Pseudo-arclength continuation of a stationary state.
    Continue(Common),
    /// Split-step time evolution on a 2D grid.
    Evolve(Common),
    /// Vortex census over stored snapshots.
    Census(Common),
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: cgpe::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let (kind, args) = match cli.command {
        Command::Stationary(a) => (Kind::Stationary, a),
        Command::Stability(a) => (Kind::Stability, a),
        Command::Curve(a) => (Kind::Curve, a),
        Command::Continue(a) => (Kind::Continue, a),
        Command::Evolve(a) => (Kind::Evolve, a),
        Command::Census(a) => (Kind::Census, a),
    };
    let overrides = Overrides {
        out: args.out,
        preset: args.preset,
        seed: args.seed,
    };
    let result =
        ExperimentConfig::load(&args.config, kind, &overrides).and_then(|config| run(&config));
    match &result {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for line in &report.lines {
                println!("{line}");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
