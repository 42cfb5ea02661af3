use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tailsitter::scenario::{output_root, run_scenario, write_outputs, Kind, RateSource, Scenario};
use tailsitter::{Error, Result};

/// Batch runner for the tail-sitter rotor, control, propulsion and energy
/// models. Outputs go to `$TAILSITTER_OUT/<name>/` (default `out/<name>/`).
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run { scenario: PathBuf },
    /// Fit a model to a CSV file with default settings.
    Fit {
        kind: FitKind,
        file: PathBuf,
    },
    /// Run a sweep from a config file; the `[scenario]` section is optional.
    Sweep {
        kind: SweepKind,
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FitKind {
    /// Rate model from a flight log.
    Rates,
    /// Planar power map from `pitch,throttle,power` samples.
    Planar,
    /// Pole drag area from `V,D` samples.
    Drag,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    /// Propeller blade-element sweep.
    Bem,
    /// Required aerodynamic power curve.
    Power,
}

fn stem(path: &Path) -> &str {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("input")
}

fn fit_scenario(kind: FitKind, file: &Path) -> Scenario {
    let (label, kind) = match kind {
        FitKind::Rates => (
            "rates",
            Kind::FitRates {
                source: RateSource::File(file.to_path_buf()),
                model: Default::default(),
                cutoff: tailsitter::sysid::FIT_CUTOFF,
                noise: 0.0,
            },
        ),
        FitKind::Planar => (
            "planar",
            Kind::FitPlanar {
                input: file.to_path_buf(),
            },
        ),
        FitKind::Drag => (
            "drag",
            Kind::FitDrag {
                input: file.to_path_buf(),
                rho: tailsitter::RHO_SEA_LEVEL,
            },
        ),
    };
    let name: String = format!("fit_{label}_{}", stem(file))
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect();
    Scenario { name, seed: 0, kind }
}

fn execute(cli: Cli) -> Result<PathBuf> {
    let scenario = match cli.command {
        Command::Run { scenario } => Scenario::load(&scenario, None)?,
        Command::Fit { kind, file } => fit_scenario(kind, &file),
        Command::Sweep { kind, config } => {
            let forced = match kind {
                SweepKind::Bem => "bem_sweep",
                SweepKind::Power => "power_curve",
            };
            Scenario::load(&config, Some(forced))?
        }
    };
    let outputs = run_scenario(&scenario)?;
    write_outputs(&output_root(), &scenario, &outputs)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
