use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bessel_herald_cli::analyze::analyze;
use bessel_herald_cli::config::PRESETS;
use bessel_herald_cli::{run, CliError, Scenario};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bessel-herald", version, about = "Heralded single photons from a Bessel-Gauss pumped SPDC source")]
struct Cli {
    /// Worker threads (defaults to all cores); results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pump maps, ring fit and a y-z propagation sheet.
    PumpSim(RunArgs),
    /// Conditional angular spectra and the heralded signal spot.
    SpdcSim(RunArgs),
    /// Coincidence and singles scans over the configured z planes.
    Sweep(RunArgs),
    /// Recompute reports from a run directory or a single artifact.
    Analyze {
        path: PathBuf,
        /// Write the regenerated reports here (never the input directory).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Relative FWHM growth tolerated by the range report.
        #[arg(long, default_value_t = 0.2)]
        tolerance: f64,
    },
    /// Print a built-in preset as config text.
    PrintPreset {
        #[arg(default_value = "paper-defaults")]
        name: String,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory, overriding [output] directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn simulate(scenario: Scenario, args: &RunArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let outcome = run(scenario, &text, args.out.as_deref())?;
    for w in &outcome.manifest.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", outcome.summary);
    println!("wrote {} files to {}", outcome.manifest.files.len() + 1, outcome.directory.display());
    Ok(())
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::PumpSim(a) => simulate(Scenario::PumpSim, a),
        Command::SpdcSim(a) => simulate(Scenario::SpdcSim, a),
        Command::Sweep(a) => simulate(Scenario::Sweep, a),
        Command::Analyze { path, out, tolerance } => {
            let result = analyze(path, out.as_deref().map(Path::new), *tolerance)?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", result.text());
            Ok(())
        }
        Command::PrintPreset { name } => match PRESETS.iter().find(|(n, _)| n == name) {
            Some((_, body)) => {
                print!("{body}");
                Ok(())
            }
            None => Err(CliError::Usage(format!("unknown preset '{name}'"))),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| dispatch(&cli.command)),
        Err(e) => Err(CliError::Usage(e.to_string())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
