use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dgflow_cli::{run, CliError, Overrides, RunConfig, Scenario};

#[derive(Parser)]
#[command(name = "dgflow", version, about = "Regularized Dirac-geodesic flow on the circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the flow on the unit circle with the exact solutions
    Validate(Args),
    /// Run the gradient flow from one initial state
    Flow(Args),
    /// Run the flow for a descending list of ε, warm-starting each
    Sweep(Args),
    /// Dense spectra of the twisted operators along the initial curve
    Spectrum(Args),
    /// Merge diagnostics files into long-form plot data
    Report(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Run configuration (TOML)
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory, overrides `output_dir`
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Seed for random initial data, overrides the configured one
    #[arg(long)]
    seed: Option<u64>,
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = match cli.command {
        Command::Validate(a) => (Scenario::Validate, a),
        Command::Flow(a) => (Scenario::Flow, a),
        Command::Sweep(a) => (Scenario::Sweep, a),
        Command::Spectrum(a) => (Scenario::Spectrum, a),
        Command::Report(a) => (Scenario::Report, a),
    };
    let overrides = Overrides {
        out: args.out,
        seed: args.seed,
    };
    let result = RunConfig::load(&args.config).and_then(|c| run(scenario, c, &overrides));
    match result {
        Ok(summary) => {
            println!("{}: {:?}", scenario.label(), summary.status);
            if let Some(m) = &summary.message {
                println!("{m}");
            }
            exit(summary.exit_code())
        }
        Err(e @ (CliError::Io(_) | CliError::Config(_))) => {
            eprintln!("dgflow: {e}");
            exit(e.exit_code())
        }
    }
}
