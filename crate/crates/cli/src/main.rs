use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcr_cli::commands::{run_compare, run_fit, OutputFormat, RunConfig};
use pcr_cli::data::{ResponseScale, Standardize};
use pcr_cli::error::exit;
use pcr_cli::simulate::run_simulate;
use pcr_cli::AppError;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  I/O or other failure
  2  invalid arguments (including d outside 1..p)
  3  CSV / config parse or format error, zero-variance column
  4  rank-deficient design
  5  not enough degrees of freedom (n <= p)
  6  SVD did not converge
  7  simulate: a check row exceeded the alert threshold";

#[derive(Parser)]
#[command(name = "pcr", version, about = "Principal-component regression with variance and bias diagnostics", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit OLS and a d-component PC regression.
    Fit(DataArgs),
    /// Table of OLS, retained-component and omitted-component estimates with SE flags.
    Compare(DataArgs),
    /// Monte Carlo check of the expectation-level identities.
    Simulate(SimArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row, or `builtin:electricity`.
    #[arg(long)]
    input: String,
    /// Name of the response column.
    #[arg(long)]
    response: String,
    /// Number of leading components to retain.
    #[arg(long)]
    d: usize,
    #[arg(long, value_enum, default_value_t = Standardize::None)]
    standardize: Standardize,
    #[arg(long, value_enum, default_value_t = ResponseScale::None)]
    response_scale: ResponseScale,
    /// Do not prepend an intercept column.
    #[arg(long)]
    no_intercept: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Significant figures in table output.
    #[arg(long, default_value_t = 2)]
    digits: usize,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    /// Simulation config (JSON).
    #[arg(long, alias = "input")]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's |z| alert threshold.
    #[arg(long)]
    alert_z: Option<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl DataArgs {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            input: self.input.clone(),
            response: self.response.clone(),
            d: self.d,
            standardize: self.standardize,
            response_scale: self.response_scale,
            add_intercept: !self.no_intercept,
            format: self.format,
            digits: self.digits,
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), AppError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| AppError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Fit(args) => emit(&run_fit(&args.run_config())?, args.out.as_ref()),
        Command::Compare(args) => emit(&run_compare(&args.run_config())?, args.out.as_ref()),
        Command::Simulate(args) => {
            let output = run_simulate(&args.config, args.seed, args.alert_z, args.format)?;
            emit(&output.text, args.out.as_ref())?;
            if output.alerts > 0 {
                return Err(AppError::Alert {
                    count: output.alerts,
                    threshold: output.alert_z,
                });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(exit::SUCCESS as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
