//! `ftind` — synthesis, calibration, and evaluation for inductive six-axis
//! force/torque sensors.
//!
//! Exit codes: 0 success (including `--help`/`--version`), 1 usage error,
//! 2 configuration error, 3 runtime error.

mod commands;
mod error;
mod runconfig;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use ftind_core::fitting::FitFamily;

#[derive(Parser)]
#[command(
    name = "ftind",
    version,
    about = "Inductive six-axis force/torque sensing toolkit",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a calibration acquisition from the digital twin
    Simulate(SimulateArgs),
    /// Fit curve families to a two-column x,y CSV
    Fit(FitArgs),
    /// Fit a sensor calibration from a dataset CSV
    Calibrate(CalibrateArgs),
    /// Decode raw counts into wrenches using a calibration
    Decode(DecodeArgs),
    /// Score decoded output: accuracy, resolution, crosstalk
    Evaluate(EvaluateArgs),
    /// Replay a recorded acquisition at a controlled rate
    Replay(ReplayArgs),
    /// Render tables and curve series from saved artifacts
    Report(ReportArgs),
    /// Run the full pipeline end to end into one directory
    Demo(DemoArgs),
}

#[derive(clap::Args)]
pub struct SimulateArgs {
    /// Run config file (TOML or JSON); defaults to the built-in config
    #[arg(long)]
    pub config: Option<String>,
    /// Override the config's RNG seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: String,
    /// Fail (exit 2) if the schedule exceeds the configured axis ranges
    #[arg(long)]
    pub strict: bool,
}

/// Fit family choice; `all` fits every family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    All,
    Polynomial4,
    SigmoidSum,
    GaussianMixture,
    Rational22,
}

impl FamilyArg {
    pub fn to_family(self) -> Option<FitFamily> {
        match self {
            FamilyArg::All => None,
            FamilyArg::Polynomial4 => Some(FitFamily::Polynomial4),
            FamilyArg::SigmoidSum => Some(FitFamily::SigmoidSum),
            FamilyArg::GaussianMixture => Some(FitFamily::GaussianMixture),
            FamilyArg::Rational22 => Some(FitFamily::Rational22),
        }
    }
}

#[derive(clap::Args)]
pub struct FitArgs {
    /// Two-column CSV with header `x,y`
    #[arg(long)]
    pub input: String,
    /// Curve family to fit
    #[arg(long, value_enum, default_value_t = FamilyArg::All)]
    pub family: FamilyArg,
    /// Optional directory for per-family JSON results
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(clap::Args)]
pub struct CalibrateArgs {
    /// Run config file describing the sensor the data came from
    #[arg(long)]
    pub config: Option<String>,
    /// Training dataset CSV (t_us, wrench, channel counts)
    #[arg(long)]
    pub input: String,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: String,
}

#[derive(clap::Args)]
pub struct DecodeArgs {
    /// Run config file describing the sensor the data came from
    #[arg(long)]
    pub config: Option<String>,
    /// Dataset CSV or frame log to decode
    #[arg(long)]
    pub input: String,
    /// Calibration file produced by `calibrate`
    #[arg(long)]
    pub calibration: String,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: String,
}

#[derive(clap::Args)]
pub struct EvaluateArgs {
    /// Run config file describing the sensor the data came from
    #[arg(long)]
    pub config: Option<String>,
    /// Dataset CSV holding both reference wrenches and raw counts
    #[arg(long)]
    pub input: String,
    /// Calibration file produced by `calibrate`
    #[arg(long)]
    pub calibration: String,
    /// Resolution criterion multiplier k in k·σ (overrides the config)
    #[arg(long)]
    pub sigma_multiplier: Option<f64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: String,
}

/// Where replayed frames are delivered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SinkArg {
    /// Discard frames (timing only)
    Null,
    /// Print one CSV line per frame
    Stdout,
    /// Re-encode to <out>/replayed.ftlog
    File,
}

#[derive(clap::Args)]
pub struct ReplayArgs {
    /// Dataset CSV or frame log to replay
    #[arg(long)]
    pub input: String,
    /// Replay rate in Hz (1 to 4080)
    #[arg(long, default_value_t = 500.0)]
    pub rate: f64,
    /// Frame sink
    #[arg(long, value_enum, default_value_t = SinkArg::Null)]
    pub sink: SinkArg,
    /// Output directory (used by --sink file)
    #[arg(long, default_value = "out")]
    pub out: String,
}

#[derive(clap::Args)]
pub struct ReportArgs {
    /// Evaluation JSON produced by `evaluate`
    #[arg(long)]
    pub eval: Option<String>,
    /// Two-column x,y curve CSV for the fit comparison table
    #[arg(long)]
    pub curve: Option<String>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: String,
}

#[derive(clap::Args)]
pub struct DemoArgs {
    /// Run config file (TOML or JSON); defaults to the built-in config
    #[arg(long)]
    pub config: Option<String>,
    /// Override the config's RNG seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "demo_out")]
    pub out: String,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match &cli.command {
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Fit(args) => commands::cmd_fit(args),
        Command::Calibrate(args) => commands::cmd_calibrate(args),
        Command::Decode(args) => commands::cmd_decode(args),
        Command::Evaluate(args) => commands::cmd_evaluate(args),
        Command::Replay(args) => commands::cmd_replay(args),
        Command::Report(args) => commands::cmd_report(args),
        Command::Demo(args) => commands::cmd_demo(args),
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
