//! `imcf`: command-line front end for the inverse mean curvature flow lab.
//!
//! Exit codes: 0 success, 1 certification or assertion failure, 2 invalid
//! configuration, 3 numerical breakdown.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "imcf", version, about = "Inverse mean curvature flow of star-shaped graphs in hyperbolic space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Geometry report of the initial surface.
    Report(Common),
    /// Run the flow and write the trace CSV and profile snapshots.
    Flow(Common),
    /// Construct and certify a flow with a non-round limit metric.
    Certify(Common),
    /// Run the identity-residual battery.
    Verify(Common),
    /// Compare the ball-model limit of the flow with the extracted profile.
    BallModel(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Print the effective configuration, defaults included, and exit.
    #[arg(long)]
    print_config: bool,
    /// Override any key, e.g. `--set flow.cadence=0.1`. Applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    dimension: Option<usize>,
    /// full2d or polar-symmetric.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    band_limit: Option<usize>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    cadence: Option<f64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(n) = self.dimension {
            out.push(format!("dimension={n}"));
        }
        if let Some(m) = &self.mode {
            out.push(format!("mode=\"{m}\""));
        }
        if let Some(l) = self.band_limit {
            out.push(format!("band_limit={l}"));
        }
        if let Some(t) = self.t_final {
            out.push(format!("flow.t_final={t:?}"));
        }
        if let Some(c) = self.cadence {
            out.push(format!("flow.cadence={c:?}"));
        }
        if let Some(d) = &self.output_dir {
            out.push(format!("output_dir={:?}", d.display().to_string()));
        }
        out.extend(self.overrides.iter().cloned());
        out
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Assertion(String),
    Breakdown(String),
    Other(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl CliError {
    fn report(&self) -> ExitCode {
        let (label, code) = match self {
            CliError::Config(m) => (format!("configuration error: {m}"), 2),
            CliError::Assertion(m) => (format!("check failed: {m}"), 1),
            CliError::Breakdown(m) => (format!("numerical breakdown: {m}"), 3),
            CliError::Other(m) => (format!("error: {m}"), 1),
        };
        eprintln!("imcf: {label}");
        ExitCode::from(code)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, command): (&Common, fn(&RunConfig) -> Result<bool, CliError>) = match &cli.command {
        Command::Report(c) => (c, commands::cmd_report),
        Command::Flow(c) => (c, commands::cmd_flow),
        Command::Certify(c) => (c, commands::cmd_certify),
        Command::Verify(c) => (c, commands::cmd_verify),
        Command::BallModel(c) => (c, commands::cmd_ball_model),
    };
    let config = match RunConfig::load(common.config.as_deref(), &common.overrides()) {
        Ok(c) => c,
        Err(e) => return CliError::from(e).report(),
    };
    if common.print_config {
        print!("{}", config.to_toml());
        return ExitCode::SUCCESS;
    }
    match command(&config) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("imcf: check failed");
            ExitCode::from(1)
        }
        Err(e) => e.report(),
    }
}
