//! Command-line harness: argument parsing, configuration merging and
//! dispatch. The `lohe` binary is a thin wrapper around [`main_with_args`].

pub mod config;
pub mod run;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Command, ConfigError, ExperimentConfig, Model, Potential, Preset};
pub use run::{analyze_lock, row_seed, run, ExitStatus, LockAnalysis, Outcome, RunError};
pub use sweep::{run_sweep, sweep_row, SweepRow};

/// Environment variable that redirects every output file into a directory.
pub const OUTPUT_DIR_ENV: &str = "LOHE_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "lohe", version, about = "Phase locking and stability of Schrödinger-Lohe correlations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
    #[command(flatten)]
    pub args: Overrides,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum CliCommand {
    /// Integrate the correlation (or Kuramoto) system from a random start.
    Simulate,
    /// Solve for the phase-locked state.
    FixedPoint,
    /// Spectrum of the F-map Jacobian at a homogeneous or locked state.
    Stability,
    /// Basin certificate and measured decay of the Lyapunov functional.
    Lyapunov,
    /// Critical coupling of an ensemble.
    KappaStar,
    /// Phase-diagram table over a coupling range.
    Sweep,
    /// Full wave-function evolution checked against the reduced system.
    Oracle,
}

impl From<CliCommand> for Command {
    fn from(c: CliCommand) -> Self {
        match c {
            CliCommand::Simulate => Command::Simulate,
            CliCommand::FixedPoint => Command::FixedPoint,
            CliCommand::Stability => Command::Stability,
            CliCommand::Lyapunov => Command::Lyapunov,
            CliCommand::KappaStar => Command::KappaStar,
            CliCommand::Sweep => Command::Sweep,
            CliCommand::Oracle => Command::Oracle,
        }
    }
}

/// Flags; each one overrides the matching config-file field.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Natural frequencies, comma separated (mean-centered on input).
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub omegas: Option<Vec<f64>>,
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// Ensemble size for homogeneous presets.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub bipolar_size: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa_min: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa_max: Option<f64>,
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path prefix; files are written as `<prefix>_<name>`.
    #[arg(long, global = true)]
    pub output: Option<String>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub t_final: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<Model>,
    #[arg(long, global = true, value_enum)]
    pub potential: Option<Potential>,
    #[arg(long, global = true)]
    pub omega_trap: Option<f64>,
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    #[arg(long, global = true)]
    pub half_width: Option<f64>,
}

impl Overrides {
    fn to_config(&self, command: Command) -> ExperimentConfig {
        let mut c = ExperimentConfig { command: Some(command), seed: self.seed, output: self.output.clone(), ..Default::default() };
        c.ensemble.omegas = self.omegas.clone();
        c.ensemble.preset = self.preset;
        c.ensemble.n = self.n;
        c.ensemble.bipolar_size = self.bipolar_size;
        c.coupling.kappa = self.kappa;
        c.coupling.kappa_min = self.kappa_min;
        c.coupling.kappa_max = self.kappa_max;
        c.coupling.points = self.points;
        c.solver.dt = self.dt;
        c.solver.t_final = self.t_final;
        c.simulate.model = self.model;
        c.oracle.potential = self.potential;
        c.oracle.omega_trap = self.omega_trap;
        c.oracle.points = self.grid_points;
        c.oracle.half_width = self.half_width;
        c
    }
}

/// Build the effective configuration: file values, then flags.
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let command = Command::from(cli.command);
    let mut cfg = match &cli.args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(file_cmd) = cfg.command {
        if file_cmd != command {
            return Err(ConfigError(format!(
                "config file is for `{}` but `{}` was requested",
                file_cmd.as_str(),
                command.as_str()
            )));
        }
    }
    cfg.overlay(&cli.args.to_config(command));
    Ok(cfg)
}

/// Parse, run, print the report to stdout and diagnostics to stderr.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { ExitStatus::Config.code() } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitStatus::Config.code();
        }
    };
    let dir = std::env::var(OUTPUT_DIR_ENV).ok();
    match run(&cfg, dir.as_deref()) {
        Ok(out) => {
            // A closed pipe (e.g. `| head`) is not an error for a report.
            let _ = writeln!(std::io::stdout(), "{}", out.json);
            if let Some(d) = &out.diagnostic {
                eprintln!("{d}");
            }
            out.status.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.status().code()
        }
    }
}
