//! `mqed`: run a named experiment over a parameter grid and emit a
//! deterministic CSV or JSON table.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric guard (dimension
//! ceiling), 4 internal assertion.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use magnus_qed_cli::config::{ExperimentConfig, RawConfig};
use magnus_qed_cli::run::RunError;
use magnus_qed_cli::{emit, run};

#[derive(Parser)]
#[command(
    name = "mqed",
    version,
    about = "Second-order propagator experiments on atom-field models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form excitation amplitude of the two-atom model.
    FermiAnalytic(RunArgs),
    /// Discrete-mode numeric amplitude plus its causality leakage.
    FermiNumeric(RunArgs),
    /// Paired full/rotating-wave leakage against the mode count.
    RwaCompare(RunArgs),
    /// Closed-form propagator diagnostics of the driven mode.
    DrivenMode(RunArgs),
    /// Quadrature error against steps and leakage against modes.
    Convergence(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::FermiAnalytic(_) => "fermi-analytic",
            Command::FermiNumeric(_) => "fermi-numeric",
            Command::RwaCompare(_) => "rwa-compare",
            Command::DrivenMode(_) => "driven-mode",
            Command::Convergence(_) => "convergence",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::FermiAnalytic(a)
            | Command::FermiNumeric(a)
            | Command::RwaCompare(a)
            | Command::DrivenMode(a)
            | Command::Convergence(a) => a,
        }
    }
}

/// Every config key is also a flag; flags override the file.
#[derive(Args)]
struct RunArgs {
    /// Config file: flat `key = value` lines or a JSON object.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv (default) or json.
    #[arg(long)]
    format: Option<String>,

    #[arg(long)]
    omega_l: Option<f64>,
    #[arg(long)]
    omega_r: Option<f64>,
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    dipole_l: Option<f64>,
    #[arg(long)]
    dipole_r: Option<f64>,
    #[arg(long)]
    epsilon0: Option<f64>,
    #[arg(long)]
    hbar: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    box_length: Option<f64>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    photon_cutoff: Option<usize>,
    #[arg(long)]
    dimension_ceiling: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    propagator: Option<String>,
    /// Keep only the co-rotating interaction terms.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    rwa: Option<String>,

    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    driven_hbar: Option<f64>,

    /// Comma-separated mode counts for sweep experiments.
    #[arg(long)]
    modes_sweep: Option<String>,
    /// Comma-separated step counts for the convergence experiment.
    #[arg(long)]
    steps_sweep: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        macro_rules! push {
            ($key:literal, $field:expr) => {
                if let Some(v) = &$field {
                    out.push(($key, v.to_string()));
                }
            };
        }
        push!("format", self.format);
        push!("omega_l", self.omega_l);
        push!("omega_r", self.omega_r);
        push!("separation", self.separation);
        push!("dipole_l", self.dipole_l);
        push!("dipole_r", self.dipole_r);
        push!("epsilon0", self.epsilon0);
        push!("hbar", self.hbar);
        push!("c", self.c);
        push!("box_length", self.box_length);
        push!("modes", self.modes);
        push!("photon_cutoff", self.photon_cutoff);
        push!("dimension_ceiling", self.dimension_ceiling);
        push!("steps", self.steps);
        push!("t_max", self.t_max);
        push!("propagator", self.propagator);
        push!("rwa", self.rwa);
        push!("g", self.g);
        push!("omega", self.omega);
        push!("n_max", self.n_max);
        push!("driven_hbar", self.driven_hbar);
        push!("modes_sweep", self.modes_sweep);
        push!("steps_sweep", self.steps_sweep);
        out
    }
}

fn build_config(command: &Command) -> Result<ExperimentConfig, RunError> {
    let args = command.args();
    let mut raw = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                RunError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            RawConfig::from_text(&text).map_err(|e| RunError::Config(e.to_string()))?
        }
        None => RawConfig::default(),
    };
    for (key, value) in args.overrides() {
        raw.set_override(key, value);
    }
    // The subcommand names the experiment; a conflicting file entry is an
    // error rather than a silent override.
    raw.ensure_experiment(command.name())
        .map_err(|e| RunError::Config(e.to_string()))?;
    ExperimentConfig::from_raw(raw).map_err(|e| RunError::Config(e.to_string()))
}

fn run(command: &Command) -> Result<(), RunError> {
    let config = build_config(command)?;
    let result = run::run_experiment(&config)?;
    let text = emit::emit(&result, config.format);
    let target = command
        .args()
        .output
        .clone()
        .or_else(|| config.output.as_ref().map(PathBuf::from));
    match target {
        Some(path) => std::fs::write(&path, text).map_err(|e| {
            RunError::Internal(format!("cannot write {}: {e}", path.display()))
        })?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(match err {
                RunError::Config(_) => 2u8,
                RunError::Ceiling(_) => 3u8,
                RunError::Internal(_) => 4u8,
            })
        }
    }
}
