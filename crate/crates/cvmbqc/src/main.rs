use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use cvmbqc::config::{ConfigError, ConfigFile, Experiment, ExperimentConfig, Format, GrowthModeArg};
use cvmbqc::experiments;
use cvmbqc::manifest::{self, RunInfo};

#[derive(Parser, Debug)]
#[command(name = "cvmbqc", version, about = "Monte Carlo experiments for measurement-based computation on continuous-variable wires")]
struct Cli {
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// TOML file with experiment settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Adaptive compilation of Haar-random single-qubit gates.
    Compile(Opts),
    /// Photon-counting coupling of two wires.
    Couple(Opts),
    /// Repeated readout followed by initialization.
    Readout(Opts),
    /// Conditioned transport fidelity along a wire.
    Transport(Opts),
    /// Control scan over homodyne angles on a Gaussian wire.
    NogoScan(Opts),
    /// Weak-measurement phase compiler and its cost exponent.
    WeakCompile(Opts),
    /// Fock truncation certificate against the measured tail.
    Truncation(Opts),
    /// Error accumulation over a gate sequence.
    ErrorGrowth(Opts),
    /// Non-adaptive layout failure against its bound.
    FailureBound(Opts),
    /// Runs whatever experiment the config file names.
    Run(Opts),
}

#[derive(Args, Debug, Default)]
struct Opts {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long = "nmax")]
    n_max: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    targets: Option<usize>,
    #[arg(long = "n-gates", value_delimiter = ',')]
    n_gates: Option<Vec<usize>>,
    #[arg(long = "k-spacing", value_delimiter = ',')]
    k_spacing: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    mode: Option<GrowthModeArg>,
    /// Write per-step compile traces.
    #[arg(long)]
    traces: bool,
}

impl Command {
    fn split(self) -> (Option<Experiment>, Opts) {
        match self {
            Command::Compile(o) => (Some(Experiment::Compile), o),
            Command::Couple(o) => (Some(Experiment::Couple), o),
            Command::Readout(o) => (Some(Experiment::Readout), o),
            Command::Transport(o) => (Some(Experiment::Transport), o),
            Command::NogoScan(o) => (Some(Experiment::NogoScan), o),
            Command::WeakCompile(o) => (Some(Experiment::WeakCompile), o),
            Command::Truncation(o) => (Some(Experiment::Truncation), o),
            Command::ErrorGrowth(o) => (Some(Experiment::ErrorGrowth), o),
            Command::FailureBound(o) => (Some(Experiment::FailureBound), o),
            Command::Run(o) => (None, o),
        }
    }
}

fn resolve(cli: Cli) -> Result<(ExperimentConfig, Option<usize>), ConfigError> {
    let source = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?),
        None => None,
    };
    let file: ConfigFile = match &source {
        Some(text) => text.parse()?,
        None => ConfigFile::default(),
    };
    let (experiment, o) = cli.command.split();
    let flags = ConfigFile {
        experiment,
        alpha: o.alpha,
        theta: o.theta,
        n_max: o.n_max,
        trials: o.trials,
        eps: o.eps,
        seed: cli.seed,
        out: cli.out,
        format: cli.format,
        steps: o.steps,
        samples: o.samples,
        targets: o.targets,
        n_gates: o.n_gates,
        k_spacing: o.k_spacing,
        mode: o.mode,
        traces: o.traces.then_some(true),
    };
    let cfg = file.merged_with(flags).resolve(source.as_deref())?;
    Ok((cfg, cli.threads))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, threads) = match resolve(cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let report = match experiments::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_numerical_contract() { 3 } else { 1 });
        }
    };
    let info = RunInfo { threads: rayon::current_num_threads(), started_unix, wall_seconds: clock.elapsed().as_secs_f64() };
    match manifest::write_report(&cfg, &report, info) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
