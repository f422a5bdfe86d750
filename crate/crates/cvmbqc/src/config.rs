//! Declarative experiment configuration.
//!
//! A config is a flat TOML file; every key can also be given on the
//! command line, and flags win over the file.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cvmbqc_core::scheme::SchemeParameters;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Compile,
    Couple,
    Readout,
    Transport,
    NogoScan,
    WeakCompile,
    Truncation,
    ErrorGrowth,
    FailureBound,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Compile => "compile",
            Experiment::Couple => "couple",
            Experiment::Readout => "readout",
            Experiment::Transport => "transport",
            Experiment::NogoScan => "nogo-scan",
            Experiment::WeakCompile => "weak-compile",
            Experiment::Truncation => "truncation",
            Experiment::ErrorGrowth => "error-growth",
            Experiment::FailureBound => "failure-bound",
        }
    }

    /// Tolerances used when neither the file nor the flags give any.
    fn default_eps(self) -> Vec<f64> {
        match self {
            Experiment::Compile => vec![1e-6, 1e-9],
            Experiment::WeakCompile => vec![0.2, 0.1, 0.05, 0.025],
            Experiment::ErrorGrowth => vec![1e-3],
            _ => vec![1e-9],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GrowthModeArg {
    #[default]
    Both,
    Unitary,
    Nonunitary,
}

/// A fully resolved run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub alpha: f64,
    pub theta: f64,
    pub n_max: usize,
    pub trials: usize,
    pub eps: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
    /// Wire length for transport and error growth.
    pub steps: usize,
    /// Samples per estimate in the control scan.
    pub samples: usize,
    /// Number of targets in the control scan.
    pub targets: usize,
    pub n_gates: Vec<usize>,
    pub k_spacing: Vec<usize>,
    pub mode: GrowthModeArg,
    /// Also write per-step compile traces.
    pub traces: bool,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let desk = SchemeParameters::desk();
        Self {
            experiment,
            alpha: desk.alpha,
            theta: desk.theta,
            n_max: desk.n_max,
            trials: 1000,
            eps: experiment.default_eps(),
            seed: 0,
            out: PathBuf::from("out"),
            format: Format::Csv,
            steps: 200,
            samples: 1_000_000,
            targets: 5,
            n_gates: vec![5, 20, 50],
            k_spacing: vec![400, 800, 1600],
            mode: GrowthModeArg::Both,
            traces: false,
        }
    }

    pub fn scheme(&self) -> SchemeParameters {
        SchemeParameters { alpha: self.alpha, theta: self.theta, n_max: self.n_max }
    }

    /// Checks value ranges; `source` is used to point at the offending line.
    pub fn validate(&self, source: Option<&str>) -> Result<(), ConfigError> {
        let fail = |key: &'static str, reason: String| Err(ConfigError::invalid(key, reason, source));
        if let Err(e) = SchemeParameters::new(self.alpha, self.theta, self.n_max) {
            let key = match &e {
                cvmbqc_core::Error::InvalidParameter { name, .. } => match *name {
                    "alpha" => "alpha",
                    "theta" => "theta",
                    _ => "n_max",
                },
                _ => "alpha",
            };
            return fail(key, e.to_string());
        }
        if self.trials == 0 {
            return fail("trials", "must be at least 1".into());
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return fail("eps", "every tolerance must be positive and finite".into());
        }
        if self.steps == 0 {
            return fail("steps", "must be at least 1".into());
        }
        if self.samples == 0 || self.targets == 0 {
            return fail("samples", "samples and targets must be positive".into());
        }
        if self.n_gates.is_empty() || self.n_gates.contains(&0) {
            return fail("n_gates", "needs positive gate counts".into());
        }
        if self.k_spacing.is_empty() || self.k_spacing.iter().any(|k| *k == 0 || k % 4 != 0) {
            return fail("k_spacing", "spacings must be positive multiples of 4".into());
        }
        Ok(())
    }

    /// Canonical TOML text, used for hashing.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }
}

/// Keys accepted in a config file. All are optional except `experiment`
/// when no subcommand names it.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub alpha: Option<f64>,
    pub theta: Option<f64>,
    pub n_max: Option<usize>,
    pub trials: Option<usize>,
    pub eps: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub steps: Option<usize>,
    pub samples: Option<usize>,
    pub targets: Option<usize>,
    pub n_gates: Option<Vec<usize>>,
    pub k_spacing: Option<Vec<usize>>,
    pub mode: Option<GrowthModeArg>,
    pub traces: Option<bool>,
}

impl FromStr for ConfigFile {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))
    }
}

/// Overlays `top` on `base`, field by field.
macro_rules! overlay {
    ($base:expr, $top:expr; $($field:ident),*) => {
        ConfigFile { $($field: $top.$field.or($base.$field)),* }
    };
}

impl ConfigFile {
    pub fn merged_with(self, overrides: ConfigFile) -> ConfigFile {
        overlay!(self, overrides; experiment, alpha, theta, n_max, trials, eps, seed, out, format, steps, samples, targets, n_gates, k_spacing, mode, traces)
    }

    pub fn resolve(self, source: Option<&str>) -> Result<ExperimentConfig, ConfigError> {
        let experiment = self.experiment.ok_or(ConfigError::MissingExperiment)?;
        let d = ExperimentConfig::defaults(experiment);
        let cfg = ExperimentConfig {
            experiment,
            alpha: self.alpha.unwrap_or(d.alpha),
            theta: self.theta.unwrap_or(d.theta),
            n_max: self.n_max.unwrap_or(d.n_max),
            trials: self.trials.unwrap_or(d.trials),
            eps: self.eps.unwrap_or(d.eps),
            seed: self.seed.unwrap_or(d.seed),
            out: self.out.unwrap_or(d.out),
            format: self.format.unwrap_or(d.format),
            steps: self.steps.unwrap_or(d.steps),
            samples: self.samples.unwrap_or(d.samples),
            targets: self.targets.unwrap_or(d.targets),
            n_gates: self.n_gates.unwrap_or(d.n_gates),
            k_spacing: self.k_spacing.unwrap_or(d.k_spacing),
            mode: self.mode.unwrap_or(d.mode),
            traces: self.traces.unwrap_or(d.traces),
        };
        cfg.validate(source)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Syntax or schema error; the message carries the line and column.
    Parse(String),
    Invalid { key: &'static str, line: Option<usize>, reason: String },
    MissingExperiment,
    Io(String),
}

impl ConfigError {
    fn invalid(key: &'static str, reason: String, source: Option<&str>) -> Self {
        ConfigError::Invalid { key, line: source.and_then(|s| line_of_key(s, key)), reason }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(msg) => write!(f, "config parse error: {msg}"),
            ConfigError::Invalid { key, line: Some(line), reason } => write!(f, "config line {line}: `{key}` {reason}"),
            ConfigError::Invalid { key, line: None, reason } => write!(f, "config: `{key}` {reason}"),
            ConfigError::MissingExperiment => write!(f, "config: no experiment given"),
            ConfigError::Io(msg) => write!(f, "config: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line on which `key` is assigned.
fn line_of_key(source: &str, key: &str) -> Option<usize> {
    source.lines().position(|l| l.trim_start().strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))).map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_fill_defaults() {
        let file: ConfigFile = "experiment = \"compile\"\ntrials = 12\neps = [1e-3]\n".parse().unwrap();
        let cfg = file.resolve(None).unwrap();
        assert_eq!(cfg.trials, 12);
        assert_eq!(cfg.eps, vec![1e-3]);
        assert_eq!(cfg.alpha, 2.0);
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = "experiment = \"compile\"\nalpah = 2.0\n".parse::<ConfigFile>().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("alpah") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn flags_override_file() {
        let file: ConfigFile = "experiment = \"couple\"\nseed = 3\ntrials = 5\n".parse().unwrap();
        let flags = ConfigFile { seed: Some(9), ..Default::default() };
        let cfg = file.merged_with(flags).resolve(None).unwrap();
        assert_eq!((cfg.seed, cfg.trials), (9, 5));
    }

    #[test]
    fn invalid_values_point_at_their_line() {
        let src = "experiment = \"compile\"\n\ntrials = 0\n";
        let err = src.parse::<ConfigFile>().unwrap().resolve(Some(src)).unwrap_err();
        assert_eq!(err, ConfigError::Invalid { key: "trials", line: Some(3), reason: "must be at least 1".into() });
        let src = "experiment = \"failure-bound\"\nk_spacing = [6]\n";
        assert!(src.parse::<ConfigFile>().unwrap().resolve(Some(src)).is_err());
    }

    #[test]
    fn canonical_form_roundtrips() {
        let cfg = ExperimentConfig::defaults(Experiment::NogoScan);
        let back: ExperimentConfig = toml::from_str(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
    }
}
