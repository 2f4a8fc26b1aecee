//! Run configuration: command-line flags, flat `key = value` config files,
//! and the precedence rule — flags override file entries, file entries
//! override defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use mfg_core::evolutive::RhsPolicy;

use crate::builtins;

/// Which system a run solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    /// The ergodic system for `(U, M, Λ)`.
    Stationary,
    /// The finite-horizon forward–backward system.
    Evolutive,
}

/// Which outer solver a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Policy iteration.
    Pi,
    /// Direct least-squares Newton method; stationary problems only.
    Newton,
}

impl Method {
    /// Stable identifier used in `summary.csv`.
    pub fn name(self) -> &'static str {
        match self {
            Method::Pi => "pi",
            Method::Newton => "newton",
        }
    }
}

/// Cost pairing of the backward value sweep; evolutive runs only.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum RhsPolicyArg {
    /// Evaluate the running cost at the same policy that advects the step.
    #[default]
    Current,
    /// Comparison variant: evaluate the running cost one time node ahead.
    Next,
}

impl From<RhsPolicyArg> for RhsPolicy {
    fn from(value: RhsPolicyArg) -> Self {
        match value {
            RhsPolicyArg::Current => RhsPolicy::CurrentTimeNode,
            RhsPolicyArg::Next => RhsPolicy::NextTimeNode,
        }
    }
}

/// Solves discrete mean field games on the periodic torus and writes the
/// solution fields, convergence log, and run summary as CSV files.
///
/// Every solver flag may also appear as a `key = value` line in the file
/// named by `--config`; flags take precedence over the file, the file over
/// the built-in defaults.
#[derive(Debug, Default, Parser)]
#[command(name = "mfg", version)]
pub struct Cli {
    /// Flat `key = value` config file (`#` starts a comment)
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Problem kind [default: stationary]
    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,
    /// Solver [default: pi]
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Space dimension, 1 or 2 [default: 1]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Grid nodes per dimension [default: 200]
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Implicit Euler steps; evolutive runs [default: 100]
    #[arg(long)]
    pub time_steps: Option<usize>,
    /// Time horizon; evolutive runs [default: 1]
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Diffusion coefficient [default: 0.3]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Outer stopping tolerance [default: 1e-8]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Kernel-projection shift of the stationary density solve [default: 1e-3]
    #[arg(long)]
    pub mu: Option<f64>,
    /// Kernel-projection steps per outer iteration [default: 1]
    #[arg(long)]
    pub inner_steps: Option<usize>,
    /// Norm cap of the policy update [default: 1e6]
    #[arg(long)]
    pub cap: Option<f64>,
    /// Outer iteration limit [default: 1000 pi, 100 newton, 500 evolutive]
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// Potential: zero, paper-1d, or paper-2d [default: matches dim]
    #[arg(long, value_name = "ID")]
    pub potential: Option<String>,
    /// Coupling cost: quadratic or zero [default: quadratic]
    #[arg(long, value_name = "ID")]
    pub coupling: Option<String>,
    /// Initial and terminal data: paper-gaussian or uniform-zero;
    /// evolutive runs [default: paper-gaussian]
    #[arg(long, value_name = "ID")]
    pub initial_data: Option<String>,
    /// Backward-sweep cost pairing; evolutive runs [default: current]
    #[arg(long, value_enum)]
    pub rhs_policy: Option<RhsPolicyArg>,
    /// Output directory, created if missing [default: out]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Reserved for randomized test harnesses; the pipeline is deterministic
    #[arg(long)]
    pub seed: Option<u64>,
}

/// A rejected configuration: unreadable or malformed config file, unknown
/// key or identifier, or an invalid combination of values.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file `{}`: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: expected `key = value`, found `{text}`", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        text: String,
    },
    #[error("{}:{line}: unknown key `{key}`", path.display())]
    UnknownKey {
        path: PathBuf,
        line: usize,
        key: String,
    },
    #[error("{}:{line}: `{key}`: {reason}", path.display())]
    BadValue {
        path: PathBuf,
        line: usize,
        key: String,
        reason: String,
    },
    #[error("{0}")]
    Invalid(String),
}

/// A fully resolved run: every setting has a value and the combination has
/// been validated.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub method: Method,
    pub dim: usize,
    /// Nodes per dimension `I`.
    pub nodes: usize,
    /// Implicit Euler steps `N`; evolutive runs only.
    pub time_steps: usize,
    /// Horizon `T`; evolutive runs only.
    pub horizon: f64,
    pub eps: f64,
    pub tol: f64,
    pub mu: f64,
    pub inner_steps: usize,
    pub cap: f64,
    pub max_outer: usize,
    pub potential: String,
    pub coupling: String,
    /// Evolutive runs only.
    pub initial_data: String,
    /// Evolutive runs only.
    pub rhs_policy: RhsPolicyArg,
    pub out: PathBuf,
    /// Reserved for randomized test harnesses; never read by the solvers.
    pub seed: u64,
}

impl RunConfig {
    /// Resolves flags, the optional config file, and defaults, in that
    /// precedence order, then validates the combination.
    pub fn resolve(cli: Cli) -> Result<Self, ConfigError> {
        let mut overrides = Overrides::default();
        if let Some(path) = &cli.config {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::File {
                path: path.clone(),
                source,
            })?;
            overrides.apply_file_text(&text, path)?;
        }
        overrides.apply_cli(&cli);
        overrides.into_config()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.method == Method::Newton && self.problem != ProblemKind::Stationary {
            return Err(ConfigError::Invalid(
                "the newton method only applies to stationary problems".into(),
            ));
        }
        if self.dim != 1 && self.dim != 2 {
            return Err(ConfigError::Invalid(format!(
                "dim must be 1 or 2, found {}",
                self.dim
            )));
        }
        if self.nodes < 3 {
            return Err(ConfigError::Invalid(
                "need at least 3 nodes per dimension".into(),
            ));
        }
        for (name, value) in [
            ("eps", self.eps),
            ("tol", self.tol),
            ("mu", self.mu),
            ("cap", self.cap),
            ("horizon", self.horizon),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::Invalid(format!(
                    "{name} must be positive and finite, found {value}"
                )));
            }
        }
        for (name, value) in [
            ("inner-steps", self.inner_steps),
            ("time-steps", self.time_steps),
            ("max-outer", self.max_outer),
        ] {
            if value == 0 {
                return Err(ConfigError::Invalid(format!("{name} must be at least 1")));
            }
        }
        builtins::check_potential(&self.potential, self.dim)?;
        builtins::check_coupling(&self.coupling)?;
        builtins::check_initial_data(&self.initial_data)?;
        Ok(())
    }
}

fn enum_from_str<E: ValueEnum>(value: &str) -> Result<E, String> {
    E::from_str(value, true).map_err(|_| {
        let options: Vec<String> = E::value_variants()
            .iter()
            .filter_map(|v| v.to_possible_value().map(|p| p.get_name().to_string()))
            .collect();
        format!("expected one of {}, found `{value}`", options.join(", "))
    })
}

fn num_from_str<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("cannot parse `{value}`: {e}"))
}

enum SetError {
    UnknownKey,
    BadValue(String),
}

/// Partially specified configuration collected from a config file and the
/// command-line flags.
#[derive(Debug, Default)]
struct Overrides {
    problem: Option<ProblemKind>,
    method: Option<Method>,
    dim: Option<usize>,
    nodes: Option<usize>,
    time_steps: Option<usize>,
    horizon: Option<f64>,
    eps: Option<f64>,
    tol: Option<f64>,
    mu: Option<f64>,
    inner_steps: Option<usize>,
    cap: Option<f64>,
    max_outer: Option<usize>,
    potential: Option<String>,
    coupling: Option<String>,
    initial_data: Option<String>,
    rhs_policy: Option<RhsPolicyArg>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

impl Overrides {
    /// Applies one `key = value` assignment; keys use the flag spelling.
    fn set(&mut self, key: &str, value: &str) -> Result<(), SetError> {
        let bad = SetError::BadValue;
        match key {
            "problem" => self.problem = Some(enum_from_str(value).map_err(bad)?),
            "method" => self.method = Some(enum_from_str(value).map_err(bad)?),
            "dim" => self.dim = Some(num_from_str(value).map_err(bad)?),
            "nodes" => self.nodes = Some(num_from_str(value).map_err(bad)?),
            "time-steps" => self.time_steps = Some(num_from_str(value).map_err(bad)?),
            "horizon" => self.horizon = Some(num_from_str(value).map_err(bad)?),
            "eps" => self.eps = Some(num_from_str(value).map_err(bad)?),
            "tol" => self.tol = Some(num_from_str(value).map_err(bad)?),
            "mu" => self.mu = Some(num_from_str(value).map_err(bad)?),
            "inner-steps" => self.inner_steps = Some(num_from_str(value).map_err(bad)?),
            "cap" => self.cap = Some(num_from_str(value).map_err(bad)?),
            "max-outer" => self.max_outer = Some(num_from_str(value).map_err(bad)?),
            "potential" => self.potential = Some(value.to_string()),
            "coupling" => self.coupling = Some(value.to_string()),
            "initial-data" => self.initial_data = Some(value.to_string()),
            "rhs-policy" => self.rhs_policy = Some(enum_from_str(value).map_err(bad)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "seed" => self.seed = Some(num_from_str(value).map_err(bad)?),
            _ => return Err(SetError::UnknownKey),
        }
        Ok(())
    }

    /// Parses `key = value` lines. `#` starts a comment, blank lines are
    /// skipped, underscores in keys are read as hyphens, and a repeated key
    /// keeps its last assignment.
    fn apply_file_text(&mut self, text: &str, path: &Path) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Malformed {
                    path: path.to_path_buf(),
                    line,
                    text: content.to_string(),
                });
            };
            let key = key.trim().replace('_', "-");
            match self.set(&key, value.trim()) {
                Ok(()) => {}
                Err(SetError::UnknownKey) => {
                    return Err(ConfigError::UnknownKey {
                        path: path.to_path_buf(),
                        line,
                        key,
                    })
                }
                Err(SetError::BadValue(reason)) => {
                    return Err(ConfigError::BadValue {
                        path: path.to_path_buf(),
                        line,
                        key,
                        reason,
                    })
                }
            }
        }
        Ok(())
    }

    /// Overwrites with every flag the command line actually set.
    fn apply_cli(&mut self, cli: &Cli) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &cli.$field { self.$field = Some(v.clone()); })*
            };
        }
        take!(
            problem,
            method,
            dim,
            nodes,
            time_steps,
            horizon,
            eps,
            tol,
            mu,
            inner_steps,
            cap,
            max_outer,
            potential,
            coupling,
            initial_data,
            rhs_policy,
            out,
            seed
        );
    }

    /// Fills the remaining settings with defaults and validates.
    fn into_config(self) -> Result<RunConfig, ConfigError> {
        let problem = self.problem.unwrap_or(ProblemKind::Stationary);
        let method = self.method.unwrap_or(Method::Pi);
        let dim = self.dim.unwrap_or(1);
        let config = RunConfig {
            problem,
            method,
            dim,
            nodes: self.nodes.unwrap_or(200),
            time_steps: self.time_steps.unwrap_or(100),
            horizon: self.horizon.unwrap_or(1.0),
            eps: self.eps.unwrap_or(0.3),
            tol: self.tol.unwrap_or(1e-8),
            mu: self.mu.unwrap_or(1e-3),
            inner_steps: self.inner_steps.unwrap_or(1),
            cap: self.cap.unwrap_or(1e6),
            max_outer: self.max_outer.unwrap_or(match (problem, method) {
                (ProblemKind::Stationary, Method::Pi) => 1000,
                (ProblemKind::Stationary, Method::Newton) => 100,
                (ProblemKind::Evolutive, _) => 500,
            }),
            potential: self
                .potential
                .unwrap_or_else(|| if dim == 1 { "paper-1d" } else { "paper-2d" }.to_string()),
            coupling: self.coupling.unwrap_or_else(|| "quadratic".to_string()),
            initial_data: self
                .initial_data
                .unwrap_or_else(|| "paper-gaussian".to_string()),
            rhs_policy: self.rhs_policy.unwrap_or_default(),
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            seed: self.seed.unwrap_or(0),
        };
        config.validate()?;
        Ok(config)
    }
}
