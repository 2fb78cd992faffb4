//! Experiment runner for the half-space game toolkit.
//!
//! Every subcommand resolves its parameters from built-in defaults, an
//! optional JSON config file and command-line flags (in increasing
//! precedence), runs, and writes `<command>.csv` and `<command>.json` into the
//! output directory. Exit codes: 0 success, 1 a check failed, 2 usage or
//! runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

pub mod commands;
pub mod output;

pub use output::{Check, Table};

pub const ARTIFACT_VERSION: &str = env!("GUG_ARTIFACT_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] gug_core::Error),
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "gug", version = ARTIFACT_VERSION, about = "Half-space game experiments")]
pub struct Cli {
    /// JSON file with parameter values; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (defaults to $GUG_SEED, then 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true, default_value = "gug-out")]
    pub out: PathBuf,
    /// Suppress the human-readable summary.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hermite and polynomial invariant suites.
    Selftest(commands::selftest::Flags),
    /// Restricted-versus-global barycenter distances and their scaling in n.
    Concentration(commands::concentration::Flags),
    /// Verifier rejection on a planted instance.
    Completeness(commands::completeness::Flags),
    /// Decoder round trip on a planted instance.
    Decode(commands::decode::Flags),
    /// Build a gap instance and check its value.
    GapInstance(commands::gap::Flags),
    /// Numerical checks of the classical Gaussian inequalities.
    Validate(commands::validate::Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Selftest(_) => "selftest",
            Command::Concentration(_) => "concentration",
            Command::Completeness(_) => "completeness",
            Command::Decode(_) => "decode",
            Command::GapInstance(_) => "gap-instance",
            Command::Validate(_) => "validate",
        }
    }
}

/// Shared run context.
pub struct Context {
    pub command: &'static str,
    pub seed: u64,
    pub out: PathBuf,
    pub quiet: bool,
    config: Option<Value>,
}

impl Context {
    /// Defaults overlaid with the config file (either flat or under a key
    /// named after the command) and then with the flags that were given.
    pub fn resolve<P: Serialize + DeserializeOwned + Default, F: Serialize>(&self, flags: &F) -> CliResult<P> {
        let mut value = serde_json::to_value(P::default())?;
        if let Some(cfg) = &self.config {
            let (section, flat) = match cfg.get(self.command) {
                Some(s) => (s, false),
                None => (cfg, true),
            };
            if let Value::Object(map) = section {
                for (k, v) in map {
                    if k == "seed" || (flat && is_command(k)) {
                        continue;
                    }
                    value[k.as_str()] = v.clone();
                }
            } else {
                return Err(CliError::Config("config must be a JSON object".into()));
            }
        }
        if let Value::Object(map) = serde_json::to_value(flags)? {
            for (k, v) in map {
                if !v.is_null() {
                    value[k.as_str()] = v;
                }
            }
        }
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{e} (check the field names in --config)")))
    }

    pub fn path(&self, ext: &str) -> PathBuf {
        self.out.join(format!("{}.{ext}", self.command))
    }
}

fn is_command(k: &str) -> bool {
    matches!(k, "selftest" | "concentration" | "completeness" | "decode" | "gap-instance" | "validate")
}

fn read_config(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn seed_from(cli: Option<u64>, config: Option<&Value>, command: &str) -> CliResult<u64> {
    if let Some(s) = cli {
        return Ok(s);
    }
    if let Some(cfg) = config {
        let v = cfg.get(command).and_then(|s| s.get("seed")).or_else(|| cfg.get("seed"));
        if let Some(v) = v {
            return v.as_u64().ok_or_else(|| CliError::Config(format!("seed must be a non-negative integer, got {v}")));
        }
    }
    match std::env::var("GUG_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| CliError::Usage(format!("GUG_SEED={s} is not a non-negative integer"))),
        Err(_) => Ok(0),
    }
}

/// Parses `argv` and runs the subcommand, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Runs a parsed command; `Ok(false)` means a check failed.
pub fn execute(cli: Cli) -> CliResult<bool> {
    let config = cli.config.as_deref().map(read_config).transpose()?;
    let command = cli.command.name();
    let ctx = Context { command, seed: seed_from(cli.seed, config.as_ref(), command)?, out: cli.out, quiet: cli.quiet, config };
    let outcome = match &cli.command {
        Command::Selftest(f) => commands::selftest::run(&ctx, f)?,
        Command::Concentration(f) => commands::concentration::run(&ctx, f)?,
        Command::Completeness(f) => commands::completeness::run(&ctx, f)?,
        Command::Decode(f) => commands::decode::run(&ctx, f)?,
        Command::GapInstance(f) => commands::gap::run(&ctx, f)?,
        Command::Validate(f) => commands::validate::run(&ctx, f)?,
    };
    outcome.write(&ctx)?;
    Ok(outcome.passed())
}
