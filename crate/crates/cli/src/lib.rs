//! Command-line runner for `tunnelbound`.
//!
//! Every command writes `<command>.csv` and `<command>.json` into the output
//! directory. Exit codes: 0 success, 1 usage or configuration error, 2 a
//! rigorous bound exceeded the exact transmission, 3 a numerical method
//! failed to converge.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;

use commands::Outcome;
use config::{Cli, Command, CommandKind, CommonArgs, RunConfig};
use output::{manifest, OutputPaths};

/// Slack allowed between a bound and the exact transmission before a row
/// counts as a dominance violation.
pub const DOMINANCE_TOL: f64 = 1e-6;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DOMINANCE: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] tunnelbound::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{} dominance violation(s); first: {}", .0.len(), .0[0])]
    Dominance(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Dominance(_) => EXIT_DOMINANCE,
            CliError::Core(tunnelbound::Error::Convergence { .. } | tunnelbound::Error::StepUnderflow(_)) => {
                EXIT_CONVERGENCE
            }
            _ => EXIT_CONFIG,
        }
    }
}

fn finish(kind: CommandKind, config: serde_json::Value, out: &std::path::Path, overwrite: bool, outcome: Outcome) -> Result<(), CliError> {
    let paths = OutputPaths::new(out, kind.name());
    paths.prepare(overwrite)?;
    let m = manifest(kind.name(), config, outcome.summary, &outcome.violations, &paths);
    paths.write(&outcome.table, &m)?;
    if outcome.violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Dominance(outcome.violations))
    }
}

fn run_common(
    kind: CommandKind,
    args: &CommonArgs,
    extra: serde_json::Value,
    body: impl FnOnce(&RunConfig) -> Result<Outcome, CliError>,
) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(kind, args)?;
    // fail on an existing file before doing any work
    OutputPaths::new(&cfg.out, kind.name()).prepare(cfg.overwrite)?;
    let outcome = body(&cfg)?;
    let mut echo = serde_json::to_value(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    echo["potential"] = serde_json::to_value(&*cfg.potential).map_err(|e| CliError::Config(e.to_string()))?;
    if let serde_json::Value::Object(extra) = extra {
        for (k, v) in extra {
            echo[k] = v;
        }
    }
    finish(kind, echo, &cfg.out, cfg.overwrite, outcome)
}

/// Runs one command.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Exact(a) => run_common(CommandKind::Exact, &a, serde_json::json!({}), commands::exact),
        Command::Bound(a) => run_common(CommandKind::Bound, &a, serde_json::json!({}), commands::bound),
        Command::Sweep(a) => run_common(CommandKind::Sweep, &a, serde_json::json!({}), commands::sweep),
        Command::Compare(a) => run_common(CommandKind::Compare, &a, serde_json::json!({}), commands::compare),
        Command::Optimize { common, family, budget, bracket } => {
            let family = family.as_deref().map(config::parse_family).transpose()?;
            let bracket = bracket.as_deref().map(config::parse_bracket).transpose()?;
            let extra = serde_json::json!({ "family": family, "budget": budget, "bracket": bracket });
            run_common(CommandKind::Optimize, &common, extra, |cfg| commands::optimize(cfg, family, budget, bracket))
        }
        Command::Transform { common, map } => {
            let extra = serde_json::json!({ "j": map });
            run_common(CommandKind::Transform, &common, extra, |cfg| commands::transform(cfg, &map))
        }
        Command::Particles { common, from: Some(src) } => {
            let out = common.out.clone().unwrap_or_else(|| config::DEFAULT_OUT.into());
            OutputPaths::new(&out, CommandKind::Particles.name()).prepare(common.overwrite)?;
            let outcome = commands::particles_from_csv(&src)?;
            let echo = serde_json::json!({ "command": "particles", "from": src, "out": out });
            finish(CommandKind::Particles, echo, &out, common.overwrite, outcome)
        }
        Command::Particles { common, from: None } => {
            run_common(CommandKind::Particles, &common, serde_json::json!({}), commands::particles)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("tunnelbound: {e}");
            if let CliError::Dominance(v) = &e {
                for line in v.iter().skip(1).take(20) {
                    eprintln!("  {line}");
                }
            }
            e.exit_code()
        }
    }
}
