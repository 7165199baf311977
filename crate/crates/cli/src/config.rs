//! Flag and config-file handling.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use tunnelbound::bounds::BoundVariant;
use tunnelbound::optimize::Family;
use tunnelbound::potential::PotentialSpec;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "tunnelbound", version, about = "Exact transmission and rigorous lower bounds for 1D barriers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Exact,
    Bound,
    Sweep,
    Optimize,
    Transform,
    Particles,
    Compare,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Exact => "exact",
            CommandKind::Bound => "bound",
            CommandKind::Sweep => "sweep",
            CommandKind::Optimize => "optimize",
            CommandKind::Transform => "transform",
            CommandKind::Particles => "particles",
            CommandKind::Compare => "compare",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transmission and reflection from the numerical solver.
    Exact(CommonArgs),
    /// Bound values for the requested variants, checked against the solver.
    Bound(CommonArgs),
    /// Plot-ready long-format curves: one row per (curve, energy).
    Sweep(CommonArgs),
    /// Tightens Δ-dependent variants, or a free-function family, per energy.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        /// Free-function family to search instead of Δ.
        #[arg(long)]
        family: Option<String>,
        /// Evaluation budget of the free-function search.
        #[arg(long)]
        budget: Option<usize>,
        /// Δ search bracket as LO:HI (default: a small fraction of k∞ up to k∞).
        #[arg(long)]
        bracket: Option<String>,
    },
    /// Compares transmission before and after a Miller-Good change of variable.
    Transform {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Particle-production numbers `N` and upper bounds `sinh²θ`.
    Particles {
        #[command(flatten)]
        common: CommonArgs,
        /// Reads a previous CSV instead of recomputing; every `*_theta`
        /// column gains a matching `*_n_upper` column.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Exact values, bounds and the WKB estimate side by side.
    Compare(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON potential file.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// JSON run configuration; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// One energy or a comma-separated list.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub energy: Vec<f64>,
    /// Uniform grid LO:HI:N, endpoints included.
    #[arg(long, allow_hyphen_values = true)]
    pub energies: Option<String>,
    /// Bound variants, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub variant: Vec<String>,
    /// Cutoff for Δ-dependent variants: a number or `opt`.
    #[arg(long)]
    pub delta: Option<String>,
    /// Output directory [default: tunnelbound-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace existing output files
    #[arg(long)]
    pub overwrite: bool,
    /// Seed for randomised searches
    #[arg(long)]
    pub seed: Option<u64>,
    /// Accuracy requested from the scattering solver.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Adds a constant to every reported bound before the dominance check.
    #[arg(long, hide = true)]
    pub corrupt_bound: Option<f64>,
}

/// `j(x) = base · exp(amplitude · exp(−((x − center)/width)²))`.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MapArgs {
    #[arg(long = "j-base", default_value_t = 1.0)]
    pub base: f64,
    #[arg(long = "j-amplitude", default_value_t = 0.0)]
    pub amplitude: f64,
    #[arg(long = "j-center", default_value_t = 0.0)]
    pub center: f64,
    #[arg(long = "j-width", default_value_t = 1.0)]
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaSetting {
    Default,
    Value(f64),
    Optimize,
}

impl FromStr for DeltaSetting {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "opt" | "optimize" => Ok(DeltaSetting::Optimize),
            "default" => Ok(DeltaSetting::Default),
            v => {
                let x: f64 = v.parse().map_err(|_| CliError::Config(format!("--delta expects a number or `opt`, got `{s}`")))?;
                if !(x > 0.0 && x.is_finite()) {
                    return Err(CliError::Config(format!("--delta must be positive, got {x}")));
                }
                Ok(DeltaSetting::Value(x))
            }
        }
    }
}

/// Contents of a `--config` file. Paths are relative to the file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    potential: Option<serde_json::Value>,
    energy: Option<f64>,
    energies: Option<Vec<f64>>,
    energy_grid: Option<String>,
    variants: Option<Vec<String>>,
    delta: Option<serde_json::Value>,
    out: Option<PathBuf>,
    overwrite: Option<bool>,
    seed: Option<u64>,
    tol: Option<f64>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub potential_source: String,
    #[serde(skip)]
    pub potential: Arc<PotentialSpec>,
    pub energies: Vec<f64>,
    pub variants: Vec<BoundVariant>,
    pub delta: DeltaSetting,
    pub out: PathBuf,
    pub overwrite: bool,
    pub seed: u64,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt_bound: Option<f64>,
}

pub const DEFAULT_OUT: &str = "tunnelbound-out";
pub const DEFAULT_SEED: u64 = 0;

fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("energy grid must look like LO:HI:N, got `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    match n {
        0 => Err(CliError::Config("energy grid needs at least one point".into())),
        1 => Ok(vec![lo]),
        _ => Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()),
    }
}

fn load_potential(value: &serde_json::Value, base: &Path) -> Result<(String, PotentialSpec), CliError> {
    match value {
        serde_json::Value::String(p) => read_potential(&base.join(p)),
        obj @ serde_json::Value::Object(_) => {
            let text = obj.to_string();
            Ok((text.clone(), PotentialSpec::from_json_str(&text)?))
        }
        _ => Err(CliError::Config("`potential` must be a path or an inline object".into())),
    }
}

fn read_potential(path: &Path) -> Result<(String, PotentialSpec), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read potential {}: {e}", path.display())))?;
    Ok((path.display().to_string(), PotentialSpec::from_json_str(&text)?))
}

impl RunConfig {
    pub fn resolve(command: CommandKind, args: &CommonArgs) -> Result<Self, CliError> {
        let (file, base) = match &args.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                let file: ConfigFile = serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("config {}: {e}", p.display())))?;
                (file, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (ConfigFile::default(), PathBuf::new()),
        };

        let (potential_source, potential) = match (&args.potential, &file.potential) {
            (Some(p), _) => read_potential(p)?,
            (None, Some(v)) => load_potential(v, &base)?,
            (None, None) => return Err(CliError::Config("no potential given (use --potential)".into())),
        };

        let energies = if !args.energy.is_empty() {
            args.energy.clone()
        } else if let Some(g) = &args.energies {
            parse_grid(g)?
        } else if let Some(e) = &file.energies {
            e.clone()
        } else if let Some(g) = &file.energy_grid {
            parse_grid(g)?
        } else if let Some(e) = file.energy {
            vec![e]
        } else if command == CommandKind::Particles {
            Vec::new()
        } else {
            return Err(CliError::Config("no energies given (use --energy or --energies)".into()));
        };
        let threshold = potential.v_minus_inf.max(potential.v_plus_inf);
        for (i, &e) in energies.iter().enumerate() {
            if !e.is_finite() {
                return Err(CliError::Config(format!("energy {e} is not finite")));
            }
            if e <= threshold {
                return Err(CliError::Config(format!(
                    "energy {e} is not above the scattering threshold max(V(-inf), V(+inf)) = {threshold}"
                )));
            }
            if i > 0 && e <= energies[i - 1] {
                return Err(CliError::Config("energy grid must be strictly increasing".into()));
            }
        }

        let names: Vec<String> = if !args.variant.is_empty() {
            args.variant.clone()
        } else if let Some(v) = &file.variants {
            v.clone()
        } else {
            vec!["thm1".into()]
        };
        let variants = names
            .iter()
            .map(|n| n.trim().parse::<BoundVariant>().map_err(|e| CliError::Config(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;

        let delta = match (&args.delta, &file.delta) {
            (Some(s), _) => s.parse()?,
            (None, Some(serde_json::Value::String(s))) => s.parse()?,
            (None, Some(serde_json::Value::Number(n))) => n.to_string().parse()?,
            (None, Some(other)) => return Err(CliError::Config(format!("`delta` must be a number or \"opt\", got {other}"))),
            (None, None) => DeltaSetting::Default,
        };

        let tol = args.tol.or(file.tol).unwrap_or(tunnelbound::scattering::DEFAULT_ACCURACY);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::Config(format!("--tol must lie in (0, 1), got {tol}")));
        }

        Ok(RunConfig {
            command,
            potential_source,
            potential: Arc::new(potential),
            energies,
            variants,
            delta,
            out: args.out.clone().or(file.out.map(|o| base.join(o))).unwrap_or_else(|| DEFAULT_OUT.into()),
            overwrite: args.overwrite || file.overwrite.unwrap_or(false),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            tol,
            corrupt_bound: args.corrupt_bound,
        })
    }
}

pub fn parse_family(s: &str) -> Result<Family, CliError> {
    s.parse().map_err(|e: tunnelbound::Error| CliError::Config(e.to_string()))
}

pub fn parse_bracket(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Config(format!("bracket must look like LO:HI, got `{s}`"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("1:3:3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        assert!(parse_grid("1:3").is_err());
        assert!(parse_grid("1:3:0").is_err());
    }

    #[test]
    fn delta_parsing() {
        assert_eq!("opt".parse::<DeltaSetting>().unwrap(), DeltaSetting::Optimize);
        assert_eq!("0.5".parse::<DeltaSetting>().unwrap(), DeltaSetting::Value(0.5));
        assert!("-1".parse::<DeltaSetting>().is_err());
    }
}
