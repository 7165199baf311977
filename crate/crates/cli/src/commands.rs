//! The subcommands. Each produces a table, a summary for the manifest and
//! the list of dominance violations it found.

use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};
use tunnelbound::bogoliubov::{occupation_bound_from_theta, transmission_to_occupation};
use tunnelbound::bounds::{evaluate_default, BoundReport, BoundVariant};
use tunnelbound::free::{FreeFunction, LogProfile};
use tunnelbound::miller_good::MillerGoodMap;
use tunnelbound::optimize::{optimize_delta, optimize_free_function, Family, DEFAULT_BUDGET};
use tunnelbound::potential::DispersionProfile;
use tunnelbound::scattering::{solve_scattering, ScatteringResult};

use crate::config::{DeltaSetting, MapArgs, RunConfig};
use crate::output::{Cell, Table};
use crate::{CliError, DOMINANCE_TOL};

pub struct Outcome {
    pub table: Table,
    pub summary: Value,
    pub violations: Vec<String>,
}

fn is_numerical_failure(e: &tunnelbound::Error) -> bool {
    matches!(e, tunnelbound::Error::Convergence { .. } | tunnelbound::Error::StepUnderflow(_))
}

fn failed_report(variant: BoundVariant, err: &tunnelbound::Error) -> BoundReport {
    BoundReport {
        variant,
        theta: f64::NAN,
        bound: f64::NAN,
        ln_bound: f64::NAN,
        valid: false,
        violated_assumptions: vec![err.to_string()],
        is_rigorous: variant.is_rigorous(),
        choice: String::new(),
        delta: None,
    }
}

/// Default bracket for Δ searches: `(10⁻³ k, k]` with `k = min k±∞`.
fn delta_bracket(d: &DispersionProfile) -> (f64, f64) {
    let k = d.k_minus_inf().min(d.k_plus_inf());
    (1e-3 * k, k)
}

fn evaluate(d: &DispersionProfile, variant: BoundVariant, delta: DeltaSetting) -> Result<BoundReport, CliError> {
    let result = match delta {
        DeltaSetting::Optimize if variant.uses_delta() => match optimize_delta(d, variant, delta_bracket(d)) {
            Ok((_, r)) => Ok(r),
            Err(tunnelbound::Error::EmptyBracket(_) | tunnelbound::Error::NoFeasiblePoint) => {
                evaluate_default(d, variant, None)
            }
            Err(e) => Err(e),
        },
        DeltaSetting::Value(x) if variant.uses_delta() => evaluate_default(d, variant, Some(x)),
        _ => evaluate_default(d, variant, None),
    };
    match result {
        Ok(r) => Ok(r),
        Err(e) if is_numerical_failure(&e) => Err(e.into()),
        Err(e) => Ok(failed_report(variant, &e)),
    }
}

struct EnergyRow {
    energy: f64,
    exact: ScatteringResult,
    bounds: Vec<BoundReport>,
    wkb: Option<BoundReport>,
}

fn profile(cfg: &RunConfig, e: f64) -> Result<DispersionProfile, CliError> {
    Ok(DispersionProfile::new(cfg.potential.clone(), e)?)
}

fn compute_rows(cfg: &RunConfig, with_wkb: bool) -> Result<Vec<EnergyRow>, CliError> {
    cfg.energies
        .par_iter()
        .map(|&e| {
            let d = profile(cfg, e)?;
            let exact = solve_scattering(&d, cfg.tol)?;
            let mut bounds = cfg
                .variants
                .iter()
                .map(|&v| evaluate(&d, v, cfg.delta))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(offset) = cfg.corrupt_bound {
                for b in &mut bounds {
                    b.bound += offset;
                }
            }
            let wkb = if with_wkb { Some(evaluate(&d, BoundVariant::WkbEstimate, cfg.delta)?) } else { None };
            Ok(EnergyRow { energy: e, exact, bounds, wkb })
        })
        .collect()
}

fn check_dominance(energy: f64, t_exact: f64, r: &BoundReport, out: &mut Vec<String>) {
    if r.is_rigorous && r.valid && r.violates(t_exact, DOMINANCE_TOL) {
        out.push(format!(
            "E = {energy}: {} bound {:.12} exceeds exact transmission {:.12}",
            r.variant, r.bound, t_exact
        ));
    }
}

fn variant_names(cfg: &RunConfig) -> Vec<&'static str> {
    cfg.variants.iter().map(|v| v.name()).collect()
}

pub fn exact(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rows = cfg
        .energies
        .par_iter()
        .map(|&e| Ok((e, solve_scattering(&profile(cfg, e)?, cfg.tol)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut table = Table::new(
        ["E", "T_exact", "R_exact", "unitarity_defect", "error_estimate"].map(String::from).to_vec(),
    );
    let mut worst: f64 = 0.0;
    for (e, s) in rows {
        worst = worst.max(s.unitarity_defect());
        table.rows.push(vec![e.into(), s.transmission.into(), s.reflection.into(), s.unitarity_defect().into(), s.error_estimate.into()]);
    }
    Ok(Outcome { table, summary: json!({ "max_unitarity_defect": worst }), violations: Vec::new() })
}

pub fn bound(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rows = compute_rows(cfg, false)?;
    let mut header = vec!["E".to_string(), "T_exact".to_string()];
    for v in variant_names(cfg) {
        header.extend([format!("{v}_theta"), format!("{v}_bound"), format!("{v}_valid"), format!("{v}_delta")]);
    }
    let mut table = Table::new(header);
    let mut violations = Vec::new();
    for row in rows {
        let mut cells: Vec<Cell> = vec![row.energy.into(), row.exact.transmission.into()];
        for r in &row.bounds {
            check_dominance(row.energy, row.exact.transmission, r, &mut violations);
            cells.extend([r.theta.into(), r.bound.into(), r.valid.into(), r.delta.into()]);
        }
        table.rows.push(cells);
    }
    Ok(Outcome { table, summary: json!({ "rows": cfg.energies.len() }), violations })
}

pub fn compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rows = compute_rows(cfg, true)?;
    let mut header = vec!["E".to_string(), "T_exact".to_string(), "R_exact".to_string()];
    for v in variant_names(cfg) {
        header.push(format!("{v}_bound"));
    }
    header.push("wkb_estimate".into());
    for v in variant_names(cfg) {
        header.extend([format!("{v}_theta"), format!("{v}_valid")]);
    }
    let mut table = Table::new(header);
    let mut violations = Vec::new();
    let mut slack: Vec<Option<f64>> = vec![None; cfg.variants.len()];
    for row in rows {
        let t = row.exact.transmission;
        let mut cells: Vec<Cell> = vec![row.energy.into(), t.into(), row.exact.reflection.into()];
        for (i, r) in row.bounds.iter().enumerate() {
            check_dominance(row.energy, t, r, &mut violations);
            if r.valid && r.bound.is_finite() {
                let gap = t - r.bound;
                slack[i] = Some(slack[i].map_or(gap, |s: f64| s.min(gap)));
            }
            cells.push(r.bound.into());
        }
        cells.push(row.wkb.as_ref().map(|w| w.bound).into());
        for r in &row.bounds {
            cells.extend([r.theta.into(), r.valid.into()]);
        }
        table.rows.push(cells);
    }
    let min_slack: serde_json::Map<String, Value> =
        cfg.variants.iter().zip(&slack).map(|(v, s)| (v.name().to_string(), json!(s))).collect();
    Ok(Outcome { table, summary: json!({ "min_slack": min_slack }), violations })
}

pub fn sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rows = compute_rows(cfg, false)?;
    let mut table = Table::new(["curve", "E", "value", "valid"].map(String::from).to_vec());
    let mut violations = Vec::new();
    for row in &rows {
        for r in &row.bounds {
            check_dominance(row.energy, row.exact.transmission, r, &mut violations);
        }
    }
    for row in &rows {
        table.rows.push(vec!["T_exact".into(), row.energy.into(), row.exact.transmission.into(), true.into()]);
    }
    for (i, v) in cfg.variants.iter().enumerate() {
        for row in &rows {
            let r = &row.bounds[i];
            table.rows.push(vec![v.name().into(), row.energy.into(), r.bound.into(), r.valid.into()]);
        }
    }
    Ok(Outcome { table, summary: json!({ "curves": 1 + cfg.variants.len(), "points": rows.len() }), violations })
}

pub fn optimize(
    cfg: &RunConfig,
    family: Option<Family>,
    budget: Option<usize>,
    bracket: Option<(f64, f64)>,
) -> Result<Outcome, CliError> {
    match family {
        Some(f) => optimize_family(cfg, f, budget.unwrap_or(DEFAULT_BUDGET)),
        None => optimize_deltas(cfg, bracket),
    }
}

fn optimize_deltas(cfg: &RunConfig, bracket: Option<(f64, f64)>) -> Result<Outcome, CliError> {
    let variants: Vec<BoundVariant> = cfg.variants.iter().copied().filter(|v| v.uses_delta()).collect();
    if variants.is_empty() {
        return Err(CliError::Config(
            "optimize needs a Δ-dependent variant (case4, improved5, wkb_like) or --family".into(),
        ));
    }
    let rows = cfg
        .energies
        .par_iter()
        .map(|&e| {
            let d = profile(cfg, e)?;
            let t = solve_scattering(&d, cfg.tol)?.transmission;
            let br = bracket.unwrap_or_else(|| delta_bracket(&d));
            variants
                .iter()
                .map(|&v| {
                    let default = evaluate(&d, v, DeltaSetting::Default)?;
                    let (star, report) = optimize_delta(&d, v, br)?;
                    Ok((e, t, v, star, report, default))
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut table = Table::new(
        ["E", "variant", "delta_star", "theta", "bound", "default_bound", "T_exact", "valid"]
            .map(String::from)
            .to_vec(),
    );
    let mut violations = Vec::new();
    let mut results = Vec::new();
    for (e, t, v, star, mut r, default) in rows.into_iter().flatten() {
        if let Some(offset) = cfg.corrupt_bound {
            r.bound += offset;
        }
        check_dominance(e, t, &r, &mut violations);
        results.push(json!({
            "energy": e, "variant": v.name(), "delta_star": star, "bound": r.bound, "default_bound": default.bound,
        }));
        table.rows.push(vec![
            e.into(),
            v.name().into(),
            star.into(),
            r.theta.into(),
            r.bound.into(),
            default.bound.into(),
            t.into(),
            r.valid.into(),
        ]);
    }
    let summary = if results.len() == 1 {
        json!({ "delta_star": results[0]["delta_star"], "results": results })
    } else {
        json!({ "results": results })
    };
    Ok(Outcome { table, summary, violations })
}

fn optimize_family(cfg: &RunConfig, family: Family, budget: usize) -> Result<Outcome, CliError> {
    let rows = cfg
        .energies
        .par_iter()
        .map(|&e| {
            let d = profile(cfg, e)?;
            let t = solve_scattering(&d, cfg.tol)?.transmission;
            let opt = optimize_free_function(&d, family, &family.default_box(&d), budget, cfg.seed)?;
            Ok((e, t, opt))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut header = vec!["E".to_string()];
    header.extend(family.parameter_names().iter().map(|s| s.to_string()));
    header.extend(["theta", "bound", "default_bound", "T_exact", "evaluations"].map(String::from));
    let mut table = Table::new(header);
    let mut violations = Vec::new();
    for (e, t, mut opt) in rows {
        if let Some(offset) = cfg.corrupt_bound {
            opt.report.bound += offset;
        }
        check_dominance(e, t, &opt.report, &mut violations);
        let mut cells: Vec<Cell> = vec![e.into()];
        cells.extend(opt.params.iter().map(|&p| Cell::Num(p)));
        cells.extend([
            opt.report.theta.into(),
            opt.report.bound.into(),
            opt.default_report.as_ref().map(|r| r.bound).into(),
            t.into(),
            Cell::Num(opt.evaluations as f64),
        ]);
        table.rows.push(cells);
    }
    Ok(Outcome {
        table,
        summary: json!({ "family": family.name(), "budget": budget, "seed": cfg.seed }),
        violations,
    })
}

pub fn transform(cfg: &RunConfig, map: &MapArgs) -> Result<Outcome, CliError> {
    if !(map.base > 0.0 && map.width > 0.0) {
        return Err(CliError::Config("--j-base and --j-width must be positive".into()));
    }
    let j = FreeFunction::Smooth(LogProfile::bump(map.base, map.amplitude, map.center, map.width));
    let rows = cfg
        .energies
        .par_iter()
        .map(|&e| {
            let d = profile(cfg, e)?;
            let original = solve_scattering(&d, cfg.tol)?;
            let mapped = MillerGoodMap::new(&d, j.clone())?.solve_transformed(cfg.tol)?;
            Ok((e, original.transmission, mapped.transmission))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut table = Table::new(["E", "T_original", "T_transformed", "abs_diff"].map(String::from).to_vec());
    let mut worst: f64 = 0.0;
    for (e, a, b) in rows {
        worst = worst.max((a - b).abs());
        table.rows.push(vec![e.into(), a.into(), b.into(), (a - b).abs().into()]);
    }
    Ok(Outcome { table, summary: json!({ "j": map, "max_abs_diff": worst }), violations: Vec::new() })
}

pub fn particles(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rows = compute_rows(cfg, false)?;
    let mut header = vec!["E".to_string(), "T_exact".to_string(), "N_exact".to_string()];
    for v in variant_names(cfg) {
        header.extend([format!("{v}_theta"), format!("{v}_n_upper"), format!("{v}_ln_n_upper")]);
    }
    let mut table = Table::new(header);
    let mut violations = Vec::new();
    for row in rows {
        let t = row.exact.transmission;
        let n = transmission_to_occupation(t).ok();
        let mut cells: Vec<Cell> = vec![row.energy.into(), t.into(), n.into()];
        for r in &row.bounds {
            check_dominance(row.energy, t, r, &mut violations);
            let (up, ln) = occupation_columns(r.theta);
            cells.extend([r.theta.into(), up, ln]);
        }
        table.rows.push(cells);
    }
    Ok(Outcome { table, summary: json!({ "rows": cfg.energies.len() }), violations })
}

fn occupation_columns(theta: f64) -> (Cell, Cell) {
    match occupation_bound_from_theta(theta) {
        Ok(b) if theta.is_finite() => (b.n_upper.into(), b.ln_n_upper.into()),
        _ => (Cell::Empty, Cell::Empty),
    }
}

/// Appends `*_n_upper` and `*_ln_n_upper` after every `*_theta` column of
/// an existing CSV, and `N_exact` after `T_exact`.
pub fn particles_from_csv(path: &Path) -> Result<Outcome, CliError> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    let thetas: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_suffix("_theta").map(|p| (i, p.to_string())))
        .collect();
    let t_col = header.iter().position(|h| h == "T_exact");
    if thetas.is_empty() && t_col.is_none() {
        return Err(CliError::Config(format!("{} has neither *_theta nor T_exact columns", path.display())));
    }
    let mut new_header = header.clone();
    if t_col.is_some() {
        new_header.push("N_exact".into());
    }
    for (_, p) in &thetas {
        new_header.extend([format!("{p}_n_upper"), format!("{p}_ln_n_upper")]);
    }
    let mut table = Table::new(new_header);
    let parse = |s: &str, line: usize| -> Result<f64, CliError> {
        match s.trim() {
            "" => Ok(f64::NAN),
            "inf" => Ok(f64::INFINITY),
            v => v.parse().map_err(|_| CliError::Config(format!("{}:{line}: `{v}` is not a number", path.display()))),
        }
    };
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let mut cells: Vec<Cell> = rec.iter().map(|s| Cell::Text(s.to_string())).collect();
        if let Some(c) = t_col {
            let t = parse(&rec[c], line + 2)?;
            cells.push(transmission_to_occupation(t).ok().into());
        }
        for (i, _) in &thetas {
            let (up, ln) = occupation_columns(parse(&rec[*i], line + 2)?);
            cells.extend([up, ln]);
        }
        table.rows.push(cells);
    }
    Ok(Outcome {
        table,
        summary: json!({ "source": path, "theta_columns": thetas.iter().map(|(_, p)| p).collect::<Vec<_>>() }),
        violations: Vec::new(),
    })
}

