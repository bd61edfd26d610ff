//! Command execution: each command produces a JSON report and, where a
//! profile or table exists, a CSV artifact.

use std::path::PathBuf;
use std::sync::Arc;

use serde_json::{json, Value};

use qcurve_core::edge::FactoredOperator;
use qcurve_core::expansion::{fit_envelope_frequency, fit_leading, scalar_asymptotic_coefficient, weighted_norm};
use qcurve_core::geometry::{
    q_of_conformal_with, scalar_deviation_with, scalar_of_conformal_with, Dimension, RadialCalculus,
};
use qcurve_core::grid::RadialGrid;
use qcurve_core::indicial::{q_indicial_spectrum, u_indicial_spectrum};
use qcurve_core::qcurv::{sweep_family, QSolver, TargetCurvature};
use qcurve_core::report::{canonical_json_value, format_cell, profile_csv, table_csv, write_text, Column};
use qcurve_core::special::{model_solutions, BesselKind};
use qcurve_core::ucurve::{u_curvature_hyperbolic, u_curvature_of_conformal, DetParams, USolver};
use qcurve_core::verify::{asymptotics_check, bessel_check, covariance_check, reference_factors};
use qcurve_core::Error;

use crate::config::{Check, CommandKind, Family, Format, RunConfig};

/// Bessel check: ODE residual bound.
pub const BESSEL_RESIDUAL_TOL: f64 = 1e-8;
/// Bessel check: Wronskian bound.
pub const WRONSKIAN_TOL: f64 = 1e-8;
/// Bessel check: bound on the spread of `ln|I| − t` and `ln|K| + t` on `[5, 20]`.
pub const DICHOTOMY_SPREAD_TOL: f64 = 2.0;
/// Covariance check: minimal refinement ratio.
pub const COVARIANCE_MIN_RATIO: f64 = 3.5;
/// Covariance check: coarse / fine grid sizes.
pub const COVARIANCE_POINTS: (usize, usize) = (2048, 4096);
/// Asymptotics check: relative tolerance against the linearized closed form.
pub const ASYMPTOTICS_REL_TOL: f64 = 0.01;

/// Whether the computation reached its goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Exit code 0.
    Success,
    /// Solver did not converge or a check failed: exit code 1.
    Failed,
}

/// Artifacts of one command.
#[derive(Debug)]
pub struct Outcome {
    /// File stem (`solve`, `verify_bessel`, ...).
    pub stem: String,
    /// JSON report.
    pub report: Value,
    /// Optional CSV artifact.
    pub csv: Option<String>,
    /// Exit status.
    pub status: Status,
}

impl Outcome {
    /// Writes `<stem>.json` (and `<stem>.csv`) into the output directory and
    /// returns the text to echo on stdout.
    pub fn write(&self, cfg: &RunConfig) -> qcurve_core::Result<String> {
        let json_text = canonical_json_value(&self.report);
        let json_path: PathBuf = cfg.out_dir.join(format!("{}.json", self.stem));
        write_text(&json_path, &json_text)?;
        if let Some(csv) = &self.csv {
            write_text(&cfg.out_dir.join(format!("{}.csv", self.stem)), csv)?;
        }
        Ok(match (cfg.format, &self.csv) {
            (Format::Csv, Some(csv)) => csv.clone(),
            _ => json_text,
        })
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn grid_of(cfg: &RunConfig) -> qcurve_core::Result<Arc<RadialGrid>> {
    Ok(Arc::new(RadialGrid::new(cfg.r_max, cfg.points)?))
}

fn envelope(status: Status, stem: &str, cfg: &RunConfig, body: Value, csv: Option<String>) -> Outcome {
    let mut report = json!({ "command": cfg.command, "config": to_value(cfg), "status": match status {
        Status::Success => "ok",
        Status::Failed => "failed",
    }});
    if let (Value::Object(dst), Value::Object(src)) = (&mut report, body) {
        dst.extend(src);
    }
    Outcome { stem: stem.to_string(), report, csv, status }
}

/// Runs the configured command.
pub fn execute(cfg: &RunConfig) -> qcurve_core::Result<Outcome> {
    match cfg.command {
        CommandKind::Indicial => indicial(cfg),
        CommandKind::Kernel => kernel(cfg),
        CommandKind::Solve => solve(cfg),
        CommandKind::Sweep => sweep(cfg),
        CommandKind::Ucurve => ucurve(cfg),
        CommandKind::Expand => expand(cfg),
        CommandKind::Verify => match cfg.check.expect("validated check") {
            Check::Bessel => verify_bessel(cfg),
            Check::Covariance => verify_covariance(cfg),
            Check::Asymptotics => verify_asymptotics(cfg),
        },
    }
}

fn indicial(cfg: &RunConfig) -> qcurve_core::Result<Outcome> {
    let spectrum = match cfg.family {
        Family::Q { n } => q_indicial_spectrum(Dimension::new(n as i64)?)?,
        Family::U { alpha, .. } => u_indicial_spectrum(alpha)?,
    };
    let rows = spectrum.roots.iter().enumerate().map(|(k, z)| {
        vec![
            k.to_string(),
            format_cell(z.re),
            format_cell(z.im),
            format_cell(spectrum.lambda_set[k]),
            spectrum.oscillatory[k].to_string(),
        ]
    });
    let csv = table_csv(&["index", "re", "im", "lambda", "oscillatory"], rows)?;
    let body = json!({
        "spectrum": to_value(&spectrum),
        "max_polynomial_residual": spectrum.max_polynomial_residual(),
    });
    Ok(envelope(Status::Success, "indicial", cfg, body, Some(csv)))
}

fn operator_for(cfg: &RunConfig, grid: Arc<RadialGrid>) -> qcurve_core::Result<FactoredOperator> {
    match cfg.family {
        Family::Q { n } => FactoredOperator::for_dimension(Dimension::new(n as i64)?, grid),
        Family::U { alpha, .. } => FactoredOperator::for_alpha(alpha, grid),
    }
}

fn kernel(cfg: &RunConfig) -> qcurve_core::Result<Outcome> {
    let grid = grid_of(cfg)?;
    let op = operator_for(cfg, grid.clone())?;
    match op.projection() {
        Ok(proj) => {
            let asymptotics = proj.kernel().asymptotics;
            let k = proj.kernel();
            let p = asymptotics.decay_exponent();
            let envelope_fit = fit_envelope_frequency(&k.base, proj.window()).ok();
            let below = weighted_norm(&k.base, 0.9 * p, 0)?;
            let above = weighted_norm(&k.base, 1.1 * p, 0)?;
            let body = json!({
                "kernel": {
                    "regular": true,
                    "asymptotics": to_value(&asymptotics),
                    "leading_fit": [k.leading_fit.0, k.leading_fit.1],
                    "fit_window": [proj.window().0, proj.window().1],
                    "fit_rcond": proj.rcond(),
                    "sup_norm": k.base.sup_norm(),
                    "envelope": to_value(&envelope_fit),
                    "weighted_norm_below": { "nu": 0.9 * p, "norm": to_value(&below) },
                    "weighted_norm_above": { "nu": 1.1 * p, "norm": to_value(&above) },
                }
            });
            let csv = profile_csv(
                &grid,
                &[Column::new("value", k.base.values()), Column::new("derivative", &k.base_derivative)],
            )?;
            Ok(envelope(Status::Success, "kernel", cfg, body, Some(csv)))
        }
        Err(Error::NoKernel(reason)) => {
            // No regular decaying kernel: report the decaying exterior branch instead.
            let r_min = 1.0;
            let ext = op.exterior_branch(r_min)?;
            let window = (cfg.r_max - 6.0, cfg.r_max - 0.5);
            let envelope_fit = fit_envelope_frequency(&ext, window).ok();
            let body = json!({
                "kernel": {
                    "regular": false,
                    "reason": reason,
                    "exterior_branch": { "r_min": r_min, "window": [window.0, window.1], "envelope": to_value(&envelope_fit) },
                }
            });
            let csv = profile_csv(&grid, &[Column::new("exterior", ext.values())])?;
            Ok(envelope(Status::Success, "kernel", cfg, body, Some(csv)))
        }
        Err(e) => Err(e),
    }
}

fn target_for(cfg: &RunConfig, dim: Dimension, grid: Arc<RadialGrid>) -> qcurve_core::Result<TargetCurvature> {
    if cfg.eta == 0.0 {
        TargetCurvature::hyperbolic(dim, grid)
    } else {
        let nu = cfg.iteration.nu.unwrap_or_else(|| qcurve_core::qcurv::default_nu(dim));
        TargetCurvature::sech_bump(dim, grid, cfg.eta, nu)
    }
}

/// `(Q̃, R̃)` of a solution, `NaN` where the conformal factor is inadmissible.
fn curvature_columns(calc: &RadialCalculus, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nan = || vec![f64::NAN; u.len()];
    let q = q_of_conformal_with(calc, u).unwrap_or_else(|_| nan());
    let r = scalar_of_conformal_with(calc, u).unwrap_or_else(|_| nan());
    (q, r)
}

fn solve(cfg: &RunConfig) -> qcurve_core::Result<Outcome> {
    let dim = cfg.dim();
    let grid = grid_of(cfg)?;
    let f = target_for(cfg, dim, grid.clone())?;
    let solver = QSolver::new(dim, grid.clone())?;
    let (report, u) = solver.solve(cfg.amplitude, &f, &cfg.iteration)?;
    let calc = RadialCalculus::new(grid.clone(), dim)?;
    let (q, r) = curvature_columns(&calc, u.values());
    let csv = profile_csv(&grid, &[Column::new("u", u.values()), Column::new("Q", &q), Column::new("R", &r)])?;
    let status = if report.converged { Status::Success } else { Status::Failed };
    let body = json!({
        "target": { "background": f.background(), "eta": cfg.eta, "nu": f.nu(), "deviation_norm": f.deviation_norm(), "warnings": f.warnings() },
        "report": to_value(&report),
    });
    Ok(envelope(status, "solve", cfg, body, Some(csv)))
}

fn sweep(cfg: &RunConfig) -> qcurve_core::Result<Outcome> {
    let dim = cfg.dim();
    let grid = grid_of(cfg)?;
    let f = target_for(cfg, dim, grid.clone())?;
    let solver = QSolver::new(dim, grid.clone())?;
    let (report, solutions) = sweep_family(&solver, &cfg.amplitudes, &f, &cfg.iteration)?;
    let names: Vec<String> = (0..solutions.len()).map(|k| format!("u_{k}")).collect();
    let nan = vec![f64::NAN; grid.len()];
    let columns: Vec<Column<'_>> = names
        .iter()
        .zip(&solutions)
        .map(|(name, s)| Column::new(name, s.as_ref().map_or(nan.as_slice(), |u| u.values())))
        .collect();
    let csv = profile_csv(&grid, &columns)?;
    let all_ok = report.entries.iter().all(|e| e.report.as_ref().is_some_and(|r| r.converged));
    let status = if all_ok { Status::Success } else { Status::Failed };
    Ok(envelope(status, "sweep", cfg, json!({ "sweep": to_value(&report) }), Some(csv)))
}

fn ucurve(cfg: &RunConfig) -> qcurve_core::Result<Outcome> {
    let Family::U { params: Some(params), .. } = cfg.family else {
        return Err(Error::Precondition("ucurve needs U-curvature coefficients".into()));
    };
    let grid = grid_of(cfg)?;
    let solver = USolver::new(params, grid.clone())?;
    let (report, w) = solver.solve(cfg.amplitude, cfg.target, &cfg.iteration)?;
    let calc = RadialCalculus::new(grid.clone(), Dimension::new(4)?)?;
    let ut = u_curvature_of_conformal(&calc, w.values(), &params);
    let csv = profile_csv(&grid, &[Column::new("w", w.values()), Column::new("U", &ut)])?;
    let status = if report.converged { Status::Success } else { Status::Failed };
    let body = json!({
        "params": to_value::<DetParams>(&params),
        "alpha": params.alpha(),
        "model_u": u_curvature_hyperbolic(&params),
        "spectrum": to_value(solver.spectrum()),
        "report": to_value(&report),
    });
    Ok(envelope(status, "ucurve", cfg, body, Some(csv)))
}

fn expand(cfg: &RunConfig) -> qcurve_core::Result<Outcome> {
    let dim = cfg.dim();
    let grid = grid_of(cfg)?;
    let f = target_for(cfg, dim, grid.clone())?;
    let solver = QSolver::new(dim, grid.clone())?;
    let (report, u) = solver.solve(cfg.amplitude, &f, &cfg.iteration)?;
    if !report.converged {
        let body = json!({ "report": to_value(&report), "expansion": null, "scalar_asymptotics": null });
        return Ok(envelope(Status::Failed, "expand", cfg, body, None));
    }
    let leading = fit_leading(&u, dim, None);
    let scalar = scalar_asymptotic_coefficient(&u, dim);
    let calc = RadialCalculus::new(grid.clone(), dim)?;
    let dev = scalar_deviation_with(&calc, u.values())?;
    let ratio: Vec<f64> = dev.iter().zip(u.values()).map(|(d, v)| if *v == 0.0 { f64::NAN } else { d / v }).collect();
    let csv = profile_csv(&grid, &[Column::new("u", u.values()), Column::new("scalar_ratio", &ratio)])?;
    let body = json!({
        "report": to_value(&report),
        "expansion": match &leading { Ok(fit) => to_value(fit), Err(e) => json!({ "error": e.to_string() }) },
        "scalar_asymptotics": match &scalar { Ok(s) => to_value(s), Err(e) => json!({ "error": e.to_string() }) },
    });
    Ok(envelope(Status::Success, "expand", cfg, body, Some(csv)))
}

fn verify_bessel(cfg: &RunConfig) -> qcurve_core::Result<Outcome> {
    let report = bessel_check()?;
    let passed = report.max_residual() < BESSEL_RESIDUAL_TOL
        && report.max_wronskian_error() < WRONSKIAN_TOL
        && report.max_spread() < DICHOTOMY_SPREAD_TOL;
    let mut rows = Vec::new();
    let (lo, hi) = report.residual_window;
    for (label, factor) in reference_factors() {
        for sol in model_solutions(factor)? {
            let kind = match sol.kind {
                BesselKind::I => "I",
                BesselKind::K => "K",
            };
            for k in 0..=78 {
                let t = lo + (hi - lo) * k as f64 / 78.0;
                let v = sol.eval(t)?;
                let res = sol.pointwise_residual(t)?;
                rows.push(vec![
                    label.clone(),
                    kind.to_string(),
                    format_cell(t),
                    format_cell(v.re),
                    format_cell(v.im),
                    format_cell(res),
                ]);
            }
        }
    }
    let csv = table_csv(&["order", "kind", "t", "value_re", "value_im", "residual"], rows)?;
    let status = if passed { Status::Success } else { Status::Failed };
    let body = json!({
        "bessel": to_value(&report),
        "tolerances": { "residual": BESSEL_RESIDUAL_TOL, "wronskian": WRONSKIAN_TOL, "dichotomy_spread": DICHOTOMY_SPREAD_TOL },
        "passed": passed,
    });
    Ok(envelope(status, "verify_bessel", cfg, body, Some(csv)))
}

fn verify_dims(cfg: &RunConfig, defaults: &[i64]) -> qcurve_core::Result<Vec<Dimension>> {
    if cfg.n_explicit {
        Ok(vec![cfg.dim()])
    } else {
        defaults.iter().map(|&n| Dimension::new(n)).collect()
    }
}

fn verify_covariance(cfg: &RunConfig) -> qcurve_core::Result<Outcome> {
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for dim in verify_dims(cfg, &[4, 5])? {
        let rep = covariance_check(dim, cfg.pairs, cfg.seed, COVARIANCE_POINTS.0, COVARIANCE_POINTS.1)?;
        for (k, p) in rep.pairs.iter().enumerate() {
            rows.push(vec![
                dim.n().to_string(),
                k.to_string(),
                format_cell(p.coarse),
                format_cell(p.fine),
                format_cell(p.ratio),
            ]);
        }
        reports.push(rep);
    }
    let min_ratio = reports.iter().map(|r| r.min_ratio()).fold(f64::INFINITY, f64::min);
    let passed = min_ratio >= COVARIANCE_MIN_RATIO;
    let csv = table_csv(&["n", "pair", "coarse", "fine", "ratio"], rows)?;
    let status = if passed { Status::Success } else { Status::Failed };
    let body = json!({
        "covariance": to_value(&reports),
        "min_ratio": min_ratio,
        "required_ratio": COVARIANCE_MIN_RATIO,
        "passed": passed,
    });
    Ok(envelope(status, "verify_covariance", cfg, body, Some(csv)))
}

fn verify_asymptotics(cfg: &RunConfig) -> qcurve_core::Result<Outcome> {
    let grid = grid_of(cfg)?;
    let entries = asymptotics_check(&verify_dims(cfg, &[4, 5, 6])?, cfg.amplitude, grid)?;
    let passed = entries.iter().all(|e| (e.coefficient / e.linearized_value - 1.0).abs() < ASYMPTOTICS_REL_TOL);
    let rows = entries.iter().map(|e| {
        vec![
            e.n.to_string(),
            format_cell(e.coefficient),
            format_cell(e.linearized_value),
            format_cell(e.stated_value),
            format_cell(e.ratio_to_stated),
        ]
    });
    let csv = table_csv(&["n", "coefficient", "linearized", "stated", "ratio_to_stated"], rows)?;
    let status = if passed { Status::Success } else { Status::Failed };
    let body = json!({
        "asymptotics": to_value(&entries),
        "relative_tolerance": ASYMPTOTICS_REL_TOL,
        "passed": passed,
    });
    Ok(envelope(status, "verify_asymptotics", cfg, body, Some(csv)))
}
