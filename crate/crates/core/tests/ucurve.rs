use std::sync::Arc;

use qcurve_core::edge::FactoredOperator;
use qcurve_core::geometry::{Dimension, RadialCalculus};
use qcurve_core::grid::{RadialFunction, RadialGrid};
use qcurve_core::qcurv::{interior_window, IterationConfig};
use qcurve_core::ucurve::{
    sigma2_identity_check, u_curvature_hyperbolic, u_curvature_of_conformal, u_linearized_apply, u_nonlinear_map,
    DetParams, Preset, USolver,
};
use qcurve_core::Error;

fn grid(points: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(12.0, points).unwrap())
}

fn presets() -> [(Preset, f64, f64); 3] {
    [
        (Preset::ConformalLaplacian, 0.5, -12.0),
        (Preset::SpinLaplacian, 11.0 / 7.0, -264.0),
        (Preset::Paneitz, -7.0 / 16.0, -42.0),
    ]
}

fn calc(points: usize) -> RadialCalculus {
    RadialCalculus::new(grid(points), Dimension::new(4).unwrap()).unwrap()
}

#[test]
fn preset_parsing() {
    assert_eq!(Preset::parse("A"), Some(Preset::ConformalLaplacian));
    assert_eq!(Preset::parse("d2"), Some(Preset::SpinLaplacian));
    assert_eq!(Preset::parse("paneitz"), Some(Preset::Paneitz));
    assert_eq!(Preset::parse("X"), None);
    assert!(DetParams::preset(Preset::Custom).is_err());
}

#[test]
fn preset_alpha_and_hyperbolic_value() {
    for (preset, alpha, u0) in presets() {
        let p = DetParams::preset(preset).unwrap();
        assert!((p.alpha() - alpha).abs() < 1e-15, "{preset:?}");
        assert!((u_curvature_hyperbolic(&p) - u0).abs() < 1e-12, "{preset:?}");
        assert_eq!(u_curvature_hyperbolic(&p), 3.0 * p.gamma2);
    }
}

#[test]
fn coefficient_validation() {
    assert!(matches!(DetParams::new(1.0, 2.0, 0.0), Err(Error::Precondition(_))));
    assert!(matches!(DetParams::new(f64::NAN, 2.0, 1.0), Err(Error::Precondition(_))));
    let degenerate = DetParams::new(0.0, -12.0, 1.0).unwrap();
    assert!(matches!(degenerate.check_solvable(), Err(Error::DegenerateAlpha)));
    assert!(matches!(USolver::new(degenerate, grid(256)), Err(Error::DegenerateAlpha)));
}

#[test]
fn sigma2_identity() {
    let (a, b) = sigma2_identity_check(&DetParams::new(0.0, -12.0, 1.0).unwrap()).unwrap();
    assert!((a + 3.0).abs() < 1e-10 && (b + 3.0).abs() < 1e-10, "({a}, {b})");
    let p = DetParams::preset(Preset::ConformalLaplacian).unwrap();
    assert!(matches!(sigma2_identity_check(&p), Err(Error::Precondition(_))));
    assert!(matches!(sigma2_identity_check(&DetParams::new(1.0, -12.0, 1.0).unwrap()), Err(Error::Precondition(_))));
}

#[test]
fn zero_is_a_solution_with_the_hyperbolic_target() {
    let c = calc(512);
    for (preset, _, u0) in presets() {
        let p = DetParams::preset(preset).unwrap();
        let w = vec![0.0; 512];
        assert!(u_nonlinear_map(&c, &w, &p, u0).iter().all(|v| *v == 0.0));
        assert!(u_curvature_of_conformal(&c, &w, &p).iter().all(|v| (v - u0).abs() < 1e-12));
    }
}

#[test]
fn expanded_and_divergence_forms_agree() {
    // L w − 𝒯(w) = e^{4w}(Ũ(w) − Ũ)/(6γ₃): the expanded nonlinearity against
    // the divergence form of the transformed curvature.
    let c = calc(1024);
    let g = c.grid().clone();
    let w: Vec<f64> = g.r().iter().map(|r| 0.05 / r.cosh().powi(2)).collect();
    let (lo, hi) = interior_window(&g);
    for (preset, _, u0) in presets() {
        let p = DetParams::preset(preset).unwrap();
        let target = 1.1 * u0;
        let op = FactoredOperator::for_alpha(p.alpha(), g.clone()).unwrap();
        let lw = op.apply_l(&w);
        let t = u_nonlinear_map(&c, &w, &p, target);
        let ut = u_curvature_of_conformal(&c, &w, &p);
        let s = 6.0 * p.gamma3;
        for i in g.window(lo, hi) {
            let lhs = lw[i] - t[i];
            let rhs = (4.0 * w[i]).exp() * (ut[i] - target) / s;
            assert!((lhs - rhs).abs() < 1e-6 * (1.0 + rhs.abs()), "{preset:?} at r = {}: {lhs} vs {rhs}", g.r()[i]);
        }
    }
}

#[test]
fn linearization_matches_frechet_derivative() {
    let c = calc(1024);
    let g = c.grid().clone();
    let phi = RadialFunction::from_fn(g.clone(), |r| 1.0 / r.cosh().powi(2)).unwrap();
    let (lo, hi) = interior_window(&g);
    let eps = 1e-5;
    for (preset, _, u0) in presets() {
        let p = DetParams::preset(preset).unwrap();
        let s = 6.0 * p.gamma3;
        // Euler–Lagrange map E(w) = e^{4w}(Ũ(w) − U(g))/(6γ₃).
        let e = |sign: f64| -> Vec<f64> {
            let w: Vec<f64> = phi.values().iter().map(|v| sign * eps * v).collect();
            let ut = u_curvature_of_conformal(&c, &w, &p);
            w.iter().zip(&ut).map(|(wv, uv)| (4.0 * wv).exp() * (uv - u0) / s).collect()
        };
        let (ep, em) = (e(1.0), e(-1.0));
        let l = u_linearized_apply(&phi, &p).unwrap();
        let scale = g.window(lo, hi).map(|i| l.values()[i].abs()).fold(0.0, f64::max);
        let err = g.window(lo, hi).map(|i| ((ep[i] - em[i]) / (2.0 * eps) - l.values()[i]).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4 * scale, "{preset:?}: {err} (scale {scale})");
    }
}

#[test]
fn presets_with_a_kernel_converge() {
    let cfg = IterationConfig::default();
    for preset in [Preset::ConformalLaplacian, Preset::SpinLaplacian] {
        let solver = USolver::new(DetParams::preset(preset).unwrap(), grid(2048)).unwrap();
        let (report, _) = solver.solve(1e-3, None, &cfg).unwrap();
        assert!(report.converged, "{preset:?}: {:?}", report.failure);
        assert!(report.curvature_deviation < 1e-6, "{preset:?}: {}", report.curvature_deviation);
        assert!((report.fitted_amplitude - 1e-3).abs() < 1e-9, "{preset:?}: {}", report.fitted_amplitude);
    }
}

#[test]
fn paneitz_preset_is_injective() {
    let solver = USolver::new(DetParams::preset(Preset::Paneitz).unwrap(), grid(2048)).unwrap();
    assert!(solver.inverse().kernel().is_none());
    assert!(matches!(solver.solve(1e-3, None, &IterationConfig::default()), Err(Error::NoKernel(_))));
    let (report, w) = solver.solve(0.0, None, &IterationConfig::default()).unwrap();
    assert!(report.converged);
    assert!(w.values().iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn spectrum_log_flag_for_integer_gap() {
    let solver = USolver::new(DetParams::preset(Preset::ConformalLaplacian).unwrap(), grid(512)).unwrap();
    assert!(solver.spectrum().log_terms_possible);
    let solver = USolver::new(DetParams::preset(Preset::SpinLaplacian).unwrap(), grid(512)).unwrap();
    assert!(!solver.spectrum().log_terms_possible);
}
