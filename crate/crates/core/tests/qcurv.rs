use std::sync::Arc;

use proptest::prelude::*;

use qcurve_core::geometry::{hyperbolic_curvature_report, Dimension};
use qcurve_core::grid::{RadialFunction, RadialGrid};
use qcurve_core::qcurv::{
    check_nu, default_nu, equation_residual_profile, interior_window, nonlinear_derivative, nonlinear_map,
    sweep_family, IterationConfig, QSolver, TargetCurvature,
};
use qcurve_core::Error;

fn grid() -> Arc<RadialGrid> {
    Arc::new(RadialGrid::default_grid())
}

fn dim(n: i64) -> Dimension {
    Dimension::new(n).unwrap()
}

#[test]
fn hyperbolic_target_solves_converge() {
    let cfg = IterationConfig::default();
    for n in [4, 5] {
        let solver = QSolver::new(dim(n), grid()).unwrap();
        let f = TargetCurvature::hyperbolic(dim(n), grid()).unwrap();
        let (report, u) = solver.solve(1e-3, &f, &cfg).unwrap();
        assert!(report.converged, "n = {n}: {:?}", report.failure);
        assert!(report.iterations <= 15, "n = {n}: {} iterations", report.iterations);
        let worst = report.contraction_ratios.iter().cloned().fold(0.0, f64::max);
        assert!(worst <= 0.5, "n = {n}: ratio {worst}");
        assert!((report.fitted_amplitude - 1e-3).abs() < 1e-9, "n = {n}: {}", report.fitted_amplitude);
        assert!(report.curvature_deviation < 1e-6, "n = {n}: {}", report.curvature_deviation);
        assert!(report.fixed_point_residual < cfg.tol);
        assert!(report.failure.is_none());
        assert!(report.expansion.is_some());
        assert_eq!(u.values().len(), grid().len());
    }
}

#[test]
fn zero_amplitude_returns_background() {
    let solver = QSolver::new(dim(4), grid()).unwrap();
    let f = TargetCurvature::hyperbolic(dim(4), grid()).unwrap();
    let (report, u) = solver.solve(0.0, &f, &IterationConfig::default()).unwrap();
    assert!(report.converged);
    assert!(u.values().iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn large_amplitude_reports_failure() {
    let solver = QSolver::new(dim(5), grid()).unwrap();
    let f = TargetCurvature::hyperbolic(dim(5), grid()).unwrap();
    let (report, _) = solver.solve(10.0, &f, &IterationConfig::default()).unwrap();
    assert!(!report.converged);
    assert!(report.failure.is_some() || report.iterations == IterationConfig::default().max_iter);
    assert!(report.warnings.iter().any(|w| w.contains("exceeds")));
}

#[test]
fn invalid_configuration_is_rejected() {
    let solver = QSolver::new(dim(4), grid()).unwrap();
    let f = TargetCurvature::hyperbolic(dim(4), grid()).unwrap();
    let bad = IterationConfig { tol: 0.0, ..IterationConfig::default() };
    assert!(matches!(solver.solve(1e-3, &f, &bad), Err(Error::Precondition(_))));
    let bad = IterationConfig { max_iter: 0, ..IterationConfig::default() };
    assert!(matches!(solver.solve(1e-3, &f, &bad), Err(Error::Precondition(_))));
}

#[test]
fn sweep_gives_ordered_distinct_solutions() {
    let amplitudes = [-1e-3, -5e-4, 5e-4, 1e-3];
    let solver = QSolver::new(dim(4), grid()).unwrap();
    let f = TargetCurvature::hyperbolic(dim(4), grid()).unwrap();
    let (report, sols) = sweep_family(&solver, &amplitudes, &f, &IterationConfig::default()).unwrap();
    assert_eq!(report.entries.len(), 4);
    for (e, a) in report.entries.iter().zip(amplitudes) {
        assert_eq!(e.amplitude, a);
        let r = e.report.as_ref().unwrap();
        assert!(r.converged);
        assert!((r.fitted_amplitude - a).abs() < 1e-9);
    }
    assert!(sols.iter().all(Option::is_some));
    for i in 0..4 {
        for j in 0..4 {
            let d = report.pairwise_distances[i][j].unwrap();
            if i == j {
                assert_eq!(d, 0.0);
            } else {
                let gap = (amplitudes[i] - amplitudes[j]).abs() * report.kernel_sup;
                assert!(d >= 0.9 * gap, "({i}, {j}): {d} vs {gap}");
            }
        }
    }
}

#[test]
fn deviation_weight_window() {
    assert!(check_nu(dim(4), default_nu(dim(4))).is_ok());
    assert!(check_nu(dim(4), 0.75).is_err());
    assert!(check_nu(dim(4), 1.5).is_err());
    assert!(check_nu(dim(6), 2.0).is_ok());
    assert!(TargetCurvature::sech_bump(dim(4), grid(), 1e-3, 1.6).is_err());
}

#[test]
fn perturbed_target_solve() {
    let f = TargetCurvature::sech_bump(dim(4), grid(), 2e-3, 1.2).unwrap();
    assert!(f.warnings().is_empty());
    // sup e^{νr}·sech²r sits at tanh r = ν/2.
    let r_star = (1.2f64 / 2.0).atanh();
    let expected = 3.0 * 2e-3 * (1.2 * r_star).exp() / r_star.cosh().powi(2);
    assert!((f.deviation_norm() - expected).abs() < 1e-5 * expected, "{} vs {expected}", f.deviation_norm());
    assert!(!f.is_background());
    let solver = QSolver::new(dim(4), grid()).unwrap();
    let (report, _) = solver.solve(1e-3, &f, &IterationConfig::default()).unwrap();
    assert!(report.smallness.deviation <= report.smallness.deviation_bound);
    assert!(report.converged);
    assert!(report.curvature_deviation < 1e-6, "{}", report.curvature_deviation);
}

#[test]
fn slowly_decaying_deviation_is_flagged() {
    let dev = RadialFunction::from_fn(grid(), |r| 1e-3 * (-0.5 * r).exp()).unwrap();
    let f = TargetCurvature::from_deviation(3.0, &dev, 1.2).unwrap();
    assert!(f.deviation_norm().is_infinite());
    assert_eq!(f.warnings().len(), 1);
}

#[test]
fn equation_splits_into_linear_part_and_remainder() {
    // ℰ(u) = L u − 𝒯(u) pointwise, for any profile in the domain.
    for n in [4, 5, 7] {
        let solver = QSolver::new(dim(n), grid()).unwrap();
        let q = hyperbolic_curvature_report(dim(n)).q_hyp;
        let g = grid();
        let u: Vec<f64> = g.r().iter().map(|r| 0.05 / r.cosh().powi(2)).collect();
        let f: Vec<f64> = g.r().iter().map(|r| q * (1.0 + 0.01 / r.cosh())).collect();
        let lu = solver.operator().apply_l(&u);
        let t = nonlinear_map(dim(n), &f, q, &u, g.r()).unwrap();
        let e = equation_residual_profile(solver.operator().calculus(), &u, &f).unwrap();
        let (lo, hi) = interior_window(&g);
        for i in g.window(lo, hi) {
            let scale = lu[i].abs().max(1.0);
            assert!((e[i] - (lu[i] - t[i])).abs() < 1e-9 * scale, "n = {n}, i = {i}");
        }
    }
}

#[test]
fn domain_violation_is_reported() {
    let g = grid();
    let u = vec![-1.5; g.len()];
    let f = vec![13.125; g.len()];
    assert!(matches!(nonlinear_map(dim(5), &f, 13.125, &u, g.r()), Err(Error::Domain { index: 0, .. })));
}

proptest! {
    #[test]
    fn nonlinear_derivative_matches_difference_quotient(
        n in 4i64..9,
        u in -0.3f64..0.3,
        df in -0.1f64..0.1,
    ) {
        let d = dim(n);
        let q = hyperbolic_curvature_report(d).q_hyp;
        let f = q * (1.0 + df);
        let h = 1e-6;
        let r = [1.0];
        let tp = nonlinear_map(d, &[f], q, &[u + h], &r).unwrap()[0];
        let tm = nonlinear_map(d, &[f], q, &[u - h], &r).unwrap()[0];
        let fd = (tp - tm) / (2.0 * h);
        let exact = nonlinear_derivative(d, f, q, u);
        prop_assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "{} vs {}", fd, exact);
    }

    #[test]
    fn nonlinear_map_is_quadratic_at_background(n in 4i64..9, u in -1e-3f64..1e-3) {
        let d = dim(n);
        let q = hyperbolic_curvature_report(d).q_hyp;
        let t = nonlinear_map(d, &[q], q, &[u], &[1.0]).unwrap()[0];
        prop_assert!(t.abs() <= 200.0 * q * u * u + 1e-18);
    }
}
