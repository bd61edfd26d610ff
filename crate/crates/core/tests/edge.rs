use std::sync::Arc;

use proptest::prelude::*;

use qcurve_core::edge::{shoot_regular, FactoredOperator, KernelAsymptotics};
use qcurve_core::expansion::{fit_envelope_frequency, weighted_norm};
use qcurve_core::geometry::Dimension;
use qcurve_core::grid::{sup_norm, RadialFunction, RadialGrid};
use qcurve_core::qcurv::interior_window;
use qcurve_core::Error;

fn grid(points: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(12.0, points).unwrap())
}

fn q_op(n: i64, points: usize) -> FactoredOperator {
    FactoredOperator::for_dimension(Dimension::new(n).unwrap(), grid(points)).unwrap()
}

fn interior_sup(g: &RadialGrid, v: &[f64]) -> f64 {
    let (lo, hi) = interior_window(g);
    g.window(lo, hi).map(|i| v[i].abs()).fold(0.0, f64::max)
}

#[test]
fn factor_constants() {
    let op = q_op(4, 512);
    assert_eq!(op.lead(), 1.0);
    assert_eq!(op.robin_constant(), -4.0);
    assert_eq!(op.kernel_constant(), 6.0);
    let op = q_op(5, 512);
    assert_eq!(op.kernel_constant(), 10.5);
    let u = FactoredOperator::for_alpha(0.5, grid(512)).unwrap();
    assert_eq!(u.lead(), 1.5);
    assert!((u.kernel_constant() - 2.0).abs() < 1e-15);
}

#[test]
fn operator_on_constants() {
    // L(1) = lead·c_K·c_R: −24 for n = 4, −24α for the U family. The composed
    // fourth-order stencil leaves a rounding floor of order ε/h⁴ ≈ 1e-8 here.
    const FLOOR: f64 = 1e-6;
    let op = q_op(4, 1024);
    let one = vec![1.0; 1024];
    let l1 = op.apply_l(&one);
    assert!(interior_sup(op.grid(), &l1.iter().map(|v| v + 24.0).collect::<Vec<_>>()) < FLOOR);
    for alpha in [0.5, 11.0 / 7.0, -7.0 / 16.0] {
        let u = FactoredOperator::for_alpha(alpha, grid(1024)).unwrap();
        let l1 = u.apply_l(&one);
        let dev: Vec<f64> = l1.iter().map(|v| v + 24.0 * alpha).collect();
        assert!(interior_sup(u.grid(), &dev) < FLOOR, "alpha={alpha}");
    }
}

#[test]
fn assembly_preconditions() {
    assert!(matches!(
        FactoredOperator::for_dimension(Dimension::new(4).unwrap(), grid(32)),
        Err(Error::GridTooCoarse { .. })
    ));
    assert_eq!(FactoredOperator::for_alpha(-1.0, grid(512)).unwrap_err(), Error::DegenerateAlpha);
}

#[test]
fn shooting_kernel_origin_taylor_expansion() {
    // (Δ + 6)k = 0 in dimension 4 with k(0) = 1: k = 1 − (6/8)r² + O(r⁴).
    let g = RadialGrid::new(12.0, 4096).unwrap();
    let (k, dk) = shoot_regular(&g, 4.0, 6.0);
    for i in 1..6 {
        let r = g.r()[i];
        assert!((k[i] - (1.0 - 0.75 * r * r)).abs() < 2.0 * r.powi(4), "r={r}");
        assert!((dk[i] + 1.5 * r).abs() < 4.0 * r.powi(3));
    }
}

#[test]
fn kernel_is_annihilated_with_refinement() {
    let residual = |points: usize| {
        let op = q_op(4, points);
        let k = op.kernel_element(1.0).unwrap();
        let lk = op.apply_l(k.base.values());
        interior_sup(op.grid(), &lk)
    };
    let (coarse, fine) = (residual(512), residual(1024));
    assert!(fine < 1e-4, "fine residual {fine}");
    assert!(coarse / fine > 8.0, "refinement ratio {}", coarse / fine);
}

#[test]
fn kernel_envelope_and_frequency() {
    for n in [4i64, 5] {
        let op = q_op(n, 4096);
        let proj = op.projection().unwrap();
        let k = proj.kernel();
        let nf = n as f64;
        let p = (nf - 1.0) / 2.0;
        let beta = (nf * nf + 2.0 * nf - 9.0).sqrt() / 2.0;
        match k.asymptotics {
            KernelAsymptotics::Oscillatory { zeta } => {
                assert!((zeta.re - p).abs() < 1e-12);
                assert!((zeta.im - beta).abs() < 1e-12);
            }
            other => panic!("n={n}: unexpected asymptotics {other:?}"),
        }
        let fit = fit_envelope_frequency(&k.base, proj.window()).unwrap();
        assert!((fit.exponent / p - 1.0).abs() < 0.005, "n={n}: exponent {}", fit.exponent);
        assert!((fit.frequency / beta - 1.0).abs() < 0.001, "n={n}: frequency {}", fit.frequency);
        let (a, b) = k.leading_fit;
        assert!(((a * a + b * b).sqrt() - 1.0).abs() < 1e-12);
        assert!(proj.rcond() > 1e-10);
    }
}

#[test]
fn weighted_membership_flips_at_the_critical_weight() {
    for n in [4i64, 5] {
        let op = q_op(n, 4096);
        let k = op.kernel_element(1.0).unwrap();
        let p = (n as f64 - 1.0) / 2.0;
        let below = weighted_norm(&k.base, 0.9 * p, 0).unwrap();
        let above = weighted_norm(&k.base, 1.1 * p, 0).unwrap();
        assert!(below.value.is_some(), "n={n}: {below:?}");
        assert!(above.value.is_none(), "n={n}: {above:?}");
        assert!(above.growth_rate > 0.0 && below.growth_rate < 0.0);
    }
}

#[test]
fn paneitz_preset_has_no_regular_kernel_and_an_x4_exterior_branch() {
    let op = FactoredOperator::for_alpha(-7.0 / 16.0, grid(4096)).unwrap();
    assert!(matches!(op.projection(), Err(Error::NoKernel(_))));
    assert!(matches!(op.kernel_element(1.0), Err(Error::NoKernel(_))));
    let ext = op.exterior_branch(1.0).unwrap();
    let fit = fit_envelope_frequency(&ext, (6.0, 11.5)).unwrap();
    assert!((fit.exponent / 4.0 - 1.0).abs() < 0.01, "exponent {}", fit.exponent);
    assert!(op.injective_inverse().is_ok());
    // Operators with a regular kernel refuse the injective inverse.
    assert!(q_op(4, 512).injective_inverse().is_err());
}

/// Smooth profiles decaying faster than the kernel (so that `P₁` sees only
/// the kernel part), plus a multiple of the kernel.
fn manufactured(g: &Arc<RadialGrid>, j: usize, kernel: &[f64]) -> Vec<f64> {
    let jf = j as f64;
    let c = 0.3 * (jf - 9.5) / 10.0;
    g.r()
        .iter()
        .zip(kernel)
        .map(|(&r, &k)| {
            let sech = 1.0 / r.cosh();
            let smooth = sech.powi(3 + (j % 4) as i32) * (1.0 + 0.2 * jf * (0.7 * r).cos())
                + 0.1 * (-(r - 1.0 - 0.15 * jf).powi(2)).exp();
            smooth + c * k
        })
        .collect()
}

#[test]
fn generalized_inverse_inverts_off_the_kernel() {
    for n in [4i64, 5] {
        let op = q_op(n, 4096);
        let proj = op.projection().unwrap();
        let k = proj.kernel().base.values().to_vec();
        for j in 0..20 {
            let u = manufactured(op.grid(), j, &k);
            let gl = op.generalized_inverse(&op.apply_l(&u), &proj).unwrap();
            let c = proj.amplitude(&u);
            let expect: Vec<f64> = u.iter().zip(&k).map(|(a, b)| a - c * b).collect();
            let err: Vec<f64> = gl.iter().zip(&expect).map(|(a, b)| a - b).collect();
            let rel = sup_norm(&err) / sup_norm(&u);
            assert!(rel < 1e-5, "n={n}, j={j}: relative error {rel}");
        }
    }
}

#[test]
fn projection_is_idempotent_and_annihilates_the_range_of_g() {
    let op = q_op(4, 4096);
    let proj = op.projection().unwrap();
    let k = proj.kernel().base.values().to_vec();
    assert!((proj.amplitude(&k) - 1.0).abs() < 1e-12);
    for j in [0, 7, 13] {
        let u = manufactured(op.grid(), j, &k);
        let c = proj.amplitude(&u);
        let p1u: Vec<f64> = k.iter().map(|v| c * v).collect();
        assert!((proj.amplitude(&p1u) - c).abs() < 1e-8 * c.abs().max(1.0));
        let f: Vec<f64> = op.grid().r().iter().map(|r| (1.0 + r).recip().powi(2) / r.cosh()).collect();
        let gf = op.generalized_inverse(&f, &proj).unwrap();
        assert!(proj.amplitude(&gf).abs() < 1e-10);
    }
}

#[test]
fn injective_inverse_solves_the_paneitz_preset() {
    let op = FactoredOperator::for_alpha(-7.0 / 16.0, grid(2048)).unwrap();
    let inv = op.injective_inverse().unwrap();
    let u: Vec<f64> = op.grid().r().iter().map(|r| (1.0 / r.cosh()).powi(5)).collect();
    let back = op.solve_injective(&op.apply_l(&u), &inv).unwrap();
    let err: Vec<f64> = back.iter().zip(&u).map(|(a, b)| a - b).collect();
    assert!(sup_norm(&err) < 1e-6, "{}", sup_norm(&err));
}

#[test]
fn t1_solve_inverts_the_robin_factor() {
    let op = q_op(5, 2048);
    let f = RadialFunction::from_fn(op.grid().clone(), |r| (-(r - 3.0).powi(2)).exp()).unwrap();
    let v = op.solve_t1(&f).unwrap();
    let back = op.apply_robin_factor(v.values());
    let g = op.grid();
    let (lo, hi) = interior_window(g);
    let err = g.window(lo, hi).map(|i| (back[i] - f.values()[i]).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn projection_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, j in 0usize..20, l in 0usize..20) {
        let op = q_op(4, 1024);
        let proj = op.projection().unwrap();
        let k = proj.kernel().base.values().to_vec();
        let u = manufactured(op.grid(), j, &k);
        let v = manufactured(op.grid(), l, &k);
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let lhs = proj.amplitude(&w);
        let rhs = a * proj.amplitude(&u) + b * proj.amplitude(&v);
        prop_assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn generalized_inverse_output_has_no_kernel_component(shift in 0.5f64..6.0, width in 0.3f64..2.0) {
        let op = q_op(5, 1024);
        let proj = op.projection().unwrap();
        let f: Vec<f64> = op.grid().r().iter().map(|r| (-((r - shift) / width).powi(2)).exp()).collect();
        let gf = op.generalized_inverse(&f, &proj).unwrap();
        prop_assert!(proj.amplitude(&gf).abs() < 1e-9);
    }
}
