use std::f64::consts::{FRAC_PI_2, PI};

use fillhull_core::comass::{
    calibration_sweep, comass_ir, concavity_certificate, maximize_eta, maximize_free_path, project_capped, psi,
    psi_gradient, psi_hessian_quadform, OptimizerConfig, PsiEval,
};
use fillhull_core::pathspace::{gamma_from_eta, omega_action};
use fillhull_core::{random_hull_point, AngleField, Grid, HullFn, SpherePoint};
use proptest::prelude::*;

fn grid(n: usize) -> Grid {
    Grid::new(n).unwrap()
}

fn sp(tau: f64, d: f64) -> SpherePoint<f64> {
    SpherePoint::new(tau, d).unwrap()
}

#[test]
fn psi_examples() {
    let g = grid(1024);
    let p = sp(0.7, 0.5);
    let h = HullFn::sphere_point(&p, g);
    assert!((psi(&p, &h, &AngleField::zeros(g)).unwrap() - PI).abs() < 1e-3);
    let north = sp(0.0, FRAC_PI_2);
    assert!((psi(&north, &HullFn::north(g), &AngleField::zeros(g)).unwrap() - PI).abs() < 1e-3);
    // Gauge: a constant added to η and removed again changes nothing.
    let eta = AngleField::random(3, 0.1, 4, g);
    let a = psi(&p, &h, &eta).unwrap();
    let b = psi(&p, &h, &eta.plus_constant(0.3).recentered()).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn psi_is_the_path_action() {
    let g = grid(256);
    let p = sp(2.0, 0.8);
    for seed in 0..5 {
        let f = random_hull_point(seed, 0.3, 0.3, g).unwrap();
        let eta = AngleField::random(seed + 10, 0.15, 5, g);
        let a = psi(&p, &f, &eta).unwrap();
        let b = omega_action(&f, &gamma_from_eta(&p, &eta).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn gradient_examples() {
    let g = grid(512);
    let p = sp(0.3, 0.9);
    let h = HullFn::sphere_point(&p, g);
    let grad = psi_gradient(&p, &h, &AngleField::zeros(g)).unwrap();
    assert!(grad.l2_norm() < 1e-4, "{}", grad.l2_norm());
    let f = random_hull_point(2, 0.3, 0.3, g).unwrap();
    let eta = AngleField::random(5, 0.1, 4, g);
    let a = psi_gradient(&p, &f, &eta).unwrap();
    let b = psi_gradient(&p, &f, &eta.plus_constant(0.2)).unwrap();
    assert!(a.axpy(-1.0, &b).sup_norm() < 1e-12);
}

#[test]
fn hessian_examples() {
    let g = grid(256);
    let p = sp(0.3, 0.9);
    let h = HullFn::sphere_point(&p, g);
    let zero = AngleField::zeros(g);
    assert_eq!(psi_hessian_quadform(&p, &h, &zero, &zero).unwrap(), 0.0);
    for seed in 0..5 {
        let v = AngleField::random(seed, 1.0, 6, g);
        let q = psi_hessian_quadform(&p, &h, &zero, &v).unwrap();
        assert!(q < 0.0 && -q / v.dot(&v) > 0.0);
        let t = 1e-3;
        let fd = (psi(&p, &h, &v.scaled(t)).unwrap() - 2.0 * psi(&p, &h, &zero).unwrap() + psi(&p, &h, &v.scaled(-t)).unwrap())
            / (t * t);
        assert!((q - fd).abs() <= 1e-4 * fd.abs(), "{q} vs {fd}");
    }
}

#[test]
fn maximizer_at_hemisphere_point() {
    let g = grid(512);
    let p = sp(1.3, 0.6);
    let m = maximize_eta(&p, &HullFn::sphere_point(&p, g), &OptimizerConfig::default()).unwrap();
    assert!(m.eta.sup_norm() <= 1e-4);
    assert!((m.value - PI).abs() <= 1e-3);
    assert!(m.diagnostics.converged);
}

#[test]
fn shrunk_hemisphere_point() {
    let g = grid(256);
    let p = sp(0.0, 0.6);
    let h = HullFn::sphere_point(&p, g);
    let mut last = f64::INFINITY;
    for lambda in [0.9, 0.95, 0.99] {
        let r = comass_ir(&h.shrink_toward_center(lambda), &OptimizerConfig::default()).unwrap();
        assert!(r.value >= PI - 0.2 && r.value <= PI + 1e-3, "{}", r.value);
        let e = r.maximizer.eta.sup_norm();
        assert!(e <= last * 1.2 + 1e-9, "{e} after {last}");
        last = e;
    }
}

#[test]
fn ascent_history_is_monotone() {
    let g = grid(256);
    let p = sp(0.5, 0.7);
    let f = HullFn::sphere_point(&p, g).lerp(&random_hull_point(1, 0.4, 0.3, g).unwrap(), 0.3).unwrap();
    let m = maximize_eta(&p, &f, &OptimizerConfig::default()).unwrap();
    assert!(m.diagnostics.history.len() > 1);
    for w in m.diagnostics.history.windows(2) {
        assert!(w[1] >= w[0]);
    }
}

#[test]
fn free_path_agrees_with_phase_ascent() {
    let g = grid(128);
    let p = sp(0.5, 0.7);
    let f = HullFn::sphere_point(&p, g).lerp(&random_hull_point(6, 0.4, 0.3, g).unwrap(), 0.2).unwrap();
    let r = comass_ir(&f, &OptimizerConfig::default()).unwrap();
    let ev = PsiEval::new(&r.hemisphere, &f).unwrap();
    let free = maximize_free_path(&f, &ev.gamma(&AngleField::zeros(g)), 2000, 1e-10).unwrap();
    assert!((free.value - r.value).abs() <= 5e-4, "{} vs {}", free.value, r.value);
    assert!(free.min_modulus >= 1.0 - 1e-4);
}

#[test]
fn comass_examples() {
    let g = grid(512);
    let cfg = OptimizerConfig::default();
    assert!((comass_ir(&HullFn::<f64>::north(g), &cfg).unwrap().value - PI).abs() < 2e-3);
    let r = comass_ir::<f64>(&HullFn::sphere_point(&sp(4.0, 0.35), g), &cfg).unwrap();
    assert!((r.value - PI).abs() < 2e-3);
    assert!(r.dist < 1e-6);
    let p = sp(1.0, 0.8);
    let h = HullFn::sphere_point(&p, g);
    let g0 = random_hull_point(9, 0.4, 0.3, g).unwrap();
    let t = 0.05 / h.sup_dist(&g0).unwrap();
    let f = h.lerp(&g0, t).unwrap();
    assert!((comass_ir(&f, &cfg).unwrap().value - PI).abs() <= 0.05);
    assert!(comass_ir(&HullFn::boundary_point(0.0, g), &cfg).is_err());
    let bad = OptimizerConfig { backtrack: 1.5, ..cfg };
    assert!(comass_ir(&h, &bad).is_err());
}

#[test]
fn sweep_examples() {
    let g = grid(256);
    let h = sp(0.5, 0.7);
    let gf = random_hull_point(3, 0.3, 0.3, g).unwrap();
    let cfg = OptimizerConfig::default();
    let r = calibration_sweep(&h, &gf, &[0.0, 0.05, 0.1, 0.2], &cfg).unwrap();
    assert!(r.rows[0].defect <= 2e-3);
    let slope = r.slope.unwrap();
    assert!(slope >= 1.5, "{slope}");
    // Halving t scales the defect by about 2^-slope.
    let ratio = r.rows[2].defect / r.rows[3].defect;
    let dist_ratio = r.rows[2].dist / r.rows[3].dist;
    assert!((ratio / dist_ratio.powf(slope) - 1.0).abs() < 0.2, "{ratio} vs {}", dist_ratio.powf(slope));
    // η shrinks with t.
    assert!(r.rows[1].eta_inf <= r.rows[2].eta_inf * 1.2 && r.rows[2].eta_inf <= r.rows[3].eta_inf * 1.2);
    let single = calibration_sweep(&h, &gf, &[0.1], &cfg).unwrap();
    assert!(single.slope.is_none() && single.rows.len() == 1);
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("t,dist,defect,eta_inf,iters,converged\n"));
    assert_eq!(r.summary_json()["fit_points"], serde_json::json!(r.fit_points));
}

#[test]
fn concavity_certificates() {
    let g = grid(256);
    let p = sp(0.2, 0.8);
    let h = HullFn::sphere_point(&p, g);
    let small = concavity_certificate(&p, &h, 0.01, 6, 1).unwrap();
    let large = concavity_certificate(&p, &h, 0.1, 6, 1).unwrap();
    assert!(small > 0.0 && large > 0.0);
    assert!(large <= small * 1.05, "{large} vs {small}");
    assert_eq!(concavity_certificate(&p, &h, 0.1, 0, 1).unwrap(), f64::INFINITY);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_capped_and_centered(xs in proptest::collection::vec(-1.0f64..1.0, 16..64), cap in 0.05f64..0.5) {
        let y = project_capped(&xs, cap);
        let mean: f64 = y.iter().sum::<f64>() / y.len() as f64;
        prop_assert!(mean.abs() < 1e-9);
        prop_assert!(y.iter().all(|v| v.abs() <= cap + 1e-9));
        let again = project_capped(&y, cap);
        for (a, b) in y.iter().zip(&again) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
