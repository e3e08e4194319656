use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use fillhull_core::volumes::{
    cap_chart, cone_chart, coordinate_filling_area, finsler_mass, jacobian, john_ellipse, mass_table, omega_surface_integral,
    perturbed_cap_chart, write_mass_csv, CapBump, Definition, Norm2D, DEFAULT_DIRECTIONS,
};
use fillhull_core::{Grid, HullFn};
use proptest::prelude::*;

const M: usize = DEFAULT_DIRECTIONS;

fn grid(n: usize) -> Grid {
    Grid::new(n).unwrap()
}

/// Largest area over ellipses `R_φ(a cos t, κa sin t)` whose 720 boundary
/// samples satisfy `N ≤ 1`: a global scan, then two finer scans near the best.
fn john_area_by_scan(n: &Norm2D<f64>) -> f64 {
    let area = |phi: f64, kappa: f64| {
        let (s, c) = phi.sin_cos();
        let worst = (0..720)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 720.0;
                let (x, y) = (t.cos(), kappa * t.sin());
                n.eval([c * x - s * y, s * x + c * y]).unwrap()
            })
            .fold(0.0, f64::max);
        PI * kappa / (worst * worst)
    };
    let mut best = (0.0, 0.0, 1.0);
    for i in 0..90 {
        for k in 1..=50 {
            let (phi, kappa) = (PI * i as f64 / 90.0, k as f64 / 50.0);
            let v = area(phi, kappa);
            if v > best.0 {
                best = (v, phi, kappa);
            }
        }
    }
    for (dphi, dk) in [(PI / 1440.0, 1e-3), (PI / 28800.0, 5e-5)] {
        let (_, p0, k0) = best;
        for i in -20..=20 {
            for k in -20..=20 {
                let (phi, kappa) = (p0 + i as f64 * dphi, (k0 + k as f64 * dk).min(1.0));
                let v = area(phi, kappa);
                if v > best.0 {
                    best = (v, phi, kappa);
                }
            }
        }
    }
    best.0
}

#[test]
fn john_ellipse_examples() {
    for n in [Norm2D::<f64>::euclidean(M), Norm2D::<f64>::sup(M)] {
        let e = john_ellipse(&n).unwrap();
        assert!((e.a - 1.0).abs() < 1e-3 && (e.b - 1.0).abs() < 1e-3 && (e.area - PI).abs() < 1e-3);
    }
    let e = john_ellipse(&Norm2D::<f64>::l1(M)).unwrap();
    assert!((e.a - FRAC_1_SQRT_2).abs() < 1e-3 && (e.b - FRAC_1_SQRT_2).abs() < 1e-3);
    assert!((e.area - PI / 2.0).abs() < 1e-3);
}

#[test]
fn john_ellipse_matches_scan() {
    let mut norms = vec![Norm2D::<f64>::l1(M), Norm2D::<f64>::lp(M, 3.0).unwrap()];
    norms.extend((0..4).map(|s| Norm2D::<f64>::random(s, M)));
    for n in &norms {
        let e = john_ellipse(n).unwrap();
        let scan = john_area_by_scan(n);
        assert!((e.area - scan).abs() < 1e-3, "{}: {} vs {scan}", n.provenance(), e.area);
        for i in 0..720 {
            let z = e.point(2.0 * PI * i as f64 / 720.0);
            assert!(n.eval(z).unwrap() <= 1.0 + 1e-8);
        }
    }
}

#[test]
fn euclidean_normalization_and_scaling() {
    for (s, ax) in [(1.0, 1.0), (2.0, 1.0), (0.5, 1.0), (1.0, 1.7)] {
        // s·|x| for ax = 1, otherwise a linear image of the round norm.
        let n = Norm2D::<f64>::from_fn(M, "ellipse", |x: f64, y: f64| s * (x * ax).hypot(y / ax)).unwrap();
        for d in Definition::ALL {
            let j = jacobian(&n, d).unwrap();
            let want = s * s;
            // Directions crowd on the stretched ellipse, so its polygon is coarser.
            let tol = if ax == 1.0 { 1e-4 } else { 5e-4 };
            assert!((j - want).abs() < tol * want, "{d:?} s {s} ax {ax}: {j}");
        }
    }
}

#[test]
fn scaling_multiplies_jacobians() {
    let n = Norm2D::<f64>::random(7, M);
    for d in Definition::ALL {
        let j = jacobian(&n, d).unwrap();
        let j3 = jacobian(&n.scaled(3.0).unwrap(), d).unwrap();
        assert!((j3 - 9.0 * j).abs() < 1e-6 * j3, "{d:?}");
    }
}

#[test]
fn l1_table() {
    let n = Norm2D::<f64>::l1(M);
    let want = [1.0, 2.0, PI / 2.0, 4.0 / PI, 2.0];
    for (d, w) in Definition::ALL.iter().zip(want) {
        assert!((jacobian(&n, *d).unwrap() - w).abs() < 1e-3, "{d:?}");
    }
    // Diagnostic only.
    let product = jacobian(&n, Definition::HolmesThompson).unwrap() * jacobian(&Norm2D::<f64>::sup(M), Definition::HolmesThompson).unwrap();
    eprintln!("HT(l1) * HT(sup) = {product:.6}");
}

#[test]
fn mass_star_within_factor_two() {
    for seed in 0..50 {
        let n = Norm2D::<f64>::random(seed, M);
        let m = jacobian(&n, Definition::Mass).unwrap();
        let ms = jacobian(&n, Definition::MassStar).unwrap();
        assert!(m <= ms * (1.0 + 1e-12) && ms <= 2.0 * m * (1.0 + 1e-12), "seed {seed}: {m} {ms}");
    }
}

#[test]
fn sampled_norms_are_convex() {
    for seed in 0..20 {
        assert!(Norm2D::<f64>::random(seed, M).triangle_defect(500, seed) <= 1e-6);
    }
}

#[test]
fn csv_exports() {
    let mut buf = Vec::new();
    Norm2D::<f64>::euclidean(8).write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("theta,N\n") && text.lines().count() == 9);
    let chart = cone_chart::<f64>(grid(16), 9, 16, (0.0, 1.0)).unwrap();
    let mut buf = Vec::new();
    write_mass_csv(&mass_table(&chart).unwrap(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("chart,definition,value,grid_n,param_n\ncone,mass,"));
}

#[test]
fn cone_chart_values() {
    let g = grid(64);
    let c = cone_chart::<f64>(g, 3, 8, (0.0, 1.0)).unwrap();
    assert_eq!(c.node(0, 3), &HullFn::constant(g, FRAC_PI_2));
    assert!(c.node(2, 0).sup_dist(&HullFn::boundary_point(0.0, g)).unwrap() < 1e-12);
    let half = c.node(1, 0);
    for m in 0..g.lattice_len() {
        let x = g.lattice::<f64>(m);
        assert!((half.at(m) - (PI / 4.0 + 0.5 * x.cos().acos())).abs() < 1e-12);
    }
}

// Reported, not asserted: the bilinear chart interpolation smooths the
// kink of d(·, α) at first order in the α-cell.
#[test]
fn cone_refinement_report() {
    let g = grid(64);
    let coarse = finsler_mass(&cone_chart::<f64>(g, 32, 64, (0.0, 1.0)).unwrap(), Definition::Mass).unwrap();
    let fine = finsler_mass(&cone_chart::<f64>(g, 64, 128, (0.0, 1.0)).unwrap(), Definition::Mass).unwrap();
    eprintln!("cone mass {coarse:.6} -> {fine:.6} (relative change {:.3e})", (fine - coarse) / fine);
    assert!(fine > coarse);
}

#[test]
fn perturbed_cap_contract() {
    let g = grid(64);
    let r = 0.3;
    let cap = cap_chart::<f64>(g, r, 32, 12).unwrap();
    for seed in 0..3 {
        let pc = perturbed_cap_chart(g, r, 32, 12, &CapBump::random(seed)).unwrap();
        for i0 in 0..32 {
            assert_eq!(pc.node(i0, 0), cap.node(i0, 0));
            for i1 in 0..12 {
                assert!(pc.node(i0, i1).is_member(1e-9) && pc.node(i0, i1).dist_to_boundary() >= 0.25);
            }
        }
    }
    let bad = CapBump { seed: 0, amplitude: 0.9, kappa: 0.5, tau0: 0.0, roughness: 0.3 };
    assert!(perturbed_cap_chart(g, r, 32, 12, &bad).is_err());
}

// The ω integral of a chart stays below π times its inner-Riemannian mass.
#[test]
fn omega_below_comass_times_mass() {
    let g = grid(64);
    let pc = perturbed_cap_chart(g, 0.3, 48, 16, &CapBump::random(11)).unwrap();
    let w = omega_surface_integral(&pc).unwrap();
    let m = finsler_mass(&pc, Definition::InnerRiemannian).unwrap();
    assert!(w > 0.0 && w <= PI * m * 1.05, "{w} vs {}", PI * m);
}

#[test]
fn filling_area_examples() {
    assert!((coordinate_filling_area(0.7, FRAC_PI_2) - PI * PI / 2.0).abs() < 1e-6);
    assert!(coordinate_filling_area(0.7, 0.0f64).abs() < 1e-12);
    assert!(coordinate_filling_area(0.7, PI).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn jacobians_are_monotone(s1 in 0u64..10_000, s2 in 0u64..10_000, w in 0.05f64..1.0) {
        let small = Norm2D::<f64>::random(s1, M);
        let extra = Norm2D::<f64>::random(s2, M);
        let big = Norm2D::<f64>::from_unit_norms(
            small.unit_norms().iter().zip(extra.unit_norms()).map(|(a, b)| a + w * b).collect(),
            "sum",
        ).unwrap();
        for d in Definition::ALL {
            prop_assert!(jacobian(&big, d).unwrap() >= jacobian(&small, d).unwrap() * (1.0 - 1e-9), "{:?}", d);
        }
    }

    #[test]
    fn filling_area_symmetric(alpha in 0.0f64..6.3, off in 0.0f64..PI) {
        let a = coordinate_filling_area(alpha, off);
        let b = coordinate_filling_area(alpha, PI - off);
        prop_assert!((a - b).abs() < 1e-9);
    }
}
