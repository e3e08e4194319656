use std::f64::consts::{FRAC_PI_2, PI};

use fillhull_core::hull::MEMBER_TOL;
use fillhull_core::{random_hull_point, Grid, HullFn, SpherePoint};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn grid(n: usize) -> Grid {
    Grid::new(n).unwrap()
}

fn spherical(a: &SpherePoint<f64>, b: &SpherePoint<f64>) -> f64 {
    // d is the boundary distance, so the latitude is d.
    (a.d.sin() * b.d.sin() + a.d.cos() * b.d.cos() * (a.tau - b.tau).cos()).clamp(-1.0, 1.0).acos()
}

#[test]
fn isometry_with_round_sphere() {
    let g = grid(512);
    let step = g.step::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let p = SpherePoint::new(rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..FRAC_PI_2)).unwrap();
        let q = SpherePoint::new(rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..FRAC_PI_2)).unwrap();
        let got = HullFn::sphere_point(&p, g).sup_dist(&HullFn::sphere_point(&q, g)).unwrap();
        assert!((got - spherical(&p, &q)).abs() <= 2.0 * step, "{got} vs {}", spherical(&p, &q));
    }
}

#[test]
fn boundary_distance_of_sphere_points() {
    let g = grid(256);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let p = SpherePoint::new(rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..FRAC_PI_2)).unwrap();
        let f = HullFn::sphere_point(&p, g);
        assert!(f.is_member(MEMBER_TOL));
        assert!((f.dist_to_boundary() - p.d).abs() <= g.step::<f64>());
    }
}

#[test]
fn hemisphere_distance_against_dense_scan() {
    let g = grid(128);
    let f = HullFn::north(g).lerp(&HullFn::boundary_point(0.0, g), 0.3).unwrap();
    let (dist, _) = f.dist_to_hemisphere();
    let obj = |tau: f64, d: f64| f.sup_dist(&HullFn::sphere_point(&SpherePoint { tau, d: d.clamp(0.0, FRAC_PI_2) }, g)).unwrap();
    // Global scan at 10⁻², then 10⁻³ around the five best cells.
    let mut coarse: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..629 {
        for k in 0..=158 {
            let (tau, d) = (i as f64 * 1e-2, k as f64 * 1e-2);
            coarse.push((obj(tau, d), tau, d));
        }
    }
    coarse.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let best = coarse[..5]
        .par_iter()
        .map(|&(_, t0, d0)| {
            let mut b = f64::INFINITY;
            for i in -20..=20 {
                for k in -20..=20 {
                    b = b.min(obj(t0 + i as f64 * 1e-3, d0 + k as f64 * 1e-3));
                }
            }
            b
        })
        .reduce(|| f64::INFINITY, f64::min);
    assert!(dist > 0.0);
    assert!((dist - best).abs() < 1e-3, "{dist} vs {best}");
}

#[test]
fn truncation_examples() {
    let g = grid(128);
    assert_eq!(HullFn::<f64>::north(g).truncate(0.3).lattice_values(), HullFn::<f64>::north(g).lattice_values());
    let b = HullFn::boundary_point(0.0, g).truncate(0.2);
    assert!(b.is_member(MEMBER_TOL));
    assert!((b.dist_to_boundary() - 0.2).abs() < 1e-12);
    let f = HullFn::sphere_point(&SpherePoint::new(0.4, 0.3).unwrap(), g);
    assert_eq!(f.truncate(0.2).lattice_values(), f.lattice_values());
}

#[test]
fn shrink_examples() {
    let g = grid(128);
    let n = HullFn::<f64>::north(g);
    assert_eq!(n.shrink_toward_center(0.3).lattice_values(), n.lattice_values());
    let b = HullFn::boundary_point(0.0, g);
    let s = b.shrink_toward_center(0.5);
    for m in 0..g.lattice_len() {
        let a = g.lattice::<f64>(m);
        assert!((s.at(m) - (0.25 * PI + 0.5 * a)).abs() < 1e-12);
    }
    let f = random_hull_point(5, 0.4, 0.2, g).unwrap();
    for lambda in [0.2, 0.6, 0.9] {
        let d = f.shrink_toward_center(lambda).sup_dist(&f).unwrap();
        assert!((d - (1.0 - lambda) * f.sup_dist(&n).unwrap()).abs() < 1e-12);
        assert!(d <= (1.0 - lambda) * FRAC_PI_2 + 1e-12);
    }
}

#[test]
fn random_point_contract() {
    let g = grid(256);
    let p = random_hull_point(42, 0.5, 0.3, g).unwrap();
    assert_eq!(p.lattice_values(), random_hull_point(42, 0.5, 0.3, g).unwrap().lattice_values());
    assert!(p.is_member(MEMBER_TOL) && p.dist_to_boundary() >= 0.3 - 1e-9);
    // Zero roughness leaves a truncated sphere point.
    let smooth = random_hull_point(42, 0.0, 0.3, g).unwrap();
    let (dist, h) = smooth.dist_to_hemisphere();
    let want = HullFn::sphere_point(&h, g).truncate(0.3);
    assert!(smooth.sup_dist(&want).unwrap() < 1e-5, "{dist}");
}

#[test]
fn json_without_midpoints_loads() {
    let g = grid(64);
    let f = HullFn::sphere_point(&SpherePoint::new(0.5, 0.7).unwrap(), g);
    let doc = serde_json::json!({ "n": 64, "values": f.values() }).to_string();
    let back = HullFn::<f64>::from_json(&doc).unwrap();
    assert!(back.sup_dist(&f).unwrap() < 2e-3);
    assert!(HullFn::<f64>::from_json("{\"n\": 64}").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sphere_points_are_members(tau in 0.0f64..(2.0 * PI), d in 0.0f64..FRAC_PI_2) {
        let f = HullFn::sphere_point(&SpherePoint::new(tau, d).unwrap(), grid(128));
        prop_assert!(f.is_member(MEMBER_TOL));
    }

    #[test]
    fn truncate_is_one_lipschitz(s1 in 0u64..1000, s2 in 0u64..1000, eps in 0.05f64..1.2) {
        let g = grid(64);
        let f = random_hull_point(s1, 0.5, 0.01, g).unwrap();
        let h = random_hull_point(s2, 0.5, 0.01, g).unwrap();
        let before = f.sup_dist(&h).unwrap();
        let after = f.truncate(eps).sup_dist(&h.truncate(eps)).unwrap();
        prop_assert!(after <= before + 1e-12);
        prop_assert!(f.truncate(eps).is_member(MEMBER_TOL));
    }

    #[test]
    fn shrink_lowers_lipschitz_constant(seed in 0u64..1000, lambda in 0.05f64..0.95) {
        let f = random_hull_point(seed, 0.5, 0.1, grid(64)).unwrap();
        prop_assert!(f.shrink_toward_center(lambda).lipschitz_constant() <= lambda + 1e-9);
    }
}
