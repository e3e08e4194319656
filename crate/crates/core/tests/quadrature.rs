use std::f64::consts::PI;

use fillhull_core::quadrature::{integrate_period, integrate_triangle};
use fillhull_core::Grid;
use proptest::prelude::*;

fn grid(n: usize) -> Grid {
    Grid::new(n).unwrap()
}

fn tri(n: usize, f: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
    let g = grid(n);
    integrate_triangle(&g, |j, k| f(g.alpha::<f64>(j), g.beta::<f64>(k)))
}

#[test]
fn triangle_examples() {
    assert_eq!(tri(64, |_, _| 0.0), 0.0);
    assert!((tri(256, |_, _| 1.0) - PI * PI / 2.0).abs() < 0.05);
    assert!((tri(1024, |a, b| (b - a).sin()) - PI).abs() < 1e-4);
}

#[test]
fn period_examples() {
    let n = 1024;
    let nodes: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    let ones = vec![1.0; n];
    assert!((integrate_period(&ones, 2.0 * PI).unwrap() - 2.0 * PI).abs() < 1e-12);
    let s2: Vec<f64> = nodes.iter().map(|x| x.sin().powi(2)).collect();
    assert!((integrate_period(&s2, 2.0 * PI).unwrap() - PI).abs() < 1e-8);
    let d = PI / 6.0;
    let sp: Vec<f64> = nodes.iter().map(|x| d.sin() / (1.0 - d.cos().powi(2) * x.cos().powi(2))).collect();
    assert!((integrate_period(&sp, 2.0 * PI).unwrap() - 2.0 * PI).abs() < 1e-6);
    assert!(integrate_period::<f64>(&[], 1.0).is_err());
}

// Integrands carry the symmetry F(α, β) = F(β, α + π) of the band rule.
// Errors should shrink at least linearly when n doubles.
#[test]
fn refinement_ratio() {
    // ∫₀^π √(sin x) dx
    let root_sine = 2.396_280_469_471_184_4;
    let cases: [(fn(f64, f64) -> f64, f64); 2] = [
        (|a, b| (b - a).sin(), PI),
        (|a, b| a.cos().abs() + b.cos().abs() + (b - a).sin().sqrt(), 2.0 * PI + 0.5 * PI * root_sine),
    ];
    for (f, exact) in cases {
        let e1 = (tri(64, f) - exact).abs();
        let e2 = (tri(128, f) - exact).abs();
        let e3 = (tri(256, f) - exact).abs();
        assert!(e2 <= 0.6 * e1 + 1e-13 && e3 <= 0.6 * e2 + 1e-13, "{e1:e} {e2:e} {e3:e}");
    }
}

#[test]
fn reduction_is_deterministic() {
    let f = |a: f64, b: f64| (3.0 * a).cos() * (b * 1.7).sin() + 1e-9 * a;
    let first = tri(512, f);
    for _ in 0..5 {
        assert_eq!(tri(512, f).to_bits(), first.to_bits());
    }
}

proptest! {
    #[test]
    fn triangle_is_linear(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
        let f = |a: f64, b: f64| (a - 2.0 * b).cos();
        let g = |a: f64, b: f64| a * b;
        let lhs = tri(64, |a, b| c1 * f(a, b) + c2 * g(a, b));
        let rhs = c1 * tri(64, f) + c2 * tri(64, g);
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn period_is_linear(c in -5.0f64..5.0, k in 1usize..6) {
        let g: Vec<f64> = (0..64).map(|i| (k as f64 * i as f64 * 0.1).sin()).collect();
        let lhs = integrate_period(&g.iter().map(|v| c * v).collect::<Vec<_>>(), 2.0).unwrap();
        prop_assert!((lhs - c * integrate_period(&g, 2.0).unwrap()).abs() < 1e-12);
    }
}
