//! Invariant suite behind `fillhull check`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::coeffs::{hemisphere_speed, l1_of, p_grid, p_scalar, CoeffGrid};
use crate::comass::{maximize_eta, psi, OptimizerConfig, PsiEval};
use crate::error::Result;
use crate::hull::{random_hull_point, HullFn, SpherePoint, MEMBER_TOL};
use crate::pathspace::{fuglede_check, gamma_from_eta, omega_action, omega_with, AngleField, PlanePath};
use crate::quadrature::Grid;
use crate::volumes::{coordinate_filling_area, jacobian, Definition, Norm2D};

/// Deliberate defects for testing that the suite notices them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Coefficients built with the wrong sign.
    CoeffSign,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn coeffs(f: &HullFn<f64>, fault: Option<Fault>) -> Result<CoeffGrid<f64>> {
    match fault {
        None => p_grid(f),
        Some(Fault::CoeffSign) => CoeffGrid::build_with(f, |a, x, y| p_scalar(a, x, y).map(|v| -v)),
    }
}

fn record(out: &mut Vec<CheckResult>, name: &'static str, r: Result<(bool, String)>) {
    let (passed, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
    out.push(CheckResult { name, passed, detail });
}

/// Runs every check; `fast` uses n = 128 instead of 512.
pub fn run_checks(fast: bool, fault: Option<Fault>) -> Vec<CheckResult> {
    let n = if fast { 128 } else { 512 };
    let g = Grid::new(n).expect("grid");
    let mut out = Vec::new();
    let sphere = SpherePoint::new(0.9, 0.6).expect("point");
    let hemi = HullFn::sphere_point(&sphere, g);

    record(&mut out, "tangent circle length", (|| {
        let w = g.lattice_step::<f64>();
        let mut total = 0.0;
        for m in 0..2 * g.lattice_len() {
            total += hemisphere_speed(&sphere, g.lattice::<f64>(m))? * w;
        }
        Ok(((total - 2.0 * PI).abs() < 1e-6, format!("{total:.12}")))
    })());

    record(&mut out, "hull membership", (|| {
        let r = random_hull_point(7, 0.3, 0.3, g)?;
        let ok = hemi.is_member(MEMBER_TOL) && r.is_member(MEMBER_TOL) && r.dist_to_boundary() >= 0.3 - 1e-9;
        Ok((ok, format!("random point boundary distance {:.6}", r.dist_to_boundary())))
    })());

    record(&mut out, "coefficient positivity", (|| {
        let r = random_hull_point(11, 0.3, 0.3, g)?;
        let min = coeffs(&r, fault)?.min_entry();
        Ok((min >= 0.0, format!("min p = {min:e}")))
    })());

    record(&mut out, "hemisphere coefficient mass", (|| {
        let v = l1_of(&coeffs(&hemi, fault)?);
        Ok(((v - PI * PI / 2.0).abs() < 1e-3, format!("{v:.12}")))
    })());

    record(&mut out, "north circle action", (|| {
        let circle = PlanePath::from_fn(g, |a: f64| [a.cos(), a.sin()]);
        let v = omega_with(&coeffs(&HullFn::north(g), fault)?, &circle);
        Ok(((v - PI).abs() < 1e-3, format!("{v:.12}")))
    })());

    record(&mut out, "basepoint invariance", (|| {
        let f = random_hull_point(3, 0.3, 0.3, g)?;
        let gamma = gamma_from_eta(&sphere, &AngleField::random(5, 0.1, 4, g))?;
        let c0 = coeffs(&f, fault)?;
        let c1 = coeffs(&f.shift_lattice(6), fault)?;
        let (a, b) = (omega_with(&c0, &gamma), omega_with(&c1, &gamma.shift_lattice(6)));
        Ok(((a - b).abs() < 1e-9, format!("{a:.12} vs {b:.12}")))
    })());

    record(&mut out, "psi equals path action", (|| {
        let eta = AngleField::random(9, 0.1, 4, g);
        let a = psi(&sphere, &hemi, &eta)?;
        let b = omega_action(&hemi, &gamma_from_eta(&sphere, &eta)?)?;
        Ok(((a - b).abs() < 1e-9, format!("{a:.12} vs {b:.12}")))
    })());

    record(&mut out, "calibration at the hemisphere", (|| {
        let m = maximize_eta(&sphere, &hemi, &OptimizerConfig::default())?;
        let ok = (m.value - PI).abs() < 1e-3 && m.eta.sup_norm() < 1e-4;
        Ok((ok, format!("value {:.12}, |eta| {:e}", m.value, m.eta.sup_norm())))
    })());

    record(&mut out, "gradient against finite differences", (|| {
        let f = HullFn::sphere_point(&sphere, g).lerp(&random_hull_point(4, 0.3, 0.3, g)?, 0.2)?;
        let ev = PsiEval::new(&sphere, &f)?;
        let eta = AngleField::random(21, 0.1, 4, g);
        let v = AngleField::random(22, 1.0, 5, g);
        let grad = ev.gradient(&eta)?.dot(&v);
        let t = 1e-5;
        let fd = (ev.value(&eta.axpy(t, &v))? - ev.value(&eta.axpy(-t, &v))?) / (2.0 * t);
        let rel = (grad - fd).abs() / fd.abs().max(1e-12);
        Ok((rel < 1e-5, format!("relative error {rel:e}")))
    })());

    record(&mut out, "fuglede bound", (|| {
        let eta = AngleField::random(31, 0.2, 4, g);
        let r = fuglede_check(&sphere, &eta)?;
        Ok((r.w_sup <= r.bound + 1e-3, format!("sup|w| {:e} ≤ {:e}", r.w_sup, r.bound)))
    })());

    record(&mut out, "l1 norm jacobians", (|| {
        let nrm = Norm2D::<f64>::l1(256);
        let want = [1.0, 2.0, PI / 2.0, 4.0 / PI, 2.0];
        let mut worst: f64 = 0.0;
        for (d, w) in Definition::ALL.iter().zip(want) {
            worst = worst.max((jacobian(&nrm, *d)? - w).abs());
        }
        Ok((worst < 1e-6, format!("max error {worst:e}")))
    })());

    record(&mut out, "coordinate filling area", {
        let v = coordinate_filling_area(0.0, PI / 2.0);
        Ok(((v - PI * PI / 2.0).abs() < 1e-6, format!("{v:.12}")))
    });

    out
}
