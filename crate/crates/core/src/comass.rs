//! The functional `Ψ_h(f, η)` and the concave maximization giving the
//! inner-Riemannian comass of `ω_f`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::{p_grid, CoeffGrid};
use crate::error::{Error, Result};
use crate::hull::{HullFn, SpherePoint};
use crate::io::{fmt_sig, round_sig};
use crate::pathspace::{center, gamma_from_phase, norm, nu_h, omega_bilinear, omega_with, AngleField, Phase, PlanePath, Vec2};
use crate::quadrature::Grid;
use crate::scalar::{kahan_sum, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Stop when the projected gradient has L² norm below this.
    pub grad_tol: f64,
    /// Initial step; `None` means `1 / max p`.
    pub step0: Option<f64>,
    pub backtrack: f64,
    pub eta_cap: f64,
    pub multistart: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { max_iters: 500, grad_tol: 1e-9, step0: None, backtrack: 0.5, eta_cap: 0.15, multistart: 1, seed: 0 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.grad_tol > 0.0
            && self.step0.is_none_or(|s| s > 0.0)
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.eta_cap > 0.0
            && self.multistart > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("bad optimizer config {self:?}")))
        }
    }
}

/// `Ψ_h(f, ·)` with the coefficient band and the phase `ν_h` precomputed.
pub struct PsiEval<T> {
    coeff: CoeffGrid<T>,
    nu: Phase<T>,
}

struct Trig<T> {
    c: Vec<T>,
    s: Vec<T>,
}

impl<T: Real> PsiEval<T> {
    pub fn new(p: &SpherePoint<T>, f: &HullFn<T>) -> Result<Self> {
        let coeff = p_grid(f)?;
        let nu = nu_h(p, *f.grid())?;
        Ok(Self { coeff, nu })
    }

    pub fn grid(&self) -> &Grid {
        self.coeff.grid()
    }

    pub fn coeffs(&self) -> &CoeffGrid<T> {
        &self.coeff
    }

    pub fn phase(&self) -> &Phase<T> {
        &self.nu
    }

    fn trig(&self, eta: &AngleField<T>) -> Trig<T> {
        let len = 2 * self.grid().lattice_len();
        let (mut c, mut s) = (Vec::with_capacity(len), Vec::with_capacity(len));
        for m in 0..len {
            let (sn, cs) = (self.nu.at(m) + eta.at(m)).sin_cos();
            c.push(cs);
            s.push(sn);
        }
        Trig { c, s }
    }

    fn half_h2(&self) -> T {
        let h = self.grid().step::<T>();
        T::lit(0.5) * h * h
    }

    pub fn value(&self, eta: &AngleField<T>) -> Result<T> {
        self.grid().ensure_same(eta.grid())?;
        let tr = self.trig(eta);
        let n = self.grid().n();
        let rows = (0..n).map(|j| {
            let a = 2 * j + 1;
            let (ca, sa) = (tr.c[a], tr.s[a]);
            self.coeff.row(j).iter().enumerate().map(|(i, p)| {
                let b = 2 * (j + i + 1);
                *p * (tr.s[b] * ca - tr.c[b] * sa)
            })
            .fold(T::zero(), |x, y| x + y)
        });
        Ok(self.half_h2() * kahan_sum(rows))
    }

    /// `Ψ(b) − Ψ(a)` summed as `2 cos(mean Δ) sin(half increment)` per pair,
    /// which keeps its relative accuracy when the two values agree to
    /// many digits.
    pub fn difference(&self, a: &AngleField<T>, b: &AngleField<T>) -> Result<T> {
        self.grid().ensure_same(a.grid())?;
        self.grid().ensure_same(b.grid())?;
        let half = T::lit(0.5);
        let len = 2 * self.grid().lattice_len();
        let mid = AngleField::raw(*self.grid(), a.lattice_values().iter().zip(b.lattice_values()).map(|(x, y)| half * (*x + *y)).collect());
        let tr = self.trig(&mid);
        let (mut dc, mut ds) = (Vec::with_capacity(len), Vec::with_capacity(len));
        for m in 0..len {
            let (sn, cs) = (half * (b.at(m) - a.at(m))).sin_cos();
            dc.push(cs);
            ds.push(sn);
        }
        let n = self.grid().n();
        let rows = (0..n).map(|j| {
            let i0 = 2 * j + 1;
            let (ca, sa, dca, dsa) = (tr.c[i0], tr.s[i0], dc[i0], ds[i0]);
            self.coeff.row(j).iter().enumerate().map(|(i, p)| {
                let k = 2 * (j + i + 1);
                *p * (tr.c[k] * ca + tr.s[k] * sa) * (ds[k] * dca - dc[k] * dsa)
            })
            .fold(T::zero(), |x, y| x + y)
        });
        Ok((self.half_h2() + self.half_h2()) * kahan_sum(rows))
    }

    /// L² representer of the derivative (pairing by [`AngleField::dot`]),
    /// projected to mean zero.
    pub fn gradient(&self, eta: &AngleField<T>) -> Result<AngleField<T>> {
        self.grid().ensure_same(eta.grid())?;
        let tr = self.trig(eta);
        let n = self.grid().n();
        let mut g = vec![T::zero(); 2 * n];
        for j in 0..n {
            let a = 2 * j + 1;
            let (ca, sa) = (tr.c[a], tr.s[a]);
            let mut row = T::zero();
            for (i, p) in self.coeff.row(j).iter().enumerate() {
                let k = j + i + 1;
                let b = 2 * k;
                let w = *p * (tr.c[b] * ca + tr.s[b] * sa);
                row += w;
                g[2 * (k % n)] += w;
            }
            g[a] -= row;
        }
        let scale = self.half_h2() / self.grid().lattice_step::<T>();
        g.iter_mut().for_each(|x| *x *= scale);
        center(&mut g);
        AngleField::centered(*self.grid(), g)
    }

    /// Second derivative of `t ↦ Ψ(η + t v)` at `t = 0`.
    pub fn hessian_quadform(&self, eta: &AngleField<T>, v: &AngleField<T>) -> Result<T> {
        self.grid().ensure_same(eta.grid())?;
        self.grid().ensure_same(v.grid())?;
        let tr = self.trig(eta);
        let n = self.grid().n();
        let rows = (0..n).map(|j| {
            let a = 2 * j + 1;
            let (ca, sa, va) = (tr.c[a], tr.s[a], v.at(a));
            self.coeff.row(j).iter().enumerate().map(|(i, p)| {
                let b = 2 * (j + i + 1);
                let dv = v.at(b) - va;
                *p * (tr.s[b] * ca - tr.c[b] * sa) * dv * dv
            })
            .fold(T::zero(), |x, y| x + y)
        });
        Ok(-self.half_h2() * kahan_sum(rows))
    }

    pub fn gamma(&self, eta: &AngleField<T>) -> PlanePath<T> {
        gamma_from_phase(&self.nu, eta)
    }
}

pub fn psi<T: Real>(p: &SpherePoint<T>, f: &HullFn<T>, eta: &AngleField<T>) -> Result<T> {
    PsiEval::new(p, f)?.value(eta)
}

pub fn psi_gradient<T: Real>(p: &SpherePoint<T>, f: &HullFn<T>, eta: &AngleField<T>) -> Result<AngleField<T>> {
    PsiEval::new(p, f)?.gradient(eta)
}

pub fn psi_hessian_quadform<T: Real>(p: &SpherePoint<T>, f: &HullFn<T>, eta: &AngleField<T>, v: &AngleField<T>) -> Result<T> {
    PsiEval::new(p, f)?.hessian_quadform(eta, v)
}

/// Projection onto `{mean 0} ∩ {‖η‖∞ ≤ cap}`: `clamp(x − c)` with the shift
/// `c` found by bisection.
pub fn project_capped<T: Real>(x: &[T], cap: T) -> Vec<T> {
    let clamp = |v: T| v.max(-cap).min(cap);
    let total = |c: T| kahan_sum(x.iter().map(|v| clamp(*v - c)));
    let lo0 = x.iter().copied().fold(T::infinity(), T::min) - cap;
    let hi0 = x.iter().copied().fold(T::neg_infinity(), T::max) + cap;
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = T::lit(0.5) * (lo + hi);
    let mut out: Vec<T> = x.iter().map(|v| clamp(*v - c)).collect();
    // Leftover rounding in the mean, spread over the unclamped entries.
    let free: Vec<usize> = (0..out.len()).filter(|&i| out[i].abs() < cap).collect();
    if !free.is_empty() {
        let r = kahan_sum(out.iter().copied()) / T::from_usize_lossy(free.len());
        free.iter().for_each(|&i| out[i] -= r);
    }
    out
}

#[derive(Clone, Debug)]
pub struct AscentDiagnostics<T> {
    pub iterations: usize,
    pub grad_norm: T,
    pub cap_active: bool,
    pub converged: bool,
    /// Ψ after each accepted step, starting with the initial value (built
    /// from the accurate increments, so exactly non-decreasing).
    pub history: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct Maximizer<T> {
    pub eta: AngleField<T>,
    pub value: T,
    pub diagnostics: AscentDiagnostics<T>,
}

pub fn maximize_eta<T: Real>(p: &SpherePoint<T>, f: &HullFn<T>, cfg: &OptimizerConfig) -> Result<Maximizer<T>> {
    let ev = PsiEval::new(p, f)?;
    maximize_from(&ev, AngleField::zeros(*f.grid()), cfg)
}

/// Projected gradient ascent of `Ψ` from `start`.
pub fn maximize_from<T: Real>(ev: &PsiEval<T>, start: AngleField<T>, cfg: &OptimizerConfig) -> Result<Maximizer<T>> {
    cfg.validate()?;
    let grid = *ev.grid();
    let cap = T::lit(cfg.eta_cap);
    let project = |x: &AngleField<T>| AngleField::raw(grid, project_capped(x.lattice_values(), cap));
    let step0 = T::lit(cfg.step0.unwrap_or_else(|| 1.0 / ev.coeffs().max_entry().as_f64().max(1e-300)));
    let armijo = T::lit(1e-4);
    let shrink = T::lit(cfg.backtrack);
    let tol = T::lit(cfg.grad_tol);

    let mut eta = project(&start);
    let mut value = ev.value(&eta)?;
    let mut history = vec![value];
    let mut running = value;
    let mut step = step0;
    let mut iterations = 0;
    let mut grad_norm;
    loop {
        let g = ev.gradient(&eta)?;
        grad_norm = project(&eta.axpy(T::one(), &g)).axpy(-T::one(), &eta).l2_norm();
        if grad_norm <= tol || iterations >= cfg.max_iters {
            break;
        }
        iterations += 1;
        let mut s = step;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = project(&eta.axpy(s, &g));
            let gain = g.dot(&cand.axpy(-T::one(), &eta));
            let inc = ev.difference(&eta, &cand)?;
            if inc >= armijo * gain && gain >= T::zero() {
                eta = cand;
                running += inc;
                history.push(running);
                accepted = true;
                break;
            }
            s *= shrink;
        }
        if !accepted {
            break;
        }
        step = (s + s).min(step0);
    }
    value = ev.value(&eta)?;
    let cap_active = eta.sup_norm() >= cap * T::lit(1.0 - 1e-9);
    let diagnostics = AscentDiagnostics { iterations, grad_norm, cap_active, converged: grad_norm <= tol, history };
    Ok(Maximizer { eta, value, diagnostics })
}

#[derive(Clone, Debug)]
pub struct FreePathResult<T> {
    pub gamma: PlanePath<T>,
    pub value: T,
    pub min_modulus: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes `ω_f(γ)` over lattice paths with `|γ| ≤ 1`, moving modulus
/// and phase freely (projected gradient with backtracking).
pub fn maximize_free_path<T: Real>(f: &HullFn<T>, start: &PlanePath<T>, max_iters: usize, tol: T) -> Result<FreePathResult<T>> {
    f.grid().ensure_same(start.grid())?;
    let coeff = p_grid(f)?;
    let grid = *f.grid();
    let n = grid.n();
    let h = grid.step::<T>();
    let scale = T::lit(0.5) * h * h / grid.lattice_step::<T>();
    let disk = |q: Vec2<T>| {
        let r = norm(q);
        if r > T::one() {
            [q[0] / r, q[1] / r]
        } else {
            q
        }
    };
    let grad = |gam: &PlanePath<T>| -> Vec<Vec2<T>> {
        let mut g = vec![[T::zero(); 2]; 2 * n];
        for j in 0..n {
            let a = gam.at(2 * j + 1);
            let mut acc = [T::zero(); 2];
            for (i, p) in coeff.row(j).iter().enumerate() {
                let k = j + i + 1;
                let b = gam.at(2 * k);
                acc[0] += *p * b[1];
                acc[1] -= *p * b[0];
                let sign = if k >= n { -T::one() } else { T::one() };
                let e = &mut g[2 * (k % n)];
                e[0] -= sign * *p * a[1];
                e[1] += sign * *p * a[0];
            }
            g[2 * j + 1] = acc;
        }
        g.iter_mut().for_each(|e| {
            e[0] *= scale;
            e[1] *= scale;
        });
        g
    };
    let w = grid.lattice_step::<T>();
    let pair = |x: &[Vec2<T>], y: &[Vec2<T>]| w * kahan_sum(x.iter().zip(y).map(|(a, b)| a[0] * b[0] + a[1] * b[1]));

    let mut gam = PlanePath::from_lattice(grid, start.lattice_points().iter().map(|q| disk(*q)).collect())?;
    let mut value = omega_with(&coeff, &gam);
    let step0 = T::one() / coeff.max_entry();
    let mut step = step0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        let g = grad(&gam);
        let probe: Vec<Vec2<T>> = gam.lattice_points().iter().zip(&g).map(|(q, d)| disk([q[0] + d[0], q[1] + d[1]])).collect();
        let diff: Vec<Vec2<T>> = probe.iter().zip(gam.lattice_points()).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
        if pair(&diff, &diff).sqrt() <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut s = step;
        let mut accepted = false;
        for _ in 0..60 {
            let pts: Vec<Vec2<T>> = gam.lattice_points().iter().zip(&g).map(|(q, d)| disk([q[0] + s * d[0], q[1] + s * d[1]])).collect();
            let d: Vec<Vec2<T>> = pts.iter().zip(gam.lattice_points()).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
            let gain = pair(&g, &d);
            let dp = PlanePath::from_lattice(grid, d)?;
            let inc = omega_bilinear(&coeff, &gam, &dp) + omega_bilinear(&coeff, &dp, &gam) + omega_bilinear(&coeff, &dp, &dp);
            if inc >= T::lit(1e-4) * gain && gain >= T::zero() {
                gam = PlanePath::from_lattice(grid, pts)?;
                value = omega_with(&coeff, &gam);
                accepted = true;
                break;
            }
            s *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
        step = (s + s).min(step0);
    }
    let min_modulus = gam.min_modulus();
    Ok(FreePathResult { gamma: gam, value, min_modulus, iterations, converged })
}

#[derive(Clone, Debug)]
pub struct ComassReport<T> {
    pub value: T,
    pub hemisphere: SpherePoint<T>,
    pub dist: T,
    pub maximizer: Maximizer<T>,
}

/// `‖ω_f‖_ir`: nearest hemisphere point, then the η-maximization, keeping
/// the best of `multistart` starts (the first from η = 0).
pub fn comass_ir<T: Real>(f: &HullFn<T>, cfg: &OptimizerConfig) -> Result<ComassReport<T>> {
    cfg.validate()?;
    if !(f.dist_to_boundary() > T::zero()) {
        return Err(Error::TouchesBoundary(f.dist_to_boundary().as_f64()));
    }
    let (dist, hp) = f.dist_to_hemisphere();
    let ev = PsiEval::new(&hp, f)?;
    let grid = *f.grid();
    let mut best = maximize_from(&ev, AngleField::zeros(grid), cfg)?;
    for i in 1..cfg.multistart {
        let start = AngleField::random(cfg.seed.wrapping_add(i as u64), T::lit(0.5 * cfg.eta_cap), 4, grid);
        let run = maximize_from(&ev, start, cfg)?;
        if run.value > best.value {
            best = run;
        }
    }
    Ok(ComassReport { value: best.value, hemisphere: hp, dist, maximizer: best })
}

/// Discrete value of `Ψ_h(h, 0)` on the grid of `f`; the grid counterpart
/// of π against which calibration defects are measured.
pub fn calibration_reference<T: Real>(p: &SpherePoint<T>, grid: Grid) -> Result<T> {
    psi(p, &HullFn::sphere_point(p, grid), &AngleField::zeros(grid))
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub dist: f64,
    pub defect: f64,
    pub eta_inf: f64,
    pub iters: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub fit_points: usize,
}

/// Rows closer than this to the hemisphere sit at the resolution of the
/// nearest-point search and are left out of the fit.
pub const FIT_DIST_FLOOR: f64 = 1e-6;

/// Defect `|‖ω_{f_t}‖_ir − π|` along `f_t = (1 − t)h + t g`, with a
/// least-squares fit of `log defect` against `log dist`.
///
/// π is replaced by [`calibration_reference`] at the nearest hemisphere
/// point, which removes the quadrature bias of the grid.
pub fn calibration_sweep<T: Real>(h: &SpherePoint<T>, g: &HullFn<T>, ts: &[T], cfg: &OptimizerConfig) -> Result<SweepReport> {
    let grid = *g.grid();
    let base = HullFn::sphere_point(h, grid);
    let rows: Vec<SweepRow> = ts
        .par_iter()
        .map(|&t| -> Result<SweepRow> {
            let ft = base.lerp(g, t)?;
            let rep = comass_ir(&ft, cfg)?;
            let reference = calibration_reference(&rep.hemisphere, grid)?;
            Ok(SweepRow {
                t: t.as_f64(),
                dist: rep.dist.as_f64(),
                defect: (rep.value - reference).abs().as_f64(),
                eta_inf: rep.maximizer.eta.sup_norm().as_f64(),
                iters: rep.maximizer.diagnostics.iterations,
                converged: rep.maximizer.diagnostics.converged,
            })
        })
        .collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.converged && r.dist > FIT_DIST_FLOOR && r.defect > 0.0)
        .map(|r| (r.dist.ln(), r.defect.ln()))
        .collect();
    let (slope, intercept) = match least_squares(&pts) {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    Ok(SweepReport { rows, slope, intercept, fit_points: pts.len() })
}

/// Slope and intercept of the least-squares line; `None` below two points.
pub fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

impl SweepReport {
    /// CSV `t,dist,defect,eta_inf,iters,converged`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "dist", "defect", "eta_inf", "iters", "converged"])?;
        for r in &self.rows {
            out.write_record([fmt_sig(r.t), fmt_sig(r.dist), fmt_sig(r.defect), fmt_sig(r.eta_inf), r.iters.to_string(), r.converged.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope.map(round_sig),
            "intercept": self.intercept.map(round_sig),
            "fit_points": self.fit_points,
            "rows": self.rows.len(),
        })
    }
}

/// Smallest sampled ratio `−D²Ψ(η^t)[v] / ‖v‖₂²` along random segments
/// `η^t = (1 − t)η⁰ + tη¹` in the `eps2` ball, `v = η¹ − η⁰`,
/// `t ∈ {0, ½, 1}`. `+∞` when `trials == 0`.
pub fn concavity_certificate<T: Real>(p: &SpherePoint<T>, f: &HullFn<T>, eps2: T, trials: usize, seed: u64) -> Result<T> {
    if trials == 0 {
        eprintln!("warning: concavity certificate over zero trials");
        return Ok(T::infinity());
    }
    let ev = PsiEval::new(p, f)?;
    let grid = *f.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = T::infinity();
    for _ in 0..trials {
        let a0 = eps2 * T::lit(rng.gen_range(0.1..1.0));
        let a1 = eps2 * T::lit(rng.gen_range(0.1..1.0));
        let e0 = AngleField::random(rng.gen(), a0, 6, grid);
        let e1 = AngleField::random(rng.gen(), a1, 6, grid);
        let v = e1.axpy(-T::one(), &e0);
        let nv = v.dot(&v);
        if !(nv > T::zero()) {
            continue;
        }
        for t in [T::zero(), T::lit(0.5), T::one()] {
            let et = e0.axpy(t, &v);
            best = best.min(-ev.hessian_quadform(&et, &v)? / nv);
        }
    }
    Ok(best)
}
