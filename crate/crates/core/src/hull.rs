//! Discrete model of the injective hull `E(S¹)`.
//!
//! A point of the hull is a 1-Lipschitz function `f` on the circle with
//! `f(α + π) = π − f(α)`. [`HullFn`] stores it on the lattice of its grid
//! (β-nodes and α-nodes interleaved over `[0, π)`) and applies the antipodal
//! rule at read time. Constructors given by closed formulas fill both node
//! families exactly; [`HullFn::from_nodes`] fills the α-nodes by linear
//! interpolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Grid;
use crate::scalar::{circle_dist, Real};
use crate::simplex::nelder_mead;

/// Default absolute tolerance of [`HullFn::is_member`].
pub const MEMBER_TOL: f64 = 1e-9;

/// Hemisphere parameters: `f_α = arccos(cos d · cos(α − τ))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint<T> {
    pub tau: T,
    pub d: T,
}

impl<T: Real> SpherePoint<T> {
    /// Wraps `tau` into `[0, 2π)`; rejects `d` outside `[0, π/2]`.
    pub fn new(tau: T, d: T) -> Result<Self> {
        if !(d >= T::zero() && d <= T::FRAC_PI_2() + T::lit(1e-12)) || !tau.is_finite() {
            return Err(Error::Invalid(format!("sphere point needs d in [0, pi/2], got d = {d}")));
        }
        Ok(Self { tau: wrap_two_pi(tau), d: d.min(T::FRAC_PI_2()) })
    }

    pub fn north() -> Self {
        Self { tau: T::zero(), d: T::FRAC_PI_2() }
    }

    /// Value of the embedded function at `alpha`.
    #[inline]
    pub fn value_at(&self, alpha: T) -> T {
        sphere_value(self.d.cos(), self.d.sin(), alpha - self.tau)
    }

    /// Spherical distance between two hemisphere points (colatitude π/2 − d).
    pub fn spherical_dist(&self, other: &Self) -> T {
        let c = self.d.sin() * other.d.sin() + self.d.cos() * other.d.cos() * (self.tau - other.tau).cos();
        c.max(-T::one()).min(T::one()).acos()
    }
}

#[inline]
fn sphere_value<T: Real>(cd: T, sd: T, x: T) -> T {
    let (sx, cx) = x.sin_cos();
    let s = (sd * sd + cd * cd * sx * sx).sqrt();
    s.atan2(cd * cx)
}

pub(crate) fn wrap_two_pi<T: Real>(x: T) -> T {
    let two_pi = T::PI() + T::PI();
    let y = x - two_pi * (x / two_pi).floor();
    if y >= two_pi {
        y - two_pi
    } else {
        y
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HullFn<T> {
    grid: Grid,
    lat: Vec<T>,
}

impl<T: Real> HullFn<T> {
    /// Wraps lattice samples (length `2n`) without checking membership.
    pub fn from_lattice(grid: Grid, lat: Vec<T>) -> Result<Self> {
        if lat.len() != grid.lattice_len() {
            return Err(Error::Invalid(format!(
                "expected {} lattice samples, got {}",
                grid.lattice_len(),
                lat.len()
            )));
        }
        Ok(Self { grid, lat })
    }

    /// β-node samples; α-nodes by linear interpolation across the wrap.
    pub fn from_nodes(grid: Grid, values: &[T]) -> Result<Self> {
        let n = grid.n();
        if values.len() != n {
            return Err(Error::Invalid(format!("expected {n} node values, got {}", values.len())));
        }
        let mut lat = Vec::with_capacity(2 * n);
        for k in 0..n {
            let next = if k + 1 < n { values[k + 1] } else { T::PI() - values[0] };
            lat.push(values[k]);
            lat.push(T::lit(0.5) * (values[k] + next));
        }
        Ok(Self { grid, lat })
    }

    /// Samples a closed formula on the lattice.
    pub fn from_fn(grid: Grid, f: impl Fn(T) -> T) -> Self {
        let lat = (0..grid.lattice_len()).map(|m| f(grid.lattice(m))).collect();
        Self { grid, lat }
    }

    pub fn constant(grid: Grid, c: T) -> Self {
        Self { grid, lat: vec![c; grid.lattice_len()] }
    }

    /// The center `N ≡ π/2` (north pole of the hemisphere).
    pub fn north(grid: Grid) -> Self {
        Self::constant(grid, T::FRAC_PI_2())
    }

    pub fn boundary_point(tau: T, grid: Grid) -> Self {
        Self::from_fn(grid, |a| circle_dist(a, tau))
    }

    pub fn sphere_point(p: &SpherePoint<T>, grid: Grid) -> Self {
        let (sd, cd) = p.d.sin_cos();
        Self::from_fn(grid, |a| sphere_value(cd, sd, a - p.tau))
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lattice_values(&self) -> &[T] {
        &self.lat
    }

    /// Values at the β-nodes.
    pub fn values(&self) -> Vec<T> {
        self.lat.iter().step_by(2).copied().collect()
    }

    /// Values at the α-nodes.
    pub fn midpoints(&self) -> Vec<T> {
        self.lat.iter().skip(1).step_by(2).copied().collect()
    }

    /// Value at lattice index `m` of the whole real line (antipodal rule).
    #[inline]
    pub fn at(&self, m: usize) -> T {
        let len = self.lat.len();
        let v = self.lat[m % len];
        if (m / len).is_multiple_of(2) {
            v
        } else {
            T::PI() - v
        }
    }

    #[inline]
    pub fn at_beta(&self, k: usize) -> T {
        self.at(2 * k)
    }

    #[inline]
    pub fn at_alpha(&self, j: usize) -> T {
        self.at(2 * j + 1)
    }

    /// Piecewise-linear evaluation at an arbitrary angle.
    pub fn value(&self, alpha: T) -> T {
        let step = self.grid.lattice_step::<T>();
        let len = self.lat.len();
        let x = wrap_two_pi(alpha) / step;
        let i = x.floor();
        let w = x - i;
        let i = i.to_usize().unwrap_or(0) % (2 * len);
        let a = self.at(i);
        let b = self.at(i + 1);
        a + w * (b - a)
    }

    /// Largest lattice slope, including the antipodal wrap.
    pub fn lipschitz_constant(&self) -> T {
        let step = self.grid.lattice_step::<T>();
        let len = self.lat.len();
        (0..len).map(|m| (self.at(m + 1) - self.at(m)).abs()).fold(T::zero(), T::max) / step
    }

    /// Value range `[0, π]` and discrete 1-Lipschitz condition with wrap.
    pub fn is_member(&self, tol: T) -> bool {
        let step = self.grid.lattice_step::<T>();
        let len = self.lat.len();
        let in_range = self.lat.iter().all(|&v| v >= -tol && v <= T::PI() + tol);
        in_range && (0..len).all(|m| (self.at(m + 1) - self.at(m)).abs() <= step + tol)
    }

    pub fn sup_dist(&self, other: &Self) -> Result<T> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.lat.iter().zip(&other.lat).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max))
    }

    /// `dist(f, S¹) = min_x f(x)`, taken over the whole circle.
    pub fn dist_to_boundary(&self) -> T {
        let lo = self.lat.iter().copied().fold(T::infinity(), T::min);
        let hi = self.lat.iter().copied().fold(T::neg_infinity(), T::max);
        lo.min(T::PI() - hi)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid, lat: self.lat.iter().map(|&v| f(v)).collect() }
    }

    /// Clamp to `[eps, π − eps]`: the retraction onto `E_ε`.
    pub fn truncate(&self, eps: T) -> Self {
        let hi = T::PI() - eps;
        self.map(|v| v.max(eps).min(hi))
    }

    /// `(1 − λ)π/2 + λf`.
    pub fn shrink_toward_center(&self, lambda: T) -> Self {
        let c = (T::one() - lambda) * T::FRAC_PI_2();
        self.map(|v| c + lambda * v)
    }

    /// `(1 − t)·self + t·other`.
    pub fn lerp(&self, other: &Self, t: T) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let lat = self.lat.iter().zip(&other.lat).map(|(a, b)| (T::one() - t) * *a + t * *b).collect();
        Ok(Self { grid: self.grid, lat })
    }

    /// Cyclic shift by `s` lattice points: `g(x) = f(x + s·π/(2n))`.
    pub fn shift_lattice(&self, s: usize) -> Self {
        let lat = (0..self.lat.len()).map(|m| self.at(m + s)).collect();
        Self { grid: self.grid, lat }
    }

    /// Nearest hemisphere point in the sup metric, with its distance.
    pub fn dist_to_hemisphere(&self) -> (T, SpherePoint<T>) {
        let xs: Vec<(T, T)> = (0..self.lat.len()).map(|m| self.grid.lattice::<T>(m).sin_cos()).collect();
        let objective = |tau: T, d: T| -> T {
            let d = d.max(T::zero()).min(T::FRAC_PI_2());
            let (sd, cd) = d.sin_cos();
            let (st, ct) = tau.sin_cos();
            let mut worst = T::zero();
            for (v, (sa, ca)) in self.lat.iter().zip(&xs) {
                let cx = *ca * ct + *sa * st;
                let sx = *sa * ct - *ca * st;
                let s = (sd * sd + cd * cd * sx * sx).sqrt();
                worst = worst.max((*v - s.atan2(cd * cx)).abs());
            }
            worst
        };

        let (nt, nd) = (90usize, 30usize);
        let mut cells: Vec<(T, T, T)> = Vec::with_capacity(nt * (nd + 1));
        for i in 0..nt {
            let tau = T::lit(2.0) * T::PI() * T::from_usize_lossy(i) / T::from_usize_lossy(nt);
            for k in 0..=nd {
                let d = T::FRAC_PI_2() * T::from_usize_lossy(k) / T::from_usize_lossy(nd);
                cells.push((objective(tau, d), tau, d));
            }
        }
        cells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

        let dt = T::lit(2.0) * T::PI() / T::from_usize_lossy(nt);
        let dd = T::FRAC_PI_2() / T::from_usize_lossy(nd);
        let tol = T::lit(1e-6);
        let mut best = (cells[0].0, cells[0].1, cells[0].2);
        for &(_, tau0, d0) in cells.iter().take(3) {
            let mut x = vec![tau0, d0];
            let mut scale = vec![dt, dd];
            for _ in 0..3 {
                let r = nelder_mead(|p: &[T]| objective(p[0], p[1]), &x, &scale, tol, 2000);
                x = r.x;
                scale = vec![dt * T::lit(0.1), dd * T::lit(0.1)];
                if r.value < best.0 {
                    best = (r.value, x[0], x[1]);
                }
            }
        }
        let d = best.2.max(T::zero()).min(T::FRAC_PI_2());
        (best.0, SpherePoint { tau: wrap_two_pi(best.1), d })
    }
}

/// Deterministic random point of `E_ε`.
///
/// A random hemisphere point plus an antiperiodic Fourier perturbation of
/// sup-amplitude `roughness`, projected back by alternating antipodal
/// symmetrization, the McShane envelope average and clamping.
pub fn random_hull_point<T: Real>(seed: u64, roughness: T, eps: T, grid: Grid) -> Result<HullFn<T>> {
    if !(eps > T::zero() && eps < T::FRAC_PI_2()) {
        return Err(Error::Invalid(format!("eps must lie in (0, pi/2), got {eps}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let d: f64 = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
    let modes: Vec<(f64, f64)> = (0..6).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();

    let full = 2 * grid.lattice_len();
    let step = grid.lattice_step::<T>();
    let base = SpherePoint { tau: T::lit(tau), d: T::lit(d) };
    let mut u: Vec<T> = (0..full)
        .map(|m| {
            let x = grid.lattice::<f64>(m);
            let s: f64 = modes
                .iter()
                .enumerate()
                .map(|(j, (a, b))| {
                    let k = (2 * j + 1) as f64;
                    (a * (k * x).cos() + b * (k * x).sin()) / (k * k)
                })
                .sum();
            T::lit(s)
        })
        .collect();
    let umax = u.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if umax > T::zero() {
        let s = roughness / umax;
        u.iter_mut().for_each(|v| *v *= s);
    }
    let mut v: Vec<T> = (0..full).map(|m| base.value_at(grid.lattice(m)) + u[m]).collect();

    let lo = eps;
    let hi = T::PI() - eps;
    let half = full / 2;
    let mut change = T::infinity();
    for round in 1..=100 {
        let prev = v.clone();
        for m in 0..half {
            let a = T::lit(0.5) * (v[m] + T::PI() - v[m + half]);
            v[m] = a;
            v[m + half] = T::PI() - a;
        }
        let upper = envelope(&v, step, true);
        let lower = envelope(&v, step, false);
        for m in 0..full {
            v[m] = (T::lit(0.5) * (upper[m] + lower[m])).max(lo).min(hi);
        }
        change = v.iter().zip(&prev).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
        if change <= T::lit(1e-10) {
            v.truncate(half);
            let f = HullFn::from_lattice(grid, v)?;
            debug_assert!(round <= 100);
            return Ok(f);
        }
    }
    Err(Error::NoConvergence { rounds: 100, change: change.as_f64() })
}

/// McShane envelope on a closed circle of equispaced samples:
/// `min_y v(y) + dist(x, y)` (upper) or `max_y v(y) − dist(x, y)` (lower).
fn envelope<T: Real>(v: &[T], step: T, upper: bool) -> Vec<T> {
    let n = v.len();
    let mut e = v.to_vec();
    let relax = |cur: T, nb: T| if upper { cur.min(nb + step) } else { cur.max(nb - step) };
    for i in 1..2 * n {
        let (a, b) = (i % n, (i - 1) % n);
        e[a] = relax(e[a], e[b]);
    }
    for i in (0..2 * n - 1).rev() {
        let (a, b) = (i % n, (i + 1) % n);
        e[a] = relax(e[a], e[b]);
    }
    e
}

#[derive(Serialize, Deserialize)]
struct HullFnJson {
    n: usize,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    midpoints: Option<Vec<f64>>,
}

impl<T: Real> HullFn<T> {
    /// `{"n", "values", "midpoints"}`; `values` are the β-node samples.
    pub fn to_json(&self) -> String {
        let doc = HullFnJson {
            n: self.grid.n(),
            values: self.values().iter().map(|v| v.as_f64()).collect(),
            midpoints: Some(self.midpoints().iter().map(|v| v.as_f64()).collect()),
        };
        serde_json::to_string(&doc).expect("plain numbers serialize")
    }

    /// Accepts documents with or without `midpoints`.
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: HullFnJson = serde_json::from_str(s)?;
        let grid = Grid::new(doc.n)?;
        if doc.values.iter().chain(doc.midpoints.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite value".into()));
        }
        let values: Vec<T> = doc.values.iter().map(|&v| T::lit(v)).collect();
        match doc.midpoints {
            None => Self::from_nodes(grid, &values),
            Some(mid) => {
                if mid.len() != doc.n || values.len() != doc.n {
                    return Err(Error::Invalid("values and midpoints need n entries each".into()));
                }
                let lat = values.iter().zip(&mid).flat_map(|(v, m)| [*v, T::lit(*m)]).collect();
                Self::from_lattice(grid, lat)
            }
        }
    }
}
