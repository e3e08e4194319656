//! Antipodal plane paths and the action `ω_f(γ)`.
//!
//! Paths and phase fields live on the lattice of their grid, like
//! [`HullFn`]. A path extends by `γ(α + π) = −γ(α)`, a phase field by
//! π-periodicity, and the hemisphere phase by `ν(α + π) = ν(α) + π`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coeffs::{fmt12, hemisphere_speed, p_grid, CoeffGrid};
use crate::error::{Error, Result};
use crate::hull::{HullFn, SpherePoint};
use crate::quadrature::{integrate_rows, Grid};
use crate::scalar::{kahan_sum, Real};

pub type Vec2<T> = [T; 2];

#[inline]
pub fn cross<T: Real>(a: Vec2<T>, b: Vec2<T>) -> T {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn dot<T: Real>(a: Vec2<T>, b: Vec2<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm<T: Real>(a: Vec2<T>) -> T {
    a[0].hypot(a[1])
}

/// Antipodal path sampled on the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanePath<T> {
    grid: Grid,
    pts: Vec<Vec2<T>>,
}

impl<T: Real> PlanePath<T> {
    pub fn from_lattice(grid: Grid, pts: Vec<Vec2<T>>) -> Result<Self> {
        if pts.len() != grid.lattice_len() {
            return Err(Error::Invalid(format!("expected {} path samples, got {}", grid.lattice_len(), pts.len())));
        }
        Ok(Self { grid, pts })
    }

    /// β-node samples; α-nodes by linear interpolation across the wrap.
    pub fn from_nodes(grid: Grid, nodes: &[Vec2<T>]) -> Result<Self> {
        let n = grid.n();
        if nodes.len() != n {
            return Err(Error::Invalid(format!("expected {n} node samples, got {}", nodes.len())));
        }
        let half = T::lit(0.5);
        let mut pts = Vec::with_capacity(2 * n);
        for k in 0..n {
            let next = if k + 1 < n { nodes[k + 1] } else { [-nodes[0][0], -nodes[0][1]] };
            pts.push(nodes[k]);
            pts.push([half * (nodes[k][0] + next[0]), half * (nodes[k][1] + next[1])]);
        }
        Ok(Self { grid, pts })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(T) -> Vec2<T>) -> Self {
        Self { grid, pts: (0..grid.lattice_len()).map(|m| f(grid.lattice(m))).collect() }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lattice_points(&self) -> &[Vec2<T>] {
        &self.pts
    }

    /// Point at lattice index `m` of the whole line.
    #[inline]
    pub fn at(&self, m: usize) -> Vec2<T> {
        let len = self.pts.len();
        let p = self.pts[m % len];
        if (m / len).is_multiple_of(2) {
            p
        } else {
            [-p[0], -p[1]]
        }
    }

    pub fn is_admissible(&self) -> bool {
        self.pts.iter().all(|p| norm(*p) <= T::one() + T::lit(1e-9))
    }

    pub fn min_modulus(&self) -> T {
        self.pts.iter().map(|p| norm(*p)).fold(T::infinity(), T::min)
    }

    pub fn max_modulus(&self) -> T {
        self.pts.iter().map(|p| norm(*p)).fold(T::zero(), T::max)
    }

    pub fn rotated(&self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self { grid: self.grid, pts: self.pts.iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect() }
    }

    pub fn shift_lattice(&self, s: usize) -> Self {
        Self { grid: self.grid, pts: (0..self.pts.len()).map(|m| self.at(m + s)).collect() }
    }

    /// CSV `alpha,gx,gy` over the lattice of `[0, π)`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["alpha", "gx", "gy"])?;
        for (m, p) in self.pts.iter().enumerate() {
            out.write_record([fmt12(self.grid.lattice::<T>(m)), fmt12(p[0]), fmt12(p[1])])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Mean-zero π-periodic phase field on the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleField<T> {
    grid: Grid,
    vals: Vec<T>,
}

impl<T: Real> AngleField<T> {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, vals: vec![T::zero(); grid.lattice_len()] }
    }

    /// Takes lattice samples and subtracts their mean.
    pub fn centered(grid: Grid, mut vals: Vec<T>) -> Result<Self> {
        if vals.len() != grid.lattice_len() {
            return Err(Error::Invalid(format!("expected {} phase samples, got {}", grid.lattice_len(), vals.len())));
        }
        center(&mut vals);
        Ok(Self { grid, vals })
    }

    /// Lattice samples taken as given (caller guarantees mean zero).
    pub(crate) fn raw(grid: Grid, vals: Vec<T>) -> Self {
        Self { grid, vals }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(T) -> T) -> Self {
        let vals = (0..grid.lattice_len()).map(|m| f(grid.lattice(m))).collect();
        Self::centered(grid, vals).expect("length matches")
    }

    /// Smooth random field: a few π-periodic harmonics, centered, scaled to
    /// sup-norm `amplitude`.
    pub fn random(seed: u64, amplitude: T, modes: usize, grid: Grid) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coef: Vec<(f64, f64)> = (0..modes).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let raw = Self::from_fn(grid, |x: T| {
            let x = x.as_f64();
            let s: f64 = coef
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let k = 2.0 * (i + 1) as f64;
                    (a * (k * x).cos() + b * (k * x).sin()) / (i + 1) as f64
                })
                .sum();
            T::lit(s)
        });
        let sup = raw.sup_norm();
        if sup > T::zero() {
            raw.scaled(amplitude / sup)
        } else {
            raw
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lattice_values(&self) -> &[T] {
        &self.vals
    }

    #[inline]
    pub fn at(&self, m: usize) -> T {
        self.vals[m % self.vals.len()]
    }

    pub fn mean(&self) -> T {
        kahan_sum(self.vals.iter().copied()) / T::from_usize_lossy(self.vals.len())
    }

    pub fn sup_norm(&self) -> T {
        self.vals.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `(∫₀^π η²)^{1/2}` by the lattice rule.
    pub fn l2_norm(&self) -> T {
        self.dot(self).sqrt()
    }

    /// `∫₀^π η·ξ` by the lattice rule.
    pub fn dot(&self, other: &Self) -> T {
        let w = self.grid.lattice_step::<T>();
        w * kahan_sum(self.vals.iter().zip(&other.vals).map(|(a, b)| *a * *b))
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { grid: self.grid, vals: self.vals.iter().map(|v| *v * s).collect() }
    }

    /// `self + t·other`.
    pub fn axpy(&self, t: T, other: &Self) -> Self {
        Self { grid: self.grid, vals: self.vals.iter().zip(&other.vals).map(|(a, b)| *a + t * *b).collect() }
    }

    /// Adds a constant without re-centering (for gauge tests).
    pub fn plus_constant(&self, c: T) -> Self {
        Self { grid: self.grid, vals: self.vals.iter().map(|v| *v + c).collect() }
    }

    pub fn recentered(&self) -> Self {
        Self::centered(self.grid, self.vals.clone()).expect("length matches")
    }
}

pub(crate) fn center<T: Real>(v: &mut [T]) {
    let mean = kahan_sum(v.iter().copied()) / T::from_usize_lossy(v.len());
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Phase `ν_h` of the tangent circle at a hemisphere point:
/// `ν(0) = 0`, `ν' = p_α(h)`, `ν(α + π) = ν(α) + π`.
///
/// Sampled from the antiderivative `A(x) = arg(sin d·cos x + i·sin x)` of
/// `sin d / (1 − cos²d cos²x)`, so `ν(α) = A(α − τ) − A(−τ)`.
#[derive(Clone, Debug)]
pub struct Phase<T> {
    grid: Grid,
    vals: Vec<T>,
}

fn phase_antiderivative<T: Real>(sd: T, x: T) -> T {
    let (s, c) = x.sin_cos();
    x + ((T::one() - sd) * s * c).atan2(sd * c * c + s * s)
}

impl<T: Real> Phase<T> {
    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `ν` at lattice index `m` of the whole line.
    #[inline]
    pub fn at(&self, m: usize) -> T {
        let len = self.vals.len();
        self.vals[m % len] + T::PI() * T::from_usize_lossy(m / len)
    }

    /// Samples on `[0, π]`: `n + 1` β-node values ending at `ν(π) = π`.
    pub fn beta_table(&self) -> Vec<T> {
        (0..=self.grid.n()).map(|k| self.at(2 * k)).collect()
    }

    pub fn lattice_values(&self) -> &[T] {
        &self.vals
    }
}

pub fn nu_h<T: Real>(p: &SpherePoint<T>, grid: Grid) -> Result<Phase<T>> {
    if !(p.d > T::zero()) {
        return Err(Error::DegenerateSphere(p.d.as_f64()));
    }
    let sd = p.d.sin();
    let base = phase_antiderivative(sd, -p.tau);
    let vals = (0..grid.lattice_len()).map(|m| phase_antiderivative(sd, grid.lattice::<T>(m) - p.tau) - base).collect();
    Ok(Phase { grid, vals })
}

/// Cumulative trapezoid table of `∫₀^α p_s(h) ds` at the β-nodes of
/// `[0, π]`; an independent route to [`nu_h`] used for cross-checks.
pub fn nu_h_trapezoid<T: Real>(p: &SpherePoint<T>, grid: Grid) -> Result<Vec<T>> {
    let n = grid.n();
    let h = grid.step::<T>();
    let speed: Vec<T> = (0..=n).map(|k| hemisphere_speed(p, grid.beta(k))).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = T::zero();
    out.push(acc);
    for k in 0..n {
        acc += T::lit(0.5) * h * (speed[k] + speed[k + 1]);
        out.push(acc);
    }
    Ok(out)
}

/// `γ_η = e^{i(ν_h + η)}` on the lattice.
pub fn gamma_from_eta<T: Real>(p: &SpherePoint<T>, eta: &AngleField<T>) -> Result<PlanePath<T>> {
    let nu = nu_h(p, *eta.grid())?;
    Ok(gamma_from_phase(&nu, eta))
}

pub fn gamma_from_phase<T: Real>(nu: &Phase<T>, eta: &AngleField<T>) -> PlanePath<T> {
    let pts = nu
        .lattice_values()
        .iter()
        .zip(eta.lattice_values())
        .map(|(a, b)| {
            let (s, c) = (*a + *b).sin_cos();
            [c, s]
        })
        .collect();
    PlanePath { grid: *nu.grid(), pts }
}

/// `ω_f(γ) = ∬_{α<β} p_{α,β}(f) γ(α) × γ(β)`.
pub fn omega_action<T: Real>(f: &HullFn<T>, gamma: &PlanePath<T>) -> Result<T> {
    f.grid().ensure_same(gamma.grid())?;
    Ok(omega_with(&p_grid(f)?, gamma))
}

/// [`omega_action`] with a precomputed coefficient grid.
pub fn omega_with<T: Real>(c: &CoeffGrid<T>, gamma: &PlanePath<T>) -> T {
    omega_bilinear(c, gamma, gamma)
}

/// `∬_{α<β} p_{α,β} x(α) × y(β)`; `ω_f(γ)` is the diagonal.
pub fn omega_bilinear<T: Real>(c: &CoeffGrid<T>, x: &PlanePath<T>, y: &PlanePath<T>) -> T {
    let n = c.grid().n();
    let rows: Vec<T> = (0..n)
        .map(|j| {
            let xa = x.at(2 * j + 1);
            c.row(j).iter().enumerate().map(|(i, p)| *p * cross(xa, y.at(2 * (j + i + 1)))).sum()
        })
        .collect();
    integrate_rows(c.grid(), &rows)
}

/// `μ_{f,γ}(α) = ∫_α^{α+π} q_{α,β}(f) γ(β) dβ` on the lattice.
///
/// At an α-node the window holds the β-nodes `β_{j+1..j+n}`; at a β-node it
/// holds the α-nodes `α_{k..k+n−1}`. Both sums are midpoint rules.
pub fn mu_path<T: Real>(f: &HullFn<T>, gamma: &PlanePath<T>) -> Result<PlanePath<T>> {
    f.grid().ensure_same(gamma.grid())?;
    Ok(mu_with(f, &p_grid(f)?, gamma))
}

pub fn mu_with<T: Real>(f: &HullFn<T>, c: &CoeffGrid<T>, gamma: &PlanePath<T>) -> PlanePath<T> {
    let grid = *c.grid();
    let n = grid.n();
    let h = grid.step::<T>();
    let mut pts = vec![[T::zero(); 2]; 2 * n];
    for j in 0..n {
        let s2 = f.at_alpha(j).sin().powi(2);
        let mut acc = [T::zero(); 2];
        for (i, p) in c.row(j).iter().enumerate() {
            let g = gamma.at(2 * (j + i + 1));
            acc[0] += *p * g[0];
            acc[1] += *p * g[1];
        }
        pts[2 * j + 1] = [acc[0] * s2 * h, acc[1] * s2 * h];
    }
    for k in 0..n {
        let s2 = f.at_beta(k).sin().powi(2);
        let mut acc = [T::zero(); 2];
        for jj in k..k + n {
            let p = c.get(jj % n, k + n - jj);
            let g = gamma.at(2 * jj + 1);
            acc[0] += p * g[0];
            acc[1] += p * g[1];
        }
        pts[2 * k] = [acc[0] * s2 * h, acc[1] * s2 * h];
    }
    PlanePath { grid, pts }
}

/// Auxiliary loop `σ_η(α) = ½ ∫_α^{α+π} p_β(h) γ_η(β) dβ` and its signed
/// area `A_η = ½ ∮ σ × σ'`, with `σ' = −p_α(h) γ_η(α)` taken analytically.
#[derive(Clone, Debug)]
pub struct SigmaLoop<T> {
    pub sigma: PlanePath<T>,
    pub area: T,
}

pub fn sigma_path<T: Real>(p: &SpherePoint<T>, eta: &AngleField<T>) -> Result<SigmaLoop<T>> {
    let grid = *eta.grid();
    let nu = nu_h(p, grid)?;
    let gamma = gamma_from_phase(&nu, eta);
    let len = grid.lattice_len();
    let speed: Vec<T> = (0..=len).map(|m| hemisphere_speed(p, grid.lattice(m))).collect::<Result<_>>()?;
    let g: Vec<Vec2<T>> = (0..=len)
        .map(|m| {
            let q = gamma.at(m);
            [speed[m] * q[0], speed[m] * q[1]]
        })
        .collect();

    // F(x) = ∫₀^x p γ: Simpson across each β-cell, a quadratic rule for
    // the half cell ending at the α-node.
    let h = grid.step::<T>();
    let twelfth = h / T::lit(24.0);
    let sixth = h / T::lit(6.0);
    let mut big_f = vec![[T::zero(); 2]; len + 1];
    for k in 0..grid.n() {
        let (g0, g1, g2) = (g[2 * k], g[2 * k + 1], g[2 * k + 2]);
        let base = big_f[2 * k];
        for c in 0..2 {
            big_f[2 * k + 1][c] = base[c] + twelfth * (T::lit(5.0) * g0[c] + T::lit(8.0) * g1[c] - g2[c]);
            big_f[2 * k + 2][c] = base[c] + sixth * (g0[c] + T::lit(4.0) * g1[c] + g2[c]);
        }
    }
    let total = big_f[len];
    let half = T::lit(0.5);
    let pts: Vec<Vec2<T>> = (0..len).map(|m| [half * total[0] - big_f[m][0], half * total[1] - big_f[m][1]]).collect();
    let sigma = PlanePath { grid, pts };

    let w = grid.lattice_step::<T>();
    let area = w * kahan_sum((0..len).map(|m| {
        let q = gamma.at(m);
        cross(sigma.pts[m], [-speed[m] * q[0], -speed[m] * q[1]])
    }));
    Ok(SigmaLoop { sigma, area })
}

#[derive(Clone, Copy, Debug)]
pub struct FugledeReport<T> {
    pub c0: Vec2<T>,
    pub c1: Vec2<T>,
    pub w_sup: T,
    pub bound: T,
    pub area: T,
}

/// Arclength reparametrization of `σ_η` through `t = ν_h(α)`, its first two
/// Fourier coefficients and the sup of the remainder
/// `w(t) = c₀ + c₁e^{it} − σ̃(t)`; `bound = 5π(π − A_η)`.
pub fn fuglede_check<T: Real>(p: &SpherePoint<T>, eta: &AngleField<T>) -> Result<FugledeReport<T>> {
    let grid = *eta.grid();
    let nu = nu_h(p, grid)?;
    let loop_ = sigma_path(p, eta)?;
    let full = 2 * grid.lattice_len();
    let table: Vec<T> = (0..=full).map(|m| nu.at(m)).collect();
    let two_pi = T::PI() + T::PI();
    let samples: Vec<(T, Vec2<T>)> = (0..full)
        .map(|i| {
            let t = two_pi * T::from_usize_lossy(i) / T::from_usize_lossy(full);
            let m = table.partition_point(|v| *v <= t).saturating_sub(1).min(full - 1);
            let w = ((t - table[m]) / (table[m + 1] - table[m])).max(T::zero()).min(T::one());
            let (a, b) = (loop_.sigma.at(m), loop_.sigma.at(m + 1));
            (t, [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])])
        })
        .collect();
    let inv = T::one() / T::from_usize_lossy(full);
    let coef = |k: T| -> Vec2<T> {
        let re = kahan_sum(samples.iter().map(|(t, s)| {
            let (sn, cs) = (k * *t).sin_cos();
            s[0] * cs + s[1] * sn
        }));
        let im = kahan_sum(samples.iter().map(|(t, s)| {
            let (sn, cs) = (k * *t).sin_cos();
            s[1] * cs - s[0] * sn
        }));
        [re * inv, im * inv]
    };
    let c0 = coef(T::zero());
    let c1 = coef(T::one());
    let w_sup = samples
        .iter()
        .map(|(t, s)| {
            let (sn, cs) = t.sin_cos();
            let fit = [c0[0] + c1[0] * cs - c1[1] * sn, c0[1] + c1[0] * sn + c1[1] * cs];
            norm([fit[0] - s[0], fit[1] - s[1]])
        })
        .fold(T::zero(), T::max);
    let bound = T::lit(5.0) * T::PI() * (T::PI() - loop_.area);
    Ok(FugledeReport { c0, c1, w_sup, bound, area: loop_.area })
}

/// `ω_f(γ)` before and after shifting both `f` and `γ` by `shift` lattice
/// points (half β-steps).
pub fn basepoint_invariance<T: Real>(f: &HullFn<T>, gamma: &PlanePath<T>, shift: usize) -> Result<(T, T)> {
    let before = omega_action(f, gamma)?;
    let after = omega_action(&f.shift_lattice(shift), &gamma.shift_lattice(shift))?;
    Ok((before, after))
}
