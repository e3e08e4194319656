//! Coefficients of the two-form: `p`, `e`, `q`, their derivatives and the
//! L¹ functional `‖p(f)‖₁`.
//!
//! With `a = β − α`, `x = f(α)`, `y = f(β)`:
//!
//! ```text
//! e(a, x, y) = 1 − (cos²x + cos²y − 2 cos a cos x cos y) / sin²a
//! p(a, x, y) = e / (sin²x sin²y)
//! q_{α,β}    = e / sin²y = sin²x · p
//! ```
//!
//! `e` is the squared height above the equator of the spherical triangle
//! with side `a` and the two sides `x`, `y` meeting at its apex.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hull::{HullFn, SpherePoint};
use crate::quadrature::{integrate_rows, Grid};
use crate::scalar::Real;

const DOMAIN_TOL: f64 = 1e-12;

fn check_domain<T: Real>(name: &'static str, v: T) -> Result<()> {
    let r = v / T::PI();
    if (r - r.round()).abs() * T::PI() < T::lit(DOMAIN_TOL) || !v.is_finite() {
        return Err(Error::Domain { name, value: v.as_f64() });
    }
    Ok(())
}

#[inline]
fn e_from_cos<T: Real>(ca: T, sa2: T, cx: T, cy: T) -> T {
    (T::one() - (cx * cx + cy * cy - T::lit(2.0) * ca * cx * cy) / sa2).max(T::zero())
}

fn validated<T: Real>(a: T, x: T, y: T) -> Result<()> {
    check_domain("a", a)?;
    check_domain("x", x)?;
    check_domain("y", y)
}

/// Squared height `e(a, x, y)`, clamped at zero.
pub fn e_scalar<T: Real>(a: T, x: T, y: T) -> Result<T> {
    validated(a, x, y)?;
    let sa = a.sin();
    Ok(e_from_cos(a.cos(), sa * sa, x.cos(), y.cos()))
}

/// The coefficient `p(a, x, y) ≥ 0`.
pub fn p_scalar<T: Real>(a: T, x: T, y: T) -> Result<T> {
    let e = e_scalar(a, x, y)?;
    let (sx, sy) = (x.sin(), y.sin());
    Ok(e / (sx * sx * sy * sy))
}

/// `sqrt(e)`: height of the apex above the great circle through the base.
pub fn height<T: Real>(a: T, x: T, y: T) -> Result<T> {
    Ok(e_scalar(a, x, y)?.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PDerivatives<T> {
    pub p_x: T,
    pub p_y: T,
    pub p_xx: T,
    pub p_xy: T,
    pub p_yy: T,
}

/// Closed-form first and second partial derivatives of `p` in `x` and `y`.
pub fn p_derivatives<T: Real>(a: T, x: T, y: T) -> Result<PDerivatives<T>> {
    validated(a, x, y)?;
    let two = T::lit(2.0);
    let (ca, sa) = (a.cos(), a.sin());
    let (cx, sx) = (x.cos(), x.sin());
    let (cy, sy) = (y.cos(), y.sin());
    let sa2 = sa * sa;
    let first = |cu: T, su: T, cv: T, sv: T| two * (ca * cu - cv) * (ca - cu * cv) / (sa2 * su.powi(3) * sv * sv);
    let second = |cu: T, su: T, cv: T, sv: T| {
        two * (ca * cu * cv * (T::lit(5.0) + cu * cu) - (T::one() + two * cu * cu) * (ca * ca + cv * cv))
            / (sa2 * su.powi(4) * sv * sv)
    };
    let p_xy = two * (ca * (T::one() + cx * cx) * (T::one() + cy * cy) - two * cx * cy * (T::one() + ca * ca))
        / (sa2 * sx.powi(3) * sy.powi(3));
    Ok(PDerivatives {
        p_x: first(cx, sx, cy, sy),
        p_y: first(cy, sy, cx, sx),
        p_xx: second(cx, sx, cy, sy),
        p_xy,
        p_yy: second(cy, sy, cx, sx),
    })
}

/// `p_α(h) = sin d / sin²(h_α)`, the density of the product form on the
/// hemisphere and the speed of its tangent circle.
pub fn hemisphere_speed<T: Real>(p: &SpherePoint<T>, alpha: T) -> Result<T> {
    if !(p.d > T::zero()) {
        return Err(Error::DegenerateSphere(p.d.as_f64()));
    }
    let c = p.d.cos() * (alpha - p.tau).cos();
    Ok(p.d.sin() / (T::one() - c * c))
}

/// Band-layout matrix of `p_{α,β}(f)`.
///
/// Row `j` is the α-node `α_j`; column `l − 1` (for `l = 1..=n`) is the
/// point `β = α_j + (l − ½)π/n`, i.e. β-node `j + l` of the extended line.
/// Every entry is `p` of a pair with `α < β < α + π`, and by periodicity of
/// `p` in β the row lists each β-node of `[0, π)` exactly once.
#[derive(Clone, Debug)]
pub struct CoeffGrid<T> {
    grid: Grid,
    band: Vec<T>,
}

impl<T: Real> CoeffGrid<T> {
    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Entry for α-node `j` and offset `l ∈ 1..=n`.
    #[inline]
    pub fn get(&self, j: usize, l: usize) -> T {
        self.band[j * self.grid.n() + l - 1]
    }

    /// Row `j`, indexed by `l − 1`.
    #[inline]
    pub fn row(&self, j: usize) -> &[T] {
        let n = self.grid.n();
        &self.band[j * n..(j + 1) * n]
    }

    pub fn max_entry(&self) -> T {
        self.band.iter().copied().fold(T::zero(), T::max)
    }

    pub fn min_entry(&self) -> T {
        self.band.iter().copied().fold(T::infinity(), T::min)
    }

    /// Builds the band from an arbitrary coefficient rule `(a, x, y) ↦ p`.
    /// Slow path used by invariant checks.
    pub fn build_with(f: &HullFn<T>, rule: impl Fn(T, T, T) -> Result<T> + Sync) -> Result<Self> {
        let grid = *f.grid();
        let n = grid.n();
        let h = grid.step::<T>();
        let rows: Vec<Result<Vec<T>>> = (0..n)
            .into_par_iter()
            .map(|j| {
                (1..=n)
                    .map(|l| {
                        let a = (T::from_usize_lossy(l) - T::lit(0.5)) * h;
                        rule(a, f.at_alpha(j), f.at_beta(j + l))
                    })
                    .collect()
            })
            .collect();
        let mut band = Vec::with_capacity(n * n);
        for r in rows {
            band.extend(r?);
        }
        Ok(Self { grid, band })
    }

    /// CSV `alpha,beta,p` over the pairs with `0 < α < β < π`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["alpha", "beta", "p"])?;
        let n = self.grid.n();
        for j in 0..n {
            for l in 1..n - j {
                out.write_record([
                    fmt12(self.grid.alpha::<T>(j)),
                    fmt12(self.grid.beta::<T>(j + l)),
                    fmt12(self.get(j, l)),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt12<T: Real>(v: T) -> String {
    crate::io::fmt_sig(v.as_f64())
}

/// `p_{α,β}(f)` on every band pair of the grid.
pub fn p_grid<T: Real>(f: &HullFn<T>) -> Result<CoeffGrid<T>> {
    let dist = f.dist_to_boundary();
    if !(dist > T::zero()) {
        return Err(Error::TouchesBoundary(dist.as_f64()));
    }
    let grid = *f.grid();
    let n = grid.n();
    let h = grid.step::<T>();
    let offsets: Vec<(T, T)> = (1..=n)
        .map(|l| {
            let (s, c) = ((T::from_usize_lossy(l) - T::lit(0.5)) * h).sin_cos();
            (c, s * s)
        })
        .collect();
    let beta: Vec<(T, T)> = (0..2 * n)
        .map(|k| {
            let (s, c) = f.at_beta(k).sin_cos();
            (c, s * s)
        })
        .collect();
    let mut band = vec![T::zero(); n * n];
    band.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        let (sx, cx) = f.at_alpha(j).sin_cos();
        let sx2 = sx * sx;
        for (l, slot) in row.iter_mut().enumerate() {
            let (ca, sa2) = offsets[l];
            let (cy, sy2) = beta[j + l + 1];
            *slot = e_from_cos(ca, sa2, cx, cy) / (sx2 * sy2);
        }
    });
    Ok(CoeffGrid { grid, band })
}

/// `‖p(f)‖₁ = ∬_{0<α<β<π} p_{α,β}(f)`.
pub fn p_l1_norm<T: Real>(f: &HullFn<T>) -> Result<T> {
    Ok(l1_of(&p_grid(f)?))
}

pub fn l1_of<T: Real>(c: &CoeffGrid<T>) -> T {
    let n = c.grid().n();
    let rows: Vec<T> = (0..n).map(|j| c.row(j).iter().copied().sum()).collect();
    integrate_rows(c.grid(), &rows)
}
