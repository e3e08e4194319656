use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{jacobian, Definition, Norm2D};
use crate::coeffs::p_grid;
use crate::error::{Error, Result};
use crate::hull::{random_hull_point, HullFn, SpherePoint};
use crate::io::fmt_sig;
use crate::quadrature::{integrate_rows, Grid};
use crate::scalar::{circle_dist, kahan_sum, Real};

/// Directions sampled by [`metric_derivative`].
pub const CHART_DIRECTIONS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis<T> {
    pub lo: T,
    pub hi: T,
    pub nodes: usize,
    /// Periodic axes omit `hi`; others include both ends.
    pub periodic: bool,
}

impl<T: Real> Axis<T> {
    pub fn closed(lo: T, hi: T, nodes: usize) -> Self {
        Self { lo, hi, nodes, periodic: false }
    }

    pub fn periodic(lo: T, hi: T, nodes: usize) -> Self {
        Self { lo, hi, nodes, periodic: true }
    }

    pub fn step(&self) -> T {
        let cells = if self.periodic { self.nodes } else { self.nodes - 1 };
        (self.hi - self.lo) / T::from_usize_lossy(cells)
    }

    pub fn param(&self, i: usize) -> T {
        self.lo + self.step() * T::from_usize_lossy(i)
    }

    /// Trapezoid weight (uniform on periodic axes).
    pub fn weight(&self, i: usize) -> T {
        let s = self.step();
        if !self.periodic && (i == 0 || i + 1 == self.nodes) {
            s * T::lit(0.5)
        } else {
            s
        }
    }

    fn contains(&self, x: T) -> bool {
        let slack = self.step() * T::lit(1e-9);
        self.periodic || (x >= self.lo - slack && x <= self.hi + slack)
    }

    /// Bracketing nodes and the weight of the upper one.
    fn locate(&self, x: T) -> (usize, usize, T) {
        let u = (x - self.lo) / self.step();
        if self.periodic {
            let fl = u.floor();
            let w = u - fl;
            let i = fl.to_i64().unwrap_or(0).rem_euclid(self.nodes as i64) as usize;
            (i, (i + 1) % self.nodes, w)
        } else {
            let last = T::from_usize_lossy(self.nodes - 1);
            let u = u.max(T::zero()).min(last);
            let i = u.floor().to_usize().unwrap_or(0).min(self.nodes - 2);
            (i, i + 1, u - T::from_usize_lossy(i))
        }
    }

    fn validate(&self) -> Result<()> {
        let min = if self.periodic { 3 } else { 2 };
        if self.nodes < min || !(self.hi > self.lo) {
            return Err(Error::Invalid(format!("bad chart axis {:?}..{:?} with {} nodes", self.lo, self.hi, self.nodes)));
        }
        Ok(())
    }
}

/// A map from a 2-D parameter box into the hull, sampled at the nodes.
#[derive(Clone, Debug)]
pub struct SurfaceChart<T> {
    pub name: String,
    axes: [Axis<T>; 2],
    grid: Grid,
    values: Vec<HullFn<T>>,
}

impl<T: Real> SurfaceChart<T> {
    pub fn from_fn(name: impl Into<String>, axes: [Axis<T>; 2], grid: Grid, f: impl Fn(T, T) -> HullFn<T> + Sync) -> Result<Self> {
        axes[0].validate()?;
        axes[1].validate()?;
        let values: Vec<HullFn<T>> = (0..axes[0].nodes * axes[1].nodes)
            .into_par_iter()
            .map(|k| f(axes[0].param(k / axes[1].nodes), axes[1].param(k % axes[1].nodes)))
            .collect();
        for v in &values {
            grid.ensure_same(v.grid())?;
        }
        Ok(Self { name: name.into(), axes, grid, values })
    }

    pub fn axes(&self) -> &[Axis<T>; 2] {
        &self.axes
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn node(&self, i0: usize, i1: usize) -> &HullFn<T> {
        &self.values[i0 * self.axes[1].nodes + i1]
    }

    pub fn param_n(&self) -> String {
        format!("{}x{}", self.axes[0].nodes, self.axes[1].nodes)
    }

    fn corners(&self, x: [T; 2]) -> [(usize, T); 4] {
        let (a0, a1, w0) = self.axes[0].locate(x[0]);
        let (b0, b1, w1) = self.axes[1].locate(x[1]);
        let n1 = self.axes[1].nodes;
        let one = T::one();
        [
            (a0 * n1 + b0, (one - w0) * (one - w1)),
            (a0 * n1 + b1, (one - w0) * w1),
            (a1 * n1 + b0, w0 * (one - w1)),
            (a1 * n1 + b1, w0 * w1),
        ]
    }

    /// Bilinear interpolation of the node values at a parameter point.
    pub fn value_at(&self, x: [T; 2]) -> HullFn<T> {
        let c = self.corners(x);
        let lat = (0..self.grid.lattice_len())
            .map(|m| c.iter().map(|(k, w)| *w * self.values[*k].lattice_values()[m]).fold(T::zero(), |s, v| s + v))
            .collect();
        HullFn::from_lattice(self.grid, lat).expect("lattice length")
    }

    /// `sup_dist` between the interpolated values at two parameter points.
    fn sup_between(&self, x: [T; 2], y: [T; 2]) -> T {
        let (cx, cy) = (self.corners(x), self.corners(y));
        let mut worst = T::zero();
        for m in 0..self.grid.lattice_len() {
            let mut d = T::zero();
            for (k, w) in &cx {
                d += *w * self.values[*k].lattice_values()[m];
            }
            for (k, w) in &cy {
                d -= *w * self.values[*k].lattice_values()[m];
            }
            worst = worst.max(d.abs());
        }
        worst
    }

    /// Whether node `(i0, i1)` lies on a non-periodic edge.
    pub fn on_boundary(&self, i0: usize, i1: usize) -> bool {
        [(i0, 0), (i1, 1)].iter().any(|&(i, a)| !self.axes[a].periodic && (i == 0 || i + 1 == self.axes[a].nodes))
    }

    /// Partial derivative along `axis` at a node, as lattice samples.
    pub fn tangent(&self, i0: usize, i1: usize, axis: usize) -> Vec<T> {
        let ax = &self.axes[axis];
        let i = if axis == 0 { i0 } else { i1 };
        let at = |j: usize| if axis == 0 { self.node(j, i1) } else { self.node(i0, j) };
        let h = ax.step();
        let len = self.grid.lattice_len();
        let lin = |terms: &[(usize, T)], scale: T| -> Vec<T> {
            (0..len).map(|m| terms.iter().map(|(j, c)| *c * at(*j).lattice_values()[m]).fold(T::zero(), |s, v| s + v) * scale).collect()
        };
        let half = T::lit(0.5) / h;
        let (one, three, four) = (T::one(), T::lit(3.0), T::lit(4.0));
        if ax.periodic {
            let n = ax.nodes;
            lin(&[((i + 1) % n, one), ((i + n - 1) % n, -one)], half)
        } else if i == 0 {
            lin(&[(0, -three), (1, four), (2, -one)], half)
        } else if i + 1 == ax.nodes {
            lin(&[(i, three), (i - 1, -four), (i - 2, one)], half)
        } else {
            lin(&[(i + 1, one), (i - 1, -one)], half)
        }
    }
}

/// Approximate metric derivative at a node, sampled at `m` directions of
/// the parameter plane: `sup_dist(chart(x + t·u), chart(x)) / t` with `t`
/// the smaller parameter cell. Where `x + t·u` leaves the box the step is
/// taken along `−u` instead (`N(−u) = N(u)`), and the provenance says so.
pub fn metric_derivative<T: Real>(chart: &SurfaceChart<T>, i0: usize, i1: usize, m: usize) -> Result<Norm2D<T>> {
    let ax = chart.axes();
    let t = ax[0].step().min(ax[1].step());
    let x = [ax[0].param(i0), ax[1].param(i1)];
    let inside = |p: [T; 2]| ax[0].contains(p[0]) && ax[1].contains(p[1]);
    let mut reversed = false;
    let vals = (0..m)
        .map(|j| {
            let (s, c) = (T::PI() * T::from_usize_lossy(j) / T::from_usize_lossy(m)).sin_cos();
            let fwd = [x[0] + t * c, x[1] + t * s];
            let bwd = [x[0] - t * c, x[1] - t * s];
            if inside(fwd) {
                chart.sup_between(fwd, x) / t
            } else if inside(bwd) {
                reversed = true;
                chart.sup_between(x, bwd) / t
            } else {
                T::zero()
            }
        })
        .collect();
    let tag = if reversed { "sampled from chart (reversed at edge)" } else { "sampled from chart" };
    Norm2D::from_unit_norms(vals, tag)
}

/// `Σ_nodes w · J_def(md)` over the parameter box.
pub fn finsler_mass<T: Real>(chart: &SurfaceChart<T>, def: Definition) -> Result<T> {
    finsler_mass_with(chart, def, CHART_DIRECTIONS)
}

pub fn finsler_mass_with<T: Real>(chart: &SurfaceChart<T>, def: Definition, m: usize) -> Result<T> {
    let ax = *chart.axes();
    let terms: Vec<T> = (0..ax[0].nodes * ax[1].nodes)
        .into_par_iter()
        .map(|k| {
            let (i0, i1) = (k / ax[1].nodes, k % ax[1].nodes);
            let md = metric_derivative(chart, i0, i1, m)?;
            Ok(ax[0].weight(i0) * ax[1].weight(i1) * jacobian(&md, def)?)
        })
        .collect::<Result<_>>()?;
    Ok(kahan_sum(terms))
}

/// `∫ ω_f(∂₀f ∧ ∂₁f)` over the parameter box; the inner integral is the
/// band rule of `p_{α,β}(f)(v(α)w(β) − v(β)w(α))`.
pub fn omega_surface_integral<T: Real>(chart: &SurfaceChart<T>) -> Result<T> {
    let ax = *chart.axes();
    let n = chart.grid().n();
    let len = chart.grid().lattice_len();
    let terms: Vec<T> = (0..ax[0].nodes * ax[1].nodes)
        .into_par_iter()
        .map(|k| {
            let (i0, i1) = (k / ax[1].nodes, k % ax[1].nodes);
            let f = chart.node(i0, i1);
            let c = p_grid(f)?;
            let v = chart.tangent(i0, i1, 0);
            let w = chart.tangent(i0, i1, 1);
            let ext = |x: &[T], m: usize| if m < len { x[m] } else { -x[m - len] };
            let rows: Vec<T> = (0..n)
                .map(|j| {
                    let a = 2 * j + 1;
                    let (va, wa) = (v[a], w[a]);
                    c.row(j)
                        .iter()
                        .enumerate()
                        .map(|(i, p)| {
                            let b = 2 * (j + i + 1);
                            *p * (va * ext(&w, b) - ext(&v, b) * wa)
                        })
                        .fold(T::zero(), |s, x| s + x)
                })
                .collect();
            Ok(ax[0].weight(i0) * ax[1].weight(i1) * integrate_rows(chart.grid(), &rows))
        })
        .collect::<Result<_>>()?;
    Ok(kahan_sum(terms))
}

/// The cone `f_{r,α} = (π/2)(1 − r) + r·d(·, α)` over `r ∈ r_range`,
/// `α ∈ [0, 2π)`. With `4n` divisible by `n_alpha` the vertices `α` fall on
/// the lattice.
pub fn cone_chart<T: Real>(grid: Grid, n_r: usize, n_alpha: usize, r_range: (T, T)) -> Result<SurfaceChart<T>> {
    if r_range.0 < T::zero() || r_range.1 > T::one() {
        return Err(Error::Invalid("cone radius outside [0, 1]".into()));
    }
    let two_pi = T::PI() + T::PI();
    let axes = [Axis::closed(r_range.0, r_range.1, n_r), Axis::periodic(T::zero(), two_pi, n_alpha)];
    SurfaceChart::from_fn("cone", axes, grid, |r, alpha| {
        HullFn::from_fn(grid, |x| T::FRAC_PI_2() * (T::one() - r) + r * circle_dist(x, alpha))
    })
}

/// Polar cap `{d ≥ r}` of the hemisphere with axes `(τ, d)`.
pub fn cap_chart<T: Real>(grid: Grid, r: T, n_tau: usize, n_d: usize) -> Result<SurfaceChart<T>> {
    if !(r >= T::zero() && r < T::FRAC_PI_2()) {
        return Err(Error::Domain { name: "cap radius", value: r.as_f64() });
    }
    let two_pi = T::PI() + T::PI();
    let axes = [Axis::periodic(T::zero(), two_pi, n_tau), Axis::closed(r, T::FRAC_PI_2(), n_d)];
    SurfaceChart::from_fn("cap", axes, grid, |tau, d| {
        HullFn::sphere_point(&SpherePoint::new(tau, d.min(T::FRAC_PI_2())).expect("in range"), grid)
    })
}

/// Interior bump for [`perturbed_cap_chart`]: the chart value is
/// `(1 − λ)h + λg` with `g` a random hull point and
/// `λ = A·ψ(d)·(1 + κ cos(τ − τ₀) cos²d)`, `ψ` vanishing on `d = r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapBump<T> {
    pub seed: u64,
    pub amplitude: T,
    pub kappa: T,
    pub tau0: T,
    pub roughness: T,
}

impl<T: Real> CapBump<T> {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cab0);
        Self {
            seed,
            amplitude: T::lit(rng.gen_range(0.1..0.3)),
            kappa: T::lit(rng.gen_range(-0.5..0.5)),
            tau0: T::lit(rng.gen_range(0.0..std::f64::consts::TAU)),
            roughness: T::lit(0.3),
        }
    }

    fn weight(&self, r: T, tau: T, d: T) -> T {
        let s = (T::FRAC_PI_2() * (d - r) / (T::FRAC_PI_2() - r)).sin();
        let c = d.cos();
        self.amplitude * s * s * (T::one() + self.kappa * (tau - self.tau0).cos() * c * c)
    }
}

pub fn perturbed_cap_chart<T: Real>(grid: Grid, r: T, n_tau: usize, n_d: usize, bump: &CapBump<T>) -> Result<SurfaceChart<T>> {
    if !(bump.amplitude >= T::zero() && bump.kappa.abs() < T::one() && bump.amplitude * (T::one() + bump.kappa.abs()) <= T::one()) {
        return Err(Error::Invalid(format!("bump {bump:?} leaves [0, 1]")));
    }
    let g = random_hull_point(bump.seed, bump.roughness, T::lit(0.3), grid)?;
    let base = cap_chart(grid, r, n_tau, n_d)?;
    let axes = *base.axes();
    let chart = SurfaceChart::from_fn("perturbed cap", axes, grid, |tau, d| {
        let i0 = ((tau - axes[0].lo) / axes[0].step()).round().to_usize().unwrap_or(0);
        let i1 = ((d - axes[1].lo) / axes[1].step()).round().to_usize().unwrap_or(0);
        let h = base.node(i0, i1);
        let lam = bump.weight(r, tau, d);
        if lam == T::zero() {
            h.clone()
        } else {
            h.lerp(&g, lam).expect("same grid")
        }
    })?;
    let floor = T::lit(0.25);
    for (k, v) in chart.values.iter().enumerate() {
        if !v.is_member(T::lit(crate::hull::MEMBER_TOL)) || v.dist_to_boundary() < floor {
            return Err(Error::Invalid(format!("perturbed cap node {k} leaves the hull interior")));
        }
    }
    Ok(chart)
}

#[derive(Clone, Debug)]
pub struct MassRow {
    pub chart: String,
    pub definition: Definition,
    pub value: f64,
    pub grid_n: usize,
    pub param_n: String,
}

pub fn mass_table<T: Real>(chart: &SurfaceChart<T>) -> Result<Vec<MassRow>> {
    Definition::ALL
        .iter()
        .map(|d| {
            Ok(MassRow {
                chart: chart.name.clone(),
                definition: *d,
                value: finsler_mass(chart, *d)?.as_f64(),
                grid_n: chart.grid().n(),
                param_n: chart.param_n(),
            })
        })
        .collect()
}

/// CSV `chart,definition,value,grid_n,param_n`.
pub fn write_mass_csv<W: Write>(rows: &[MassRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["chart", "definition", "value", "grid_n", "param_n"])?;
    for r in rows {
        out.write_record([r.chart.clone(), r.definition.name().into(), fmt_sig(r.value), r.grid_n.to_string(), r.param_n.clone()])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cone_metric_derivative() {
        let g = Grid::new(32).unwrap();
        let c = cone_chart::<f64>(g, 17, 128, (0.0, 1.0)).unwrap();
        let md = metric_derivative(&c, 8, 5, CHART_DIRECTIONS).unwrap();
        let r = c.axes()[0].param(8);
        for j in 0..CHART_DIRECTIONS {
            let (s, co) = md.theta(j).sin_cos();
            let want = PI / 2.0 * co.abs() + r * s.abs();
            assert!((md.unit_norms()[j] - want).abs() < 0.05 * want, "{j} {} {want}", md.unit_norms()[j]);
        }
        assert!(metric_derivative(&c, 0, 3, 16).unwrap().is_degenerate());
        assert!(metric_derivative(&c, 16, 3, 16).unwrap().provenance().contains("reversed"));
    }

    #[test]
    fn zero_bump_is_identity() {
        let g = Grid::new(32).unwrap();
        let bump = CapBump { seed: 1, amplitude: 0.0, kappa: 0.2, tau0: 0.0, roughness: 0.3 };
        let a = cap_chart::<f64>(g, 0.3, 8, 5).unwrap();
        let b = perturbed_cap_chart(g, 0.3, 8, 5, &bump).unwrap();
        for k in 0..40 {
            assert_eq!(a.values[k], b.values[k]);
        }
    }
}
