//! Area on normed planes: five Jacobians, the John ellipse, and Finsler
//! masses of parametrized surfaces in the hull.

mod chart;
mod filling;

pub use chart::*;
pub use filling::coordinate_filling_area;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coeffs::fmt12;
use crate::error::{Error, Result};
use crate::pathspace::{cross, dot, Vec2};
use crate::scalar::{kahan_sum, Real};
use crate::simplex::nelder_mead;

pub const DEFAULT_DIRECTIONS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Definition {
    Mass,
    MassStar,
    BusemannHausdorff,
    HolmesThompson,
    InnerRiemannian,
}

impl Definition {
    pub const ALL: [Definition; 5] =
        [Self::Mass, Self::MassStar, Self::BusemannHausdorff, Self::HolmesThompson, Self::InnerRiemannian];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mass => "mass",
            Self::MassStar => "mass_star",
            Self::BusemannHausdorff => "busemann_hausdorff",
            Self::HolmesThompson => "holmes_thompson",
            Self::InnerRiemannian => "inner_riemannian",
        }
    }
}

impl std::str::FromStr for Definition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .find(|d| d.name() == s || (s == "m" && **d == Self::Mass))
            .copied()
            .ok_or_else(|| Error::Invalid(format!("unknown area definition {s:?}")))
    }
}

/// A (semi)norm on the plane known at `m` directions `θ_j = jπ/m`. Its unit
/// ball is taken to be the convex hull of the points `±u_j / N(u_j)`.
#[derive(Clone, Debug)]
pub struct Norm2D<T> {
    unit_norms: Vec<T>,
    provenance: String,
    ball: Option<Ball<T>>,
}

#[derive(Clone, Debug)]
struct Ball<T> {
    /// Hull vertices, counterclockwise.
    primal: Vec<Vec2<T>>,
    /// Polar vertices `ξ` with `⟨ξ, p⟩ = ⟨ξ, q⟩ = 1` on each hull edge `pq`.
    dual: Vec<Vec2<T>>,
}

impl<T: Real> Norm2D<T> {
    pub fn from_unit_norms(unit_norms: Vec<T>, provenance: impl Into<String>) -> Result<Self> {
        if unit_norms.len() < 2 || unit_norms.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::DegenerateNorm(format!("{} direction samples, need ≥ 2 finite nonnegative", unit_norms.len())));
        }
        let top = unit_norms.iter().copied().fold(T::zero(), T::max);
        let degenerate = !(top > T::zero()) || unit_norms.iter().any(|v| *v <= top * T::lit(1e-12));
        let ball = if degenerate { None } else { Some(Ball::new(&unit_norms)) };
        Ok(Self { unit_norms, provenance: provenance.into(), ball })
    }

    pub fn from_fn(m: usize, provenance: impl Into<String>, f: impl Fn(T, T) -> T) -> Result<Self> {
        let vals = (0..m)
            .map(|j| {
                let (s, c) = direction::<T>(j, m).sin_cos();
                f(c, s)
            })
            .collect();
        Self::from_unit_norms(vals, provenance)
    }

    pub fn euclidean(m: usize) -> Self {
        Self::from_fn(m, "euclidean", |x: T, y: T| x.hypot(y)).expect("valid")
    }

    pub fn l1(m: usize) -> Self {
        Self::from_fn(m, "l1", |x: T, y: T| x.abs() + y.abs()).expect("valid")
    }

    pub fn sup(m: usize) -> Self {
        Self::from_fn(m, "sup", |x: T, y: T| x.abs().max(y.abs())).expect("valid")
    }

    pub fn lp(m: usize, p: T) -> Result<Self> {
        if !(p >= T::one()) {
            return Err(Error::Domain { name: "p", value: p.as_f64() });
        }
        Self::from_fn(m, format!("l{p}"), |x: T, y: T| (x.abs().powf(p) + y.abs().powf(p)).powf(p.recip()))
    }

    /// `Σ w_i |⟨a_i, x⟩| + c |A x|` with random weights, directions and `A`.
    pub fn random(seed: u64, m: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..5);
        let terms: Vec<(f64, f64, f64)> =
            (0..k).map(|_| (rng.gen_range(0.05..1.0), rng.gen_range(0.0..std::f64::consts::PI), 0.0)).collect();
        let c = rng.gen_range(0.1..1.0);
        let a: [f64; 4] = [rng.gen_range(0.3..1.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(0.3..1.5)];
        Self::from_fn(m, format!("random:{seed}"), |x: T, y: T| {
            let (x, y) = (x.as_f64(), y.as_f64());
            let poly: f64 = terms.iter().map(|(w, t, _)| w * (x * t.cos() + y * t.sin()).abs()).sum();
            let ax = a[0] * x + a[1] * y;
            let ay = a[2] * x + a[3] * y;
            T::lit(poly + c * ax.hypot(ay))
        })
        .expect("positive")
    }

    pub fn len(&self) -> usize {
        self.unit_norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_norms.is_empty()
    }

    pub fn theta(&self, j: usize) -> T {
        direction(j, self.unit_norms.len())
    }

    pub fn unit_norms(&self) -> &[T] {
        &self.unit_norms
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn is_degenerate(&self) -> bool {
        self.ball.is_none()
    }

    fn ball(&self) -> Result<&Ball<T>> {
        self.ball.as_ref().ok_or_else(|| Error::DegenerateNorm(self.provenance.clone()))
    }

    /// Gauge of the hull ball at `x`.
    pub fn eval(&self, x: Vec2<T>) -> Result<T> {
        Ok(self.ball()?.dual.iter().map(|xi| dot(*xi, x)).fold(T::zero(), T::max))
    }

    /// Dual norm at the covector `xi`.
    pub fn dual(&self, xi: Vec2<T>) -> Result<T> {
        Ok(self.ball()?.primal.iter().map(|v| dot(xi, *v)).fold(T::zero(), T::max))
    }

    pub fn primal_vertices(&self) -> Result<&[Vec2<T>]> {
        Ok(&self.ball()?.primal)
    }

    pub fn dual_vertices(&self) -> Result<&[Vec2<T>]> {
        Ok(&self.ball()?.dual)
    }

    pub fn scaled(&self, s: T) -> Result<Self> {
        Self::from_unit_norms(self.unit_norms.iter().map(|v| *v * s).collect(), format!("{}*{s}", self.provenance))
    }

    /// Largest relative violation of the triangle inequality over `samples`
    /// random triples of sampled directions: with `u_j = a u_i + b u_k`,
    /// `a, b ≥ 0`, it checks `N(u_j) ≤ a N(u_i) + b N(u_k)`.
    pub fn triangle_defect(&self, samples: usize, seed: u64) -> T {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.unit_norms.len();
        let mut worst = T::zero();
        for _ in 0..samples {
            let mut idx = [rng.gen_range(0..m), rng.gen_range(0..m), rng.gen_range(0..m)];
            idx.sort_unstable();
            let [i, j, k] = idx;
            if i == j || j == k {
                continue;
            }
            let (ui, uj, uk) = (direction_vec::<T>(i, m), direction_vec::<T>(j, m), direction_vec::<T>(k, m));
            let det = cross(ui, uk);
            let a = cross(uj, uk) / det;
            let b = cross(ui, uj) / det;
            let rhs = a * self.unit_norms[i] + b * self.unit_norms[k];
            worst = worst.max((self.unit_norms[j] - rhs) / rhs);
        }
        worst
    }

    /// CSV `theta,N`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["theta", "N"])?;
        for (j, v) in self.unit_norms.iter().enumerate() {
            out.write_record([fmt12(self.theta(j)), fmt12(*v)])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn direction<T: Real>(j: usize, m: usize) -> T {
    T::PI() * T::from_usize_lossy(j) / T::from_usize_lossy(m)
}

fn direction_vec<T: Real>(j: usize, m: usize) -> Vec2<T> {
    let (s, c) = direction::<T>(j, m).sin_cos();
    [c, s]
}

impl<T: Real> Ball<T> {
    fn new(unit_norms: &[T]) -> Self {
        let m = unit_norms.len();
        let mut pts: Vec<Vec2<T>> = Vec::with_capacity(2 * m);
        for sign in [T::one(), -T::one()] {
            for (j, v) in unit_norms.iter().enumerate() {
                let (s, c) = direction::<T>(j, m).sin_cos();
                pts.push([sign * c / *v, sign * s / *v]);
            }
        }
        let primal = convex_hull(pts);
        let k = primal.len();
        let dual = (0..k)
            .map(|i| {
                let (p, q) = (primal[i], primal[(i + 1) % k]);
                let det = cross(p, q);
                [(q[1] - p[1]) / det, (p[0] - q[0]) / det]
            })
            .collect();
        Self { primal, dual }
    }
}

/// Andrew's monotone chain; counterclockwise, collinear points dropped.
fn convex_hull<T: Real>(mut pts: Vec<Vec2<T>>) -> Vec<Vec2<T>> {
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    let turn = |o: Vec2<T>, a: Vec2<T>, b: Vec2<T>| cross([a[0] - o[0], a[1] - o[1]], [b[0] - o[0], b[1] - o[1]]);
    let mut hull: Vec<Vec2<T>> = Vec::with_capacity(pts.len() + 1);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2<T>>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], *p) <= T::zero() {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

fn polygon_area<T: Real>(v: &[Vec2<T>]) -> T {
    let k = v.len();
    T::lit(0.5) * kahan_sum((0..k).map(|i| cross(v[i], v[(i + 1) % k])))
}

fn max_pair_cross<T: Real>(v: &[Vec2<T>]) -> T {
    let mut best = T::zero();
    for (i, a) in v.iter().enumerate() {
        for b in &v[i + 1..] {
            best = best.max(cross(*a, *b).abs());
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse<T> {
    pub a: T,
    pub b: T,
    pub phi: T,
    pub area: T,
}

impl<T: Real> Ellipse<T> {
    pub fn point(&self, t: T) -> Vec2<T> {
        let (s, c) = t.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        let (x, y) = (self.a * c, self.b * s);
        [cp * x - sp * y, sp * x + cp * y]
    }
}

/// Largest semi-axis `a` with `b = κa` at orientation `φ` whose ellipse lies
/// in the ball: the support function must stay ≤ 1 on every dual vertex.
fn john_scale<T: Real>(dual: &[Vec2<T>], phi: T, kappa: T) -> T {
    let (s, c) = phi.sin_cos();
    let worst = dual
        .iter()
        .map(|xi| {
            let u = xi[0] * c + xi[1] * s;
            let v = -xi[0] * s + xi[1] * c;
            u * u + kappa * kappa * v * v
        })
        .fold(T::zero(), T::max);
    worst.sqrt().recip()
}

/// Maximal-area origin-centered ellipse in the unit ball.
pub fn john_ellipse<T: Real>(norm: &Norm2D<T>) -> Result<Ellipse<T>> {
    let dual = &norm.ball()?.dual;
    let area = |phi: T, kappa: T| {
        let a = john_scale(dual, phi, kappa);
        a * a * kappa
    };
    let mut best = (T::zero(), T::one(), T::zero());
    for i in 0..36 {
        let phi = T::PI() * T::from_usize_lossy(i) / T::lit(36.0);
        for k in 1..=10 {
            let kappa = T::lit(k as f64 / 10.0);
            let v = area(phi, kappa);
            if v > best.0 {
                best = (v, kappa, phi);
            }
        }
    }
    let res = nelder_mead(
        |x: &[T]| -area(x[0], x[1].exp()),
        &[best.2, best.1.ln()],
        &[T::PI() / T::lit(72.0), T::lit(0.05)],
        T::lit(1e-10),
        2000,
    );
    let (mut phi, kappa) = (res.x[0], res.x[1].exp());
    let a0 = john_scale(dual, phi, kappa);
    let (mut a, mut b) = (a0, a0 * kappa);
    if b > a {
        std::mem::swap(&mut a, &mut b);
        phi += T::FRAC_PI_2();
    }
    phi = phi - T::PI() * (phi / T::PI()).floor();
    Ok(Ellipse { a, b, phi, area: T::PI() * a * b })
}

/// Jacobian of the area definition at the identity map: the density of
/// `μ^def` against Lebesgue measure. A degenerate seminorm gives 0.
pub fn jacobian<T: Real>(norm: &Norm2D<T>, def: Definition) -> Result<T> {
    let Some(ball) = norm.ball.as_ref() else {
        return Ok(T::zero());
    };
    Ok(match def {
        Definition::Mass => max_pair_cross(&ball.primal).recip(),
        Definition::MassStar => max_pair_cross(&ball.dual),
        Definition::BusemannHausdorff => T::PI() / polygon_area(&ball.primal),
        Definition::HolmesThompson => polygon_area(&ball.dual) / T::PI(),
        Definition::InnerRiemannian => T::PI() / john_ellipse(norm)?.area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn l1_values() {
        let n = Norm2D::<f64>::l1(DEFAULT_DIRECTIONS);
        let want = [1.0, 2.0, PI / 2.0, 4.0 / PI, 2.0];
        for (d, w) in Definition::ALL.iter().zip(want) {
            let v = jacobian(&n, *d).unwrap();
            assert!((v - w).abs() < 1e-6, "{d:?} {v}");
        }
        let e = john_ellipse(&n).unwrap();
        assert!((e.a - FRAC_1_SQRT_2).abs() < 1e-4 && (e.b - FRAC_1_SQRT_2).abs() < 1e-4);
    }

    #[test]
    fn euclidean_and_sup() {
        let n = Norm2D::<f64>::euclidean(DEFAULT_DIRECTIONS);
        for d in Definition::ALL {
            assert!((jacobian(&n, d).unwrap() - 1.0).abs() < 2e-4, "{d:?}");
        }
        let e = john_ellipse(&Norm2D::<f64>::sup(64)).unwrap();
        assert!((e.area - PI).abs() < 1e-6);
        assert!((n.eval([3.0, 4.0]).unwrap() - 5.0).abs() < 1e-3);
    }

    #[test]
    fn degenerate_seminorm() {
        let n = Norm2D::<f64>::from_fn(16, "strip", |x, _| x.abs()).unwrap();
        assert!(n.is_degenerate());
        assert_eq!(jacobian(&n, Definition::HolmesThompson).unwrap(), 0.0);
        assert!(john_ellipse(&n).is_err());
        assert!(Norm2D::<f64>::from_unit_norms(vec![1.0, -1.0], "bad").is_err());
    }

    #[test]
    fn names_round_trip() {
        for d in Definition::ALL {
            assert_eq!(d.name().parse::<Definition>().unwrap(), d);
        }
    }
}
