//! Half-period grids and the two quadrature rules used everywhere else.
//!
//! A [`Grid`] with `n` nodes carries two interleaved node families on
//! `[0, π)`: β-nodes `kπ/n` and α-nodes `(k + ½)π/n`. Together they form the
//! *lattice* of `2n` points spaced `π/(2n)` apart; lattice index `2k` is
//! β-node `k` and `2k + 1` is α-node `k`.
//!
//! Double integrals over the triangle `0 < α < β < π` are evaluated in the
//! band form `½ ∫₀^π ∫_α^{α+π} F dβ dα`, which equals the triangle integral
//! whenever `F(α, β) = F(β, α + π)`. Every integrand in this crate has that
//! symmetry. For a fixed α-node the window `(α, α + π)` contains exactly the
//! `n` β-nodes `β_{j+1}, …, β_{j+n}`, each in the middle of its cell, so the
//! inner sum is a midpoint rule and the diagonal is never touched.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{kahan_sum, KahanSum, Real};

/// Smallest grid accepted by the quadrature rules.
pub const MIN_NODES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::GridTooSmall { n, min: MIN_NODES });
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn step<T: Real>(&self) -> T {
        T::PI() / T::from_usize_lossy(self.n)
    }

    /// Number of lattice points on `[0, π)`.
    #[inline]
    pub fn lattice_len(&self) -> usize {
        2 * self.n
    }

    #[inline]
    pub fn lattice_step<T: Real>(&self) -> T {
        T::PI() / T::from_usize_lossy(2 * self.n)
    }

    /// Position of lattice point `m`; any `m` is allowed.
    #[inline]
    pub fn lattice<T: Real>(&self, m: usize) -> T {
        T::from_usize_lossy(m) * self.lattice_step::<T>()
    }

    #[inline]
    pub fn alpha<T: Real>(&self, j: usize) -> T {
        self.lattice(2 * j + 1)
    }

    #[inline]
    pub fn beta<T: Real>(&self, k: usize) -> T {
        self.lattice(2 * k)
    }

    pub fn alpha_nodes<T: Real>(&self) -> Vec<T> {
        (0..self.n).map(|j| self.alpha(j)).collect()
    }

    pub fn beta_nodes<T: Real>(&self) -> Vec<T> {
        (0..self.n).map(|k| self.beta(k)).collect()
    }

    pub fn lattice_nodes<T: Real>(&self) -> Vec<T> {
        (0..self.lattice_len()).map(|m| self.lattice(m)).collect()
    }

    /// Grid with twice as many nodes; lattice point `m` maps to `2m`.
    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n }
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch(self.n, other.n));
        }
        Ok(())
    }
}

/// Band-form midpoint rule for `∬_{0<α<β<π} F`.
///
/// `f(j, k)` is the integrand at α-node `j` and β-node `k`, where
/// `k ∈ j+1 ..= j+n`; indices `k ≥ n` denote the point `kπ/n ≥ π` and the
/// caller applies its own extension rule. Rows are evaluated in parallel and
/// reduced sequentially, so the result does not depend on thread count.
pub fn integrate_triangle<T, F>(grid: &Grid, f: F) -> T
where
    T: Real,
    F: Fn(usize, usize) -> T + Sync,
{
    let n = grid.n();
    let rows: Vec<T> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = KahanSum::new();
            for k in j + 1..=j + n {
                acc.add(f(j, k));
            }
            acc.value()
        })
        .collect();
    let h = grid.step::<T>();
    T::lit(0.5) * h * h * kahan_sum(rows)
}

/// Same rule applied to precomputed row sums `Σ_k F(j, k)`.
pub fn integrate_rows<T: Real>(grid: &Grid, row_sums: &[T]) -> T {
    let h = grid.step::<T>();
    T::lit(0.5) * h * h * kahan_sum(row_sums.iter().copied())
}

/// Rectangle rule over one period of equispaced samples; exact for
/// trigonometric polynomials of degree below the sample count.
pub fn integrate_period<T: Real>(g: &[T], period: T) -> Result<T> {
    if g.is_empty() {
        return Err(Error::Invalid("integrate_period needs at least one sample".into()));
    }
    Ok(period / T::from_usize_lossy(g.len()) * kahan_sum(g.iter().copied()))
}
