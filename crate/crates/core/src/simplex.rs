//! Derivative-free local search (Nelder–Mead) for the small parametric
//! searches in `hull` and `volumes`.

use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct SimplexResult<T> {
    pub x: Vec<T>,
    pub value: T,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` starting from `x0`, with the initial simplex spanned by
/// `x0 + scale[i]·e_i`. Stops when the simplex diameter drops below `tol`
/// or after `max_evals` evaluations.
pub fn nelder_mead<T, F>(mut f: F, x0: &[T], scale: &[T], tol: T, max_evals: usize) -> SimplexResult<T>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let dim = x0.len();
    let (alpha, gamma, rho, sigma) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    let mut pts: Vec<Vec<T>> = Vec::with_capacity(dim + 1);
    pts.push(x0.to_vec());
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] += scale[i];
        pts.push(p);
    }
    let mut vals: Vec<T> = pts.iter().map(|p| f(p)).collect();
    let mut evals = dim + 1;

    let diameter = |pts: &[Vec<T>]| {
        let mut d = T::zero();
        for p in &pts[1..] {
            for (a, b) in p.iter().zip(&pts[0]) {
                d = d.max((*a - *b).abs());
            }
        }
        d
    };

    loop {
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();

        let converged = diameter(&pts) < tol;
        if converged || evals >= max_evals {
            return SimplexResult { x: pts[0].clone(), value: vals[0], evals, converged };
        }

        let mut centroid = vec![T::zero(); dim];
        for p in &pts[..dim] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += *v;
            }
        }
        let inv = T::one() / T::from_usize_lossy(dim);
        centroid.iter_mut().for_each(|c| *c *= inv);
        let along = |t: T| -> Vec<T> {
            centroid.iter().zip(&pts[dim]).map(|(c, w)| *c + t * (*c - *w)).collect()
        };

        let xr = along(alpha);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = along(gamma);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                pts[dim] = xe;
                vals[dim] = fe;
            } else {
                pts[dim] = xr;
                vals[dim] = fr;
            }
            continue;
        }
        if fr < vals[dim - 1] {
            pts[dim] = xr;
            vals[dim] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[dim] {
            let xc = along(rho);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = f(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc < vals[dim].min(fr) {
            pts[dim] = xc;
            vals[dim] = fc;
            continue;
        }
        for i in 1..=dim {
            let shrunk: Vec<T> = pts[0].iter().zip(&pts[i]).map(|(b, p)| *b + sigma * (*p - *b)).collect();
            vals[i] = f(&shrunk);
            pts[i] = shrunk;
        }
        evals += dim;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = nelder_mead(|x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2), &[0.0, 0.0], &[0.5, 0.5], 1e-9, 5000);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn nonsmooth_max() {
        let r = nelder_mead(|x: &[f64]| (x[0] - 0.3).abs().max((x[1] - 0.7).abs()), &[0.0, 0.0], &[0.2, 0.2], 1e-9, 5000);
        assert!(r.value < 1e-6);
    }
}
