//! Generator grammar for hull points.
//!
//! ```text
//! sphere:TAU,D
//! random:SEED,ROUGHNESS,EPS
//! shrink:INNER,LAMBDA
//! PATH            (HullFn JSON)
//! ```

use fillhull_core::{random_hull_point, Error, Grid, HullFn, Result, SpherePoint};

fn num(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Invalid(format!("{what}: cannot read {s:?} as a number")))
}

fn args<'a>(body: &'a str, k: usize, kind: &str) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = body.split(',').collect();
    if parts.len() != k {
        return Err(Error::Invalid(format!("{kind}: expected {k} comma-separated values, got {body:?}")));
    }
    Ok(parts)
}

pub fn parse_sphere(body: &str) -> Result<SpherePoint<f64>> {
    let a = args(body, 2, "sphere")?;
    SpherePoint::new(num(a[0], "sphere tau")?, num(a[1], "sphere d")?)
}

/// Builds the point on `grid`. JSON inputs on another grid are resampled
/// piecewise linearly.
pub fn parse_hull(spec: &str, grid: Grid) -> Result<HullFn<f64>> {
    if let Some(body) = spec.strip_prefix("sphere:") {
        return Ok(HullFn::sphere_point(&parse_sphere(body)?, grid));
    }
    if let Some(body) = spec.strip_prefix("random:") {
        let a = args(body, 3, "random")?;
        let seed = a[0].trim().parse::<u64>().map_err(|_| Error::Invalid(format!("random seed {:?}", a[0])))?;
        return random_hull_point(seed, num(a[1], "roughness")?, num(a[2], "eps")?, grid);
    }
    if let Some(body) = spec.strip_prefix("shrink:") {
        let (inner, lambda) =
            body.rsplit_once(',').ok_or_else(|| Error::Invalid(format!("shrink: expected INNER,LAMBDA, got {body:?}")))?;
        let lambda = num(lambda, "shrink lambda")?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Invalid(format!("shrink lambda {lambda} outside [0, 1]")));
        }
        return Ok(parse_hull(inner, grid)?.shrink_toward_center(lambda));
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Error::Invalid(format!("{spec:?} is neither a generator spec nor a readable file: {e}")))?;
    let f = HullFn::<f64>::from_json(&text)?;
    if f.grid().n() == grid.n() {
        Ok(f)
    } else {
        Ok(HullFn::from_fn(grid, |a| f.value(a)))
    }
}
