use crate::scalar::{circle_dist, Real};

/// Signed area enclosed by `t ↦ (d(t, α), d(t, α + offset))`, `d` the
/// circle distance. The loop is piecewise linear, so the shoelace sum over
/// its corners is exact.
pub fn coordinate_filling_area<T: Real>(alpha: T, offset: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut ts: Vec<T> = [alpha, alpha + T::PI(), alpha + offset, alpha + offset + T::PI()]
        .iter()
        .map(|t| *t - two_pi * (*t / two_pi).floor())
        .collect();
    ts.extend((0..8).map(|k| two_pi * T::from_usize_lossy(k) / T::lit(8.0)));
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup_by(|a, b| (*a - *b).abs() < T::epsilon());
    let pts: Vec<(T, T)> = ts.iter().map(|t| (circle_dist(*t, alpha), circle_dist(*t, alpha + offset))).collect();
    let k = pts.len();
    let twice: T = (0..k)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % k]);
            a.0 * b.1 - a.1 * b.0
        })
        .fold(T::zero(), |x, y| x + y);
    T::lit(0.5) * twice
}
