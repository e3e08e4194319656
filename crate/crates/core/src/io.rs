//! Number formatting shared by the CSV and JSON writers.

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Text form with 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 || !r.is_finite() {
        return format!("{r}");
    }
    let mag = r.abs();
    if !(1e-4..1e12).contains(&mag) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt_sig(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-2.5e-7), "-2.5e-7");
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
    }
}
