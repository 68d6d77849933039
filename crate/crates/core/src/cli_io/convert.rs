use crate::error::{Error, Result};
use crate::special::std_normal_quantile;

/// Converts a ratio estimate with its confidence interval to a log-scale
/// estimate and standard error:
/// `se = (ln upper − ln lower) / (2·Φ⁻¹((1 + level)/2))`.
pub fn parse_ratio_ci(estimate: f64, lower: f64, upper: f64, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if !(lower > 0.0 && estimate > 0.0 && upper > 0.0) {
        return Err(Error::invalid(format!(
            "ratio estimate and limits must be positive, got {estimate} [{lower}, {upper}]"
        )));
    }
    if !(lower < estimate && estimate < upper) {
        return Err(Error::invalid(format!(
            "expected lower < estimate < upper, got {estimate} [{lower}, {upper}]"
        )));
    }
    if !upper.is_finite() {
        return Err(Error::invalid("upper limit must be finite"));
    }
    let z = std_normal_quantile((1.0 + level) / 2.0);
    Ok((estimate.ln(), (upper.ln() - lower.ln()) / (2.0 * z)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_one_rows() {
        let (y, se) = parse_ratio_ci(0.53, 0.22, 1.29, 0.95).unwrap();
        assert!((y + 0.635).abs() < 5e-4 && (se - 0.451).abs() < 5e-4);
        let (y, se) = parse_ratio_ci(0.51, 0.12, 2.20, 0.95).unwrap();
        assert!((y + 0.673).abs() < 5e-4 && (se - 0.742).abs() < 5e-4);
    }

    #[test]
    fn symmetric_unit_interval() {
        let (y, se) = parse_ratio_ci(1.0, (-1.96_f64).exp(), 1.96_f64.exp(), 0.95).unwrap();
        assert_eq!(y, 0.0);
        assert!((se - 1.0).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_ratio_ci(0.5, 0.6, 1.0, 0.95).is_err());
        assert!(parse_ratio_ci(0.5, 0.0, 1.0, 0.95).is_err());
        assert!(parse_ratio_ci(0.5, 0.2, 1.0, 1.5).is_err());
        assert!(parse_ratio_ci(-0.5, 0.2, 1.0, 0.95).is_err());
    }
}
