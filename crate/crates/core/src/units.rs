//! Power unit conversions.

/// Converts an absolute power level in dBm to watts.
pub fn dbm_to_watt(level_dbm: f64) -> f64 {
    10f64.powf((level_dbm - 30.0) / 10.0)
}

/// Converts a power in watts to dBm. Zero watts maps to negative infinity.
pub fn watt_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_levels() {
        assert_eq!(dbm_to_watt(30.0), 1.0);
        assert!((dbm_to_watt(0.0) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watt(45.0) - 31.6228).abs() < 1e-4);
        assert!((dbm_to_watt(5.0) - 3.162e-3).abs() < 1e-6);
    }

    #[test]
    fn round_trip() {
        for level in [-170.0, -30.0, 0.0, 17.5, 45.0] {
            assert!((watt_to_dbm(dbm_to_watt(level)) - level).abs() < 1e-9);
        }
        assert_eq!(watt_to_dbm(0.0), f64::NEG_INFINITY);
    }
}
