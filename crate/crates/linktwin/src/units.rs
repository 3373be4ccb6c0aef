//! Power and ratio unit conversions.
//!
//! External interfaces speak dBm; all internal arithmetic runs in linear
//! milliwatts. Ratios (gain, loss, SNR) convert between dB and linear.

/// Planck constant in J·s (exact SI value).
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;

/// Convert a power from dBm to linear milliwatts.
#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Convert a power from linear milliwatts to dBm.
///
/// Zero maps to `-inf`, which callers that enforce strictly positive powers
/// must reject themselves.
#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Convert a ratio from dB to linear.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear ratio to dB.
#[inline]
pub fn linear_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Peak-to-peak spread of a slice, `max - min`.
pub fn peak_to_peak(values: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_round_trip() {
        for dbm in [-40.0, -3.5, 0.0, 13.0, 19.0] {
            assert!((mw_to_dbm(dbm_to_mw(dbm)) - dbm).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mw_is_negative_infinity() {
        assert_eq!(mw_to_dbm(0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn peak_to_peak_of_ramp() {
        let v: Vec<f64> = (0..40).map(|k| k as f64).collect();
        assert_eq!(peak_to_peak(&v), 39.0);
    }
}
