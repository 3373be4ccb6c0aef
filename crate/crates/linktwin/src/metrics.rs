//! Capacity, SNR-combination, and power-efficiency formulas, plus OSA-style
//! SNR estimation from an interleaved spectrum.
//!
//! All SNR inputs and outputs are normalized to one polarization and a
//! reference bandwidth equal to the symbol rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{db_to_linear, dbm_to_mw};

/// Polarization-multiplexed WDM capacity `2 R_s sum_k log2(1 + eta SNR_k)`
/// in bit/s.
pub fn capacity(snr_linear: &[f64], symbol_rate_hz: f64, eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) || eta == 0.0 {
        return Err(Error::InvalidConfig(format!("eta must be in (0, 1], got {eta}")));
    }
    if symbol_rate_hz <= 0.0 {
        return Err(Error::InvalidConfig("symbol rate must be > 0".into()));
    }
    let mut sum = 0.0;
    for &snr in snr_linear {
        if !snr.is_finite() || snr < 0.0 {
            return Err(Error::InvalidConfig(format!("SNR must be finite and >= 0, got {snr}")));
        }
        sum += (1.0 + eta * snr).log2();
    }
    Ok(2.0 * symbol_rate_hz * sum)
}

/// Supply-power-constrained cable capacity `2 M B log2(1 + SNR)` in bit/s for
/// `M` spatial paths of bandwidth `B`.
pub fn cable_capacity(snr_linear: f64, spatial_paths: u32, bandwidth_hz: f64) -> Result<f64> {
    if spatial_paths < 1 {
        return Err(Error::InvalidConfig("spatial paths must be >= 1".into()));
    }
    if bandwidth_hz <= 0.0 {
        return Err(Error::InvalidConfig("bandwidth must be > 0".into()));
    }
    if !snr_linear.is_finite() || snr_linear < 0.0 {
        return Err(Error::InvalidConfig("SNR must be finite and >= 0".into()));
    }
    Ok(2.0 * spatial_paths as f64 * bandwidth_hz * (1.0 + snr_linear).log2())
}

/// Effective SNR of transponder noise in series with line noise:
/// `(eta^-1 SNR_TRX^-1 + SNR_Line^-1)^-1`.
pub fn combine_snr(snr_trx: f64, snr_line: f64, eta: f64) -> Result<f64> {
    if snr_trx <= 0.0 || snr_line <= 0.0 {
        return Err(Error::InvalidConfig(
            "SNR contributions must be > 0".into(),
        ));
    }
    if !(0.0..=1.0).contains(&eta) || eta == 0.0 {
        return Err(Error::InvalidConfig(format!("eta must be in (0, 1], got {eta}")));
    }
    Ok(1.0 / (1.0 / (eta * snr_trx) + 1.0 / snr_line))
}

/// Per-channel capacity breakdown with the power-efficiency figure of merit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityReport {
    /// Per-channel linear SNR.
    pub per_channel_snr: Vec<f64>,
    /// Per-channel capacity, bit/s.
    pub per_channel_capacity_bps: Vec<f64>,
    /// Total capacity C, bit/s.
    pub total_capacity_bps: f64,
    /// Figure of merit m = C / P_E in bit/s per Watt, when P_E is known.
    pub power_efficiency_bps_per_w: Option<f64>,
    /// Transponder penalty factor used.
    pub eta: f64,
}

impl CapacityReport {
    pub fn new(
        snr_linear: &[f64],
        symbol_rate_hz: f64,
        eta: f64,
        electrical_power_w: Option<f64>,
    ) -> Result<Self> {
        let per_channel: Vec<f64> = snr_linear
            .iter()
            .map(|&s| capacity(&[s], symbol_rate_hz, eta))
            .collect::<Result<_>>()?;
        let total: f64 = per_channel.iter().sum();
        let m = match electrical_power_w {
            Some(p) if p > 0.0 => Some(total / p),
            Some(_) => {
                return Err(Error::InvalidConfig(
                    "electrical power must be > 0".into(),
                ))
            }
            None => None,
        };
        Ok(Self {
            per_channel_snr: snr_linear.to_vec(),
            per_channel_capacity_bps: per_channel,
            total_capacity_bps: total,
            power_efficiency_bps_per_w: m,
            eta,
        })
    }
}

/// Estimate per-channel linear SNR from an OSA sweep of interleaved slots.
///
/// The spectrum must alternate empty and signal slots and both start and end
/// with an empty slot (`2K + 1` powers for `K` channels, dBm). The noise
/// under channel `k` is interpolated as the dBm midpoint of its two adjacent
/// empty slots; the signal is the slot power minus that noise, subtracted in
/// the linear domain.
pub fn estimate_snr_osa(slot_powers_dbm: &[f64]) -> Result<Vec<f64>> {
    let n = slot_powers_dbm.len();
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidConfig(format!(
            "interleaved spectrum needs 2K+1 slots, got {n}"
        )));
    }
    if slot_powers_dbm.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("slot powers".into()));
    }
    let channels = n / 2;
    let mut snr = Vec::with_capacity(channels);
    for k in 0..channels {
        let left = slot_powers_dbm[2 * k];
        let slot = slot_powers_dbm[2 * k + 1];
        let right = slot_powers_dbm[2 * k + 2];
        let noise_dbm = 0.5 * (left + right);
        let noise_mw = dbm_to_mw(noise_dbm);
        let signal_mw = dbm_to_mw(slot) - noise_mw;
        if signal_mw <= 0.0 {
            return Err(Error::NonPositiveSignal { slot: 2 * k + 1 });
        }
        snr.push(signal_mw / noise_mw);
    }
    Ok(snr)
}

/// Assemble the interleaved OSA spectrum for known per-channel signal powers
/// and a noise floor sampled at every slot position (`2K + 1` values, the
/// odd indices lying under the signal slots). Signal slots carry
/// signal + noise; empty slots carry the bare floor. Used to exercise
/// [`estimate_snr_osa`] against known truth.
pub fn build_osa_spectrum(signal_dbm: &[f64], noise_floor_dbm: &[f64]) -> Vec<f64> {
    let k = signal_dbm.len();
    assert_eq!(noise_floor_dbm.len(), 2 * k + 1);
    let mut slots = Vec::with_capacity(2 * k + 1);
    for ch in 0..k {
        slots.push(noise_floor_dbm[2 * ch]);
        let slot_power = dbm_to_mw(signal_dbm[ch]) + dbm_to_mw(noise_floor_dbm[2 * ch + 1]);
        slots.push(10.0 * slot_power.log10());
    }
    slots.push(noise_floor_dbm[2 * k]);
    slots
}

/// Linear SNR corresponding to a dB value; helper for scenario sweeps.
pub fn snr_db_to_linear(snr_db: f64) -> f64 {
    db_to_linear(snr_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::linear_to_db;

    /// 4e12 * log2(101), evaluated independently at high precision.
    const CAP_40X100_GOLDEN: f64 = 2.6632845931007179e13;
    /// 4e14 * log2(11), evaluated independently at high precision.
    const CABLE_GOLDEN: f64 = 1.3837726474549189e15;

    #[test]
    fn capacity_zero_snr_is_zero() {
        assert_eq!(capacity(&[0.0; 40], 50e9, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn capacity_single_channel_unit_snr() {
        let c = capacity(&[1.0], 1.0, 1.0).unwrap();
        assert!((c - 2.0).abs() < 1e-15);
    }

    #[test]
    fn capacity_matches_golden() {
        let c = capacity(&[100.0; 40], 50e9, 1.0).unwrap();
        assert!(((c - CAP_40X100_GOLDEN) / CAP_40X100_GOLDEN).abs() < 1e-12);
    }

    #[test]
    fn capacity_rejects_negative_snr() {
        assert!(capacity(&[1.0, -0.1], 50e9, 1.0).is_err());
    }

    #[test]
    fn cable_capacity_values() {
        assert!((cable_capacity(1.0, 5, 2.0).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(cable_capacity(0.0, 5, 2.0).unwrap(), 0.0);
        let c = cable_capacity(10.0, 50, 4e12).unwrap();
        assert!(((c - CABLE_GOLDEN) / CABLE_GOLDEN).abs() < 1e-12);
    }

    #[test]
    fn combine_snr_disabled_transponder_is_line() {
        let line = db_to_linear(20.0);
        let combined = combine_snr(1e18, line, 1.0).unwrap();
        assert!(((combined - line) / line).abs() < 1e-12);
    }

    #[test]
    fn combine_snr_tx_floor_barely_reduces_line() {
        let combined = combine_snr(db_to_linear(45.0), db_to_linear(20.0), 1.0).unwrap();
        let reduction = 20.0 - linear_to_db(combined);
        assert!(
            (reduction - 0.014).abs() < 0.001,
            "45-dB TX SNR should cost ~0.014 dB on a 20-dB line, got {reduction}"
        );
        assert!((linear_to_db(combined) - 19.986).abs() < 5e-4);
    }

    #[test]
    fn combine_snr_equal_contributions_halve() {
        let combined = combine_snr(10.0, 10.0, 1.0).unwrap();
        assert!((linear_to_db(combined) - (10.0 - 3.0103)).abs() < 1e-3);
    }

    #[test]
    fn combine_snr_rejects_non_positive() {
        assert!(combine_snr(0.0, 10.0, 1.0).is_err());
        assert!(combine_snr(10.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn osa_flat_noise_exact() {
        // Flat noise floor n, slot power 101 n: SNR = 100.
        let n_dbm = -30.0;
        let slot = 10.0 * (101.0 * dbm_to_mw(n_dbm)).log10();
        let spectrum = vec![n_dbm, slot, n_dbm, slot, n_dbm];
        let snr = estimate_snr_osa(&spectrum).unwrap();
        for s in snr {
            assert!((s - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn osa_exact_for_db_linear_noise_floor() {
        // A tilted (linear-in-dB) noise floor is recovered exactly.
        let k = 40;
        let floor: Vec<f64> = (0..2 * k + 1).map(|s| -35.0 + 0.05 * s as f64).collect();
        let signal: Vec<f64> = (0..k).map(|ch| -10.0 - 0.1 * ch as f64).collect();
        let spectrum = build_osa_spectrum(&signal, &floor);
        let snr = estimate_snr_osa(&spectrum).unwrap();
        for ch in 0..k {
            let truth = dbm_to_mw(signal[ch]) / dbm_to_mw(floor[2 * ch + 1]);
            assert!((snr[ch] - truth).abs() / truth < 1e-12);
        }
    }

    #[test]
    fn osa_interpolates_in_db_domain() {
        // Neighbors -40 and -30 dBm: interpolated noise is -35 dBm.
        let slot = 10.0 * (dbm_to_mw(-10.0) + dbm_to_mw(-35.0)).log10();
        let spectrum = vec![-40.0, slot, -30.0];
        let snr = estimate_snr_osa(&spectrum).unwrap();
        let expected = dbm_to_mw(-10.0) / dbm_to_mw(-35.0);
        assert!((snr[0] - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn osa_rejects_buried_signal() {
        let spectrum = vec![-30.0, -30.0, -30.0];
        assert!(matches!(
            estimate_snr_osa(&spectrum),
            Err(Error::NonPositiveSignal { slot: 1 })
        ));
    }

    #[test]
    fn osa_estimate_tracks_simulator_truth() {
        // Smooth curved noise floor (≤ 1 dB between adjacent slots): the
        // estimate must recover the true per-channel SNR within 0.05 dB.
        let k = 40;
        let floor: Vec<f64> = (0..2 * k + 1)
            .map(|s| -32.0 + 0.8 * (s as f64 * 0.185).sin() + 0.01 * s as f64)
            .collect();
        let signal_dbm: Vec<f64> = (0..k)
            .map(|ch| -12.0 + 2.0 * (ch as f64 * 0.21).cos())
            .collect();
        let spectrum = build_osa_spectrum(&signal_dbm, &floor);
        let snr = estimate_snr_osa(&spectrum).unwrap();
        for ch in 0..k {
            let truth_db = signal_dbm[ch] - floor[2 * ch + 1];
            let err = (linear_to_db(snr[ch]) - truth_db).abs();
            assert!(err < 0.05, "channel {ch}: OSA estimate off by {err} dB");
        }
    }

    #[test]
    fn report_totals_and_figure_of_merit() {
        let snr = vec![10.0; 4];
        let report = CapacityReport::new(&snr, 50e9, 1.0, Some(2.0)).unwrap();
        let per: f64 = report.per_channel_capacity_bps.iter().sum();
        assert!((report.total_capacity_bps - per).abs() < 1.0);
        let m = report.power_efficiency_bps_per_w.unwrap();
        assert!((m - report.total_capacity_bps / 2.0).abs() < 1.0);
    }

    #[test]
    fn cable_capacity_single_path_equals_wdm_single_channel() {
        let snr = 7.3;
        let b = 4e12;
        let a = cable_capacity(snr, 1, b).unwrap();
        let c = capacity(&[snr], b, 1.0).unwrap();
        assert!((a - c).abs() / c < 1e-15);
    }
}
