//! WDM channel grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency plan of the WDM system: 40 signal slots of 50-GHz width,
/// interleaved with empty slots so adjacent signal carriers sit 100 GHz
/// apart across a ~4-THz C-band window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGrid {
    /// Number of signal channels.
    pub channel_count: usize,
    /// Width of one frequency slot in Hz.
    pub slot_width_hz: f64,
    /// Reference bandwidth for SNR normalization (equal to the symbol rate).
    pub reference_bandwidth_hz: f64,
    /// Center frequency of each signal channel in Hz, strictly increasing.
    pub center_frequencies_hz: Vec<f64>,
}

impl ChannelGrid {
    /// The 40-channel C-band grid used throughout: 50-GHz slots, signal
    /// carriers every 100 GHz centered on 193.5 THz.
    pub fn standard() -> Self {
        let channel_count = 40;
        let spacing = 100e9;
        let first = 193.5e12 - spacing * (channel_count as f64 - 1.0) / 2.0;
        let center_frequencies_hz = (0..channel_count)
            .map(|k| first + spacing * k as f64)
            .collect();
        Self {
            channel_count,
            slot_width_hz: 50e9,
            reference_bandwidth_hz: 50e9,
            center_frequencies_hz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channel_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "channel_count must be >= 2, got {}",
                self.channel_count
            )));
        }
        if self.slot_width_hz <= 0.0 {
            return Err(Error::InvalidConfig("slot_width must be > 0".into()));
        }
        if self.reference_bandwidth_hz <= 0.0 {
            return Err(Error::InvalidConfig(
                "reference_bandwidth must be > 0".into(),
            ));
        }
        if self.center_frequencies_hz.len() != self.channel_count {
            return Err(Error::InvalidConfig(format!(
                "expected {} center frequencies, got {}",
                self.channel_count,
                self.center_frequencies_hz.len()
            )));
        }
        for pair in self.center_frequencies_hz.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidConfig(
                    "center frequencies must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    /// Band span between the first and last carrier, in Hz.
    pub fn span_hz(&self) -> f64 {
        self.center_frequencies_hz[self.channel_count - 1] - self.center_frequencies_hz[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_grid_is_valid() {
        let g = ChannelGrid::standard();
        g.validate().unwrap();
        assert_eq!(g.channel_count, 40);
        // 39 intervals of 100 GHz: ~4 THz system bandwidth.
        assert!((g.span_hz() - 3.9e12).abs() < 1.0);
        assert!((g.center_frequencies_hz[0] - 191.55e12).abs() < 1.0);
    }

    #[test]
    fn rejects_non_increasing_frequencies() {
        let mut g = ChannelGrid::standard();
        g.center_frequencies_hz[5] = g.center_frequencies_hz[4];
        assert!(g.validate().is_err());
    }

    #[test]
    fn rejects_single_channel() {
        let g = ChannelGrid {
            channel_count: 1,
            slot_width_hz: 50e9,
            reference_bandwidth_hz: 50e9,
            center_frequencies_hz: vec![193.5e12],
        };
        assert!(g.validate().is_err());
    }
}
