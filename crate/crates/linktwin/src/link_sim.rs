//! Parametric ground-truth simulator of the 12-span EDFA link.
//!
//! Maps any transmit power profile to received per-channel signal and noise
//! powers, with and without gain-flattening filters, at three calibrated pump
//! operating points. The amplifier model is homogeneous gain saturation: the
//! realized gain is the small-signal gain shape compressed by a single scalar
//! so that the total output never exceeds the saturated output power. ASE is
//! generated per channel at each amplifier and propagated through downstream
//! losses and gains like signal; powers are expectations (no stochastic
//! noise realizations), so `transmit` is a pure function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ChannelGrid;
use crate::units::{db_to_linear, dbm_to_mw, linear_to_db, mw_to_dbm, peak_to_peak, PLANCK_J_S};

/// Mean small-signal gain of the amplifier core in dB. Well above the span
/// loss, so in-link amplifiers always operate in compression.
const MEAN_SMALL_SIGNAL_GAIN_DB: f64 = 25.0;

/// Peak-to-peak linear tilt of the residual gain shape with a GFF attached.
const GFF_RESIDUAL_TILT_DB: f64 = 2.5;

/// Peak-to-peak linear tilt of the bare (GFF-free) core gain shape.
const CORE_TILT_DB: f64 = 1.0;

/// Fixed ripple of the bare core gain shape: (amplitude dB, cycles across the
/// band, phase radians). Committed once; gives the GFF-free shape a ~1.5-dB
/// peak-to-peak excursion dominated by ripple rather than tilt.
const CORE_RIPPLE: [(f64, f64, f64); 3] = [(0.38, 2.0, 0.9), (0.26, 3.0, 2.2), (0.12, 5.0, 4.1)];

/// One amplifier: small-signal gain shape, homogeneous saturation level,
/// noise figure, optional gain-flattening filter, and pump draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdfaParams {
    /// Per-channel small-signal gain in dB (tilt + ripple components).
    pub small_signal_gain_db: Vec<f64>,
    /// Total saturated output power of the amplifier core (pre-GFF), mW.
    pub saturated_output_mw: f64,
    /// Per-channel noise figure in dB.
    pub noise_figure_db: Vec<f64>,
    /// Per-channel GFF loss in dB, present only when a GFF is attached.
    pub gff_loss_db: Option<Vec<f64>>,
    /// Electrical pump power in mW.
    pub pump_electrical_mw: f64,
    /// When false, the ASE term is switched off (test instrumentation).
    #[serde(default = "default_true")]
    pub ase_enabled: bool,
}

fn default_true() -> bool {
    true
}

impl EdfaParams {
    pub fn validate(&self, grid: &ChannelGrid) -> Result<()> {
        let k = grid.channel_count;
        if self.small_signal_gain_db.len() != k {
            return Err(Error::InvalidConfig(format!(
                "gain shape has {} entries for {k} channels",
                self.small_signal_gain_db.len()
            )));
        }
        if self.noise_figure_db.len() != k {
            return Err(Error::InvalidConfig(format!(
                "noise figure has {} entries for {k} channels",
                self.noise_figure_db.len()
            )));
        }
        // 3 dB is the quantum limit for a high-gain amplifier.
        if self.ase_enabled && self.noise_figure_db.iter().any(|&nf| nf < 3.0) {
            return Err(Error::InvalidConfig(
                "noise figure below the 3-dB quantum limit".into(),
            ));
        }
        if !self.saturated_output_mw.is_finite() || self.saturated_output_mw <= 0.0 {
            return Err(Error::InvalidConfig(
                "saturated output power must be finite and positive".into(),
            ));
        }
        if let Some(gff) = &self.gff_loss_db {
            if gff.len() != k {
                return Err(Error::InvalidConfig(format!(
                    "GFF loss has {} entries for {k} channels",
                    gff.len()
                )));
            }
            if gff.iter().any(|&l| l < 0.0) {
                return Err(Error::InvalidConfig("GFF loss must be >= 0".into()));
            }
        }
        if self.small_signal_gain_db.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("small-signal gain".into()));
        }
        Ok(())
    }

    /// Flat-gain amplifier with ASE switched off; test instrumentation.
    pub fn flat_noiseless(gain_db: f64, saturated_output_mw: f64, grid: &ChannelGrid) -> Self {
        let k = grid.channel_count;
        Self {
            small_signal_gain_db: vec![gain_db; k],
            saturated_output_mw,
            noise_figure_db: vec![4.5; k],
            gff_loss_db: None,
            pump_electrical_mw: 1.0,
            ase_enabled: false,
        }
    }
}

/// Full line-system configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Number of (span loss -> amplifier) stages.
    pub span_count: usize,
    /// Loss of one span in dB, padding VOA included.
    pub span_loss_db: f64,
    /// The amplifier repeated after every span.
    pub edfa: EdfaParams,
    pub grid: ChannelGrid,
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.span_count < 1 {
            return Err(Error::InvalidConfig("span_count must be >= 1".into()));
        }
        if self.span_loss_db <= 0.0 {
            return Err(Error::InvalidConfig("span_loss must be > 0".into()));
        }
        self.grid.validate()?;
        self.edfa.validate(&self.grid)
    }
}

/// Per-channel transmit launch powers with total-power metadata.
///
/// The linear-domain sum of the per-channel powers always equals the recorded
/// total within a relative 1e-9; constructors enforce this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    powers_dbm: Vec<f64>,
    total_dbm: f64,
}

impl PowerProfile {
    /// Build from per-channel dBm values; the total is derived from the sum.
    pub fn from_dbm(powers_dbm: Vec<f64>) -> Result<Self> {
        if powers_dbm.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("profile powers".into()));
        }
        if powers_dbm.is_empty() {
            return Err(Error::InvalidConfig("empty power profile".into()));
        }
        let total_mw: f64 = powers_dbm.iter().map(|&p| dbm_to_mw(p)).sum();
        Ok(Self {
            total_dbm: mw_to_dbm(total_mw),
            powers_dbm,
        })
    }

    /// Build from a dB-relative shape, shifted so the linear sum equals
    /// `total_dbm` exactly.
    pub fn from_shape(shape_db: &[f64], total_dbm: f64) -> Result<Self> {
        if shape_db.iter().any(|p| !p.is_finite()) || !total_dbm.is_finite() {
            return Err(Error::NonFinite("profile shape".into()));
        }
        let sum_mw: f64 = shape_db.iter().map(|&p| dbm_to_mw(p)).sum();
        let shift = total_dbm - mw_to_dbm(sum_mw);
        let powers_dbm = shape_db.iter().map(|&p| p + shift).collect();
        Ok(Self {
            powers_dbm,
            total_dbm,
        })
    }

    /// Build from linear milliwatt powers (all strictly positive).
    pub fn from_mw(powers_mw: &[f64]) -> Result<Self> {
        if powers_mw.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::NonFinite("profile powers must be finite and > 0".into()));
        }
        let total_mw: f64 = powers_mw.iter().sum();
        Ok(Self {
            powers_dbm: powers_mw.iter().map(|&p| mw_to_dbm(p)).collect(),
            total_dbm: mw_to_dbm(total_mw),
        })
    }

    /// Flat profile carrying `total_dbm` split evenly over `channels`.
    pub fn flat(channels: usize, total_dbm: f64) -> Self {
        let per_channel = total_dbm - linear_to_db(channels as f64);
        Self {
            powers_dbm: vec![per_channel; channels],
            total_dbm,
        }
    }

    pub fn channel_count(&self) -> usize {
        self.powers_dbm.len()
    }

    pub fn powers_dbm(&self) -> &[f64] {
        &self.powers_dbm
    }

    pub fn powers_mw(&self) -> Vec<f64> {
        self.powers_dbm.iter().map(|&p| dbm_to_mw(p)).collect()
    }

    pub fn total_dbm(&self) -> f64 {
        self.total_dbm
    }

    pub fn total_mw(&self) -> f64 {
        dbm_to_mw(self.total_dbm)
    }

    /// Peak-to-peak channel power excursion in dB.
    pub fn excursion_db(&self) -> f64 {
        peak_to_peak(&self.powers_dbm)
    }

    /// Checks the total-power bookkeeping invariant.
    pub fn validate(&self) -> Result<()> {
        if self.powers_dbm.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("profile powers".into()));
        }
        let sum: f64 = self.powers_dbm.iter().map(|&p| dbm_to_mw(p)).sum();
        let total = self.total_mw();
        if ((sum - total) / total).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "profile sum {sum} mW deviates from recorded total {total} mW"
            )));
        }
        Ok(())
    }
}

/// Received per-channel signal and noise powers at the link output.
/// Noise is referred to the grid's reference bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RxObservation {
    pub signal_dbm: Vec<f64>,
    pub noise_dbm: Vec<f64>,
}

impl RxObservation {
    /// Per-channel linear SNR, signal over noise in the reference bandwidth.
    pub fn snr_linear(&self) -> Vec<f64> {
        self.signal_dbm
            .iter()
            .zip(&self.noise_dbm)
            .map(|(&s, &n)| db_to_linear(s - n))
            .collect()
    }

    /// Per-channel signal + noise power in dBm.
    pub fn total_power_dbm(&self) -> Vec<f64> {
        self.signal_dbm
            .iter()
            .zip(&self.noise_dbm)
            .map(|(&s, &n)| mw_to_dbm(dbm_to_mw(s) + dbm_to_mw(n)))
            .collect()
    }
}

/// Result of one amplifier pass.
#[derive(Debug, Clone)]
pub struct AmplifierOutput {
    /// Input powers amplified by the realized gain, after the GFF (mW).
    pub output_mw: Vec<f64>,
    /// ASE generated by this amplifier in the reference bandwidth, after the
    /// GFF (mW).
    pub ase_mw: Vec<f64>,
    /// Realized per-channel gain including GFF loss, dB.
    pub gain_db: Vec<f64>,
    /// Scalar gain compression applied to the small-signal shape, dB.
    pub compression_db: f64,
}

/// Run one amplifier over per-channel input powers in linear mW.
///
/// The realized gain is the small-signal shape minus a scalar compression
/// chosen so the total (pre-GFF) output does not exceed the saturated output
/// power; per-channel ASE is `NF * h*nu_k * (G_k - 1) * B_ref`. GFF loss, when
/// present, attenuates both the amplified signal and the generated ASE.
pub fn amplify(input_mw: &[f64], params: &EdfaParams, grid: &ChannelGrid) -> Result<AmplifierOutput> {
    params.validate(grid)?;
    if input_mw.len() != grid.channel_count {
        return Err(Error::InvalidConfig(format!(
            "input has {} entries for {} channels",
            input_mw.len(),
            grid.channel_count
        )));
    }
    if input_mw.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::NonFinite("amplifier input".into()));
    }
    if input_mw.iter().all(|&p| p == 0.0) {
        return Err(Error::NoOpticalInput);
    }

    let unsaturated_total: f64 = input_mw
        .iter()
        .zip(&params.small_signal_gain_db)
        .map(|(&p, &g)| p * db_to_linear(g))
        .sum();
    let compression_db = if unsaturated_total > params.saturated_output_mw {
        linear_to_db(unsaturated_total / params.saturated_output_mw)
    } else {
        0.0
    };

    let k = grid.channel_count;
    let mut output_mw = vec![0.0; k];
    let mut ase_mw = vec![0.0; k];
    let mut gain_db = vec![0.0; k];
    for ch in 0..k {
        let pre_gff_gain_db = params.small_signal_gain_db[ch] - compression_db;
        let g_lin = db_to_linear(pre_gff_gain_db);
        let gff_db = params.gff_loss_db.as_ref().map_or(0.0, |l| l[ch]);
        let t_lin = db_to_linear(-gff_db);

        let ase_w = if params.ase_enabled {
            let nf_lin = db_to_linear(params.noise_figure_db[ch]);
            let photon = PLANCK_J_S * grid.center_frequencies_hz[ch];
            nf_lin * photon * (g_lin - 1.0).max(0.0) * grid.reference_bandwidth_hz
        } else {
            0.0
        };

        output_mw[ch] = input_mw[ch] * g_lin * t_lin;
        ase_mw[ch] = ase_w * 1e3 * t_lin;
        gain_db[ch] = pre_gff_gain_db - gff_db;
    }

    Ok(AmplifierOutput {
        output_mw,
        ase_mw,
        gain_db,
        compression_db,
    })
}

/// Propagate a transmit profile through the link and observe RX powers.
///
/// Applies `span_count` repetitions of (span loss -> amplifier), accumulating
/// each amplifier's ASE through all downstream losses and gains. Deterministic:
/// identical inputs give bit-identical outputs.
pub fn transmit(profile: &PowerProfile, config: &LinkConfig) -> Result<RxObservation> {
    config.validate()?;
    profile.validate()?;
    if profile.channel_count() != config.grid.channel_count {
        return Err(Error::InvalidConfig(format!(
            "profile has {} channels, grid has {}",
            profile.channel_count(),
            config.grid.channel_count
        )));
    }

    let span_transmission = db_to_linear(-config.span_loss_db);
    let mut signal = profile.powers_mw();
    let mut noise = vec![0.0; signal.len()];

    for _ in 0..config.span_count {
        for ch in 0..signal.len() {
            signal[ch] *= span_transmission;
            noise[ch] *= span_transmission;
        }
        let combined: Vec<f64> = signal.iter().zip(&noise).map(|(&s, &n)| s + n).collect();
        let amp = amplify(&combined, &config.edfa, &config.grid)?;
        for ch in 0..signal.len() {
            let g = db_to_linear(amp.gain_db[ch]);
            signal[ch] *= g;
            noise[ch] = noise[ch] * g + amp.ase_mw[ch];
        }
    }

    Ok(RxObservation {
        signal_dbm: signal.iter().map(|&p| mw_to_dbm(p)).collect(),
        noise_dbm: noise.iter().map(|&p| mw_to_dbm(p)).collect(),
    })
}

/// Power conversion efficiency `(P_O - P_I) / P_E`, all in mW.
pub fn pce(optical_in_mw: f64, optical_out_mw: f64, electrical_pump_mw: f64) -> Result<f64> {
    if electrical_pump_mw <= 0.0 {
        return Err(Error::InvalidConfig(
            "electrical pump power must be > 0".into(),
        ));
    }
    if optical_in_mw < 0.0 || !optical_in_mw.is_finite() || !optical_out_mw.is_finite() {
        return Err(Error::NonFinite("optical powers".into()));
    }
    if optical_out_mw < optical_in_mw {
        return Err(Error::NetLossDevice {
            input_mw: optical_in_mw,
            output_mw: optical_out_mw,
        });
    }
    Ok((optical_out_mw - optical_in_mw) / electrical_pump_mw)
}

/// One calibration target row: a pump setting with its measured output power
/// and conversion efficiencies for both GFF states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub pump_ma: u32,
    pub pump_mw: f64,
    /// Total delivered output power at saturation, measured after the GFF.
    pub output_dbm: f64,
    pub pce_with_gff: f64,
    pub pce_without_gff: f64,
    pub noise_figure_db: f64,
    /// Total electrical pump power of the in-line amplifiers, W.
    pub link_pump_w: f64,
}

/// The committed calibration table plus link geometry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatingPointTable {
    pub span_count: usize,
    pub span_loss_db: f64,
    pub inline_amp_count: usize,
    pub points: Vec<OperatingPoint>,
}

impl OperatingPointTable {
    /// The calibration table shipped with the crate.
    pub fn builtin() -> Self {
        toml::from_str(include_str!("../data/operating_points.toml"))
            .expect("builtin operating-point table parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// Identifier of one of the six system scenarios: a pump setting plus the
/// GFF state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScenarioId {
    pub pump_ma: u32,
    pub gff: bool,
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}ma-{}",
            self.pump_ma,
            if self.gff { "gff" } else { "nogff" }
        )
    }
}

impl std::str::FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (pump, gff) = s
            .split_once("ma-")
            .ok_or_else(|| Error::InvalidConfig(format!("bad scenario id '{s}'")))?;
        let pump_ma: u32 = pump
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad pump current in '{s}'")))?;
        let gff = match gff {
            "gff" => true,
            "nogff" => false,
            _ => return Err(Error::InvalidConfig(format!("bad GFF state in '{s}'"))),
        };
        Ok(ScenarioId { pump_ma, gff })
    }
}

/// A calibrated system scenario: link configuration, the launch total that
/// keeps the chain in steady state, and the electrical budget for the
/// figure of merit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub id: ScenarioId,
    pub link: LinkConfig,
    /// Total TX launch power, dBm; equals the per-amplifier delivered total.
    pub tx_total_dbm: f64,
    /// Electrical pump power of the whole link in W, for m = C / P_E.
    pub link_pump_w: f64,
    /// Characterization input used by the PCE check, mW.
    pub nominal_input_mw: f64,
}

impl Scenario {
    /// Fingerprint of the scenario configuration, used to bind trained models
    /// to the ground truth they were trained against.
    pub fn fingerprint(&self) -> String {
        let blob = serde_json::to_vec(self).expect("scenario serializes");
        let mut hasher = <sha2::Sha256 as sha2::Digest>::new();
        sha2::Digest::update(&mut hasher, &blob);
        let digest = sha2::Digest::finalize(hasher);
        let mut hex = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    }

    /// Ground-truth transfer function: TX profile to (signal mW, noise mW).
    pub fn transfer(&self, profile: &PowerProfile) -> Result<(Vec<f64>, Vec<f64>)> {
        let rx = transmit(profile, &self.link)?;
        Ok((
            rx.signal_dbm.iter().map(|&p| dbm_to_mw(p)).collect(),
            rx.noise_dbm.iter().map(|&p| dbm_to_mw(p)).collect(),
        ))
    }
}

/// Normalized channel position in [0, 1].
fn band_position(ch: usize, count: usize) -> f64 {
    ch as f64 / (count - 1) as f64
}

/// Bare core gain shape relative to the mean gain: small tilt plus committed
/// ripple. This is what the link exhibits with the GFF removed.
fn core_shape_db(ch: usize, count: usize) -> f64 {
    let x = band_position(ch, count);
    let mut v = CORE_TILT_DB * (x - 0.5);
    for (amp, cycles, phase) in CORE_RIPPLE {
        v += amp * (2.0 * std::f64::consts::PI * cycles * x + phase).sin();
    }
    v
}

/// Residual gain shape with the GFF attached: a pure linear tilt.
fn gff_residual_shape_db(ch: usize, count: usize) -> f64 {
    GFF_RESIDUAL_TILT_DB * (band_position(ch, count) - 0.5)
}

/// Calibrate the six scenarios (three pump settings x two GFF states) from an
/// operating-point table.
///
/// For each pump setting, the characterization input is recovered from the
/// with-GFF efficiency (`P_I = P_with - PCE_with * P_E`) and the core
/// saturation level from the GFF-free efficiency
/// (`P_core = P_I + PCE_without * P_E`). The GFF loss shape then reshapes the
/// core ripple into the residual tilt, with its mean transmission pinned so a
/// flat saturated spectrum delivers exactly the tabulated output power.
pub fn calibrate(table: &OperatingPointTable, grid: &ChannelGrid) -> Result<Vec<Scenario>> {
    grid.validate()?;
    let k = grid.channel_count;
    let mut scenarios = Vec::with_capacity(table.points.len() * 2);

    for point in &table.points {
        if point.pce_with_gff >= 1.0 || point.pce_without_gff >= 1.0 {
            return Err(Error::InfeasibleCalibration(format!(
                "{} mA: PCE above unity",
                point.pump_ma
            )));
        }
        if point.pce_with_gff <= 0.0 || point.pce_without_gff <= 0.0 {
            return Err(Error::InfeasibleCalibration(format!(
                "{} mA: degenerate non-positive PCE",
                point.pump_ma
            )));
        }
        if point.pce_without_gff <= point.pce_with_gff {
            return Err(Error::InfeasibleCalibration(format!(
                "{} mA: GFF-free PCE must exceed with-GFF PCE",
                point.pump_ma
            )));
        }

        let delivered_with_mw = dbm_to_mw(point.output_dbm);
        let nominal_input_mw = delivered_with_mw - point.pce_with_gff * point.pump_mw;
        if nominal_input_mw <= 0.0 {
            return Err(Error::InfeasibleCalibration(format!(
                "{} mA: with-GFF PCE implies negative characterization input",
                point.pump_ma
            )));
        }
        let core_saturated_mw = nominal_input_mw + point.pce_without_gff * point.pump_mw;

        let core_gain_db: Vec<f64> = (0..k)
            .map(|ch| MEAN_SMALL_SIGNAL_GAIN_DB + core_shape_db(ch, k))
            .collect();

        // GFF loss = core shape - residual tilt + offset. The offset pins the
        // gain-weighted mean transmission so a flat input driven into
        // saturation delivers exactly output_dbm after the GFF: the delivered
        // fraction of the core output is sum(g_k t_k) / sum(g_k).
        let diff_db: Vec<f64> = (0..k)
            .map(|ch| core_shape_db(ch, k) - gff_residual_shape_db(ch, k))
            .collect();
        let gain_weights: Vec<f64> = core_gain_db.iter().map(|&g| db_to_linear(g)).collect();
        let weighted_transmission: f64 = diff_db
            .iter()
            .zip(&gain_weights)
            .map(|(&d, &w)| w * db_to_linear(-d))
            .sum::<f64>()
            / gain_weights.iter().sum::<f64>();
        let target_transmission = delivered_with_mw / core_saturated_mw;
        let offset_db = linear_to_db(weighted_transmission / target_transmission);
        let gff_loss_db: Vec<f64> = diff_db.iter().map(|&d| d + offset_db).collect();
        if gff_loss_db.iter().any(|&l| l < 0.0) {
            return Err(Error::InfeasibleCalibration(format!(
                "{} mA: GFF loss shape dips below zero",
                point.pump_ma
            )));
        }

        let nf = vec![point.noise_figure_db; k];
        for gff in [true, false] {
            let edfa = EdfaParams {
                small_signal_gain_db: core_gain_db.clone(),
                saturated_output_mw: core_saturated_mw,
                noise_figure_db: nf.clone(),
                gff_loss_db: gff.then(|| gff_loss_db.clone()),
                pump_electrical_mw: point.pump_mw,
                ase_enabled: true,
            };
            let link = LinkConfig {
                span_count: table.span_count,
                span_loss_db: table.span_loss_db,
                edfa,
                grid: grid.clone(),
            };
            link.validate()?;
            let tx_total_dbm = if gff {
                point.output_dbm
            } else {
                mw_to_dbm(core_saturated_mw)
            };
            scenarios.push(Scenario {
                id: ScenarioId {
                    pump_ma: point.pump_ma,
                    gff,
                },
                link,
                tx_total_dbm,
                link_pump_w: point.link_pump_w,
                nominal_input_mw,
            });
        }
    }
    Ok(scenarios)
}

/// Look up one calibrated scenario by id.
pub fn scenario(table: &OperatingPointTable, grid: &ChannelGrid, id: ScenarioId) -> Result<Scenario> {
    calibrate(table, grid)?
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario '{id}'")))
}

/// Total delivered output power (after the GFF) when the amplifier is driven
/// to saturation by a flat input, mW.
pub fn delivered_saturated_output_mw(params: &EdfaParams, grid: &ChannelGrid) -> Result<f64> {
    // Drive hard enough that the amplifier is fully saturated.
    let input = vec![1.0; grid.channel_count];
    let out = amplify(&input, params, grid)?;
    Ok(out.output_mw.iter().sum())
}

/// Interpolate amplifier parameters at an intermediate pump power by
/// piecewise-linear interpolation through the calibrated operating points.
/// Pump settings outside the calibrated range are rejected.
pub fn params_for_pump(
    table: &OperatingPointTable,
    grid: &ChannelGrid,
    pump_mw: f64,
    gff: bool,
) -> Result<EdfaParams> {
    let scenarios = calibrate(table, grid)?;
    let mut anchors: Vec<(f64, &Scenario)> = scenarios
        .iter()
        .filter(|s| s.id.gff == gff)
        .map(|s| (s.link.edfa.pump_electrical_mw, s))
        .collect();
    anchors.sort_by(|a, b| a.0.total_cmp(&b.0));

    let lo = anchors.first().map(|a| a.0).unwrap_or(f64::NAN);
    let hi = anchors.last().map(|a| a.0).unwrap_or(f64::NAN);
    if !(lo..=hi).contains(&pump_mw) {
        return Err(Error::InvalidConfig(format!(
            "pump power {pump_mw} mW outside calibrated range [{lo}, {hi}]"
        )));
    }
    let upper = anchors.iter().position(|a| a.0 >= pump_mw).unwrap();
    if anchors[upper].0 == pump_mw {
        return Ok(anchors[upper].1.link.edfa.clone());
    }
    let (p0, s0) = anchors[upper - 1];
    let (p1, s1) = anchors[upper];
    let t = (pump_mw - p0) / (p1 - p0);
    let e0 = &s0.link.edfa;
    let e1 = &s1.link.edfa;
    let lerp = |a: f64, b: f64| a + t * (b - a);
    Ok(EdfaParams {
        small_signal_gain_db: e0.small_signal_gain_db.clone(),
        saturated_output_mw: lerp(e0.saturated_output_mw, e1.saturated_output_mw),
        noise_figure_db: e0
            .noise_figure_db
            .iter()
            .zip(&e1.noise_figure_db)
            .map(|(&a, &b)| lerp(a, b))
            .collect(),
        gff_loss_db: e0.gff_loss_db.clone(),
        pump_electrical_mw: pump_mw,
        ase_enabled: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form ASE for G = 16.2 dB, NF = 4.5 dB, nu = 193.5 THz,
    /// B = 50 GHz, evaluated independently at high precision and frozen.
    const ASE_GOLDEN_MW: f64 = 7.351263906362516e-4;

    fn grid() -> ChannelGrid {
        ChannelGrid::standard()
    }

    fn table() -> OperatingPointTable {
        OperatingPointTable::builtin()
    }

    #[test]
    fn identity_amplifier_passes_input_through() {
        let g = grid();
        let params = EdfaParams::flat_noiseless(0.0, 1e9, &g);
        let input: Vec<f64> = (0..40).map(|k| 0.1 + 0.01 * k as f64).collect();
        let out = amplify(&input, &params, &g).unwrap();
        for (a, b) in out.output_mw.iter().zip(&input) {
            assert!((a - b).abs() < 1e-15, "identity amplifier must not alter powers");
        }
        assert!(out.ase_mw.iter().all(|&a| a == 0.0));
        assert_eq!(out.compression_db, 0.0);
    }

    #[test]
    fn flat_gain_unsaturated_is_db_addition() {
        let g = grid();
        let params = EdfaParams::flat_noiseless(16.2, 1e9, &g);
        let input = vec![dbm_to_mw(-20.0); 40];
        let out = amplify(&input, &params, &g).unwrap();
        for &p in &out.output_mw {
            assert!((mw_to_dbm(p) - (-3.8)).abs() < 1e-12);
        }
    }

    #[test]
    fn ase_matches_closed_form_golden() {
        let mut g = grid();
        // Pin every carrier to 193.5 THz (up to 1-Hz spacing, which keeps the
        // grid strictly increasing) so each channel reproduces the
        // single-frequency closed form.
        g.center_frequencies_hz = (0..40).map(|k| 193.5e12 + k as f64).collect();
        let params = EdfaParams {
            small_signal_gain_db: vec![16.2; 40],
            saturated_output_mw: 1e9,
            noise_figure_db: vec![4.5; 40],
            gff_loss_db: None,
            pump_electrical_mw: 685.0,
            ase_enabled: true,
        };
        let input = vec![dbm_to_mw(-20.0); 40];
        let out = amplify(&input, &params, &g).unwrap();
        for &a in &out.ase_mw {
            assert!(
                ((a - ASE_GOLDEN_MW) / ASE_GOLDEN_MW).abs() < 1e-9,
                "ASE {a} deviates from golden {ASE_GOLDEN_MW}"
            );
        }
    }

    #[test]
    fn transparent_link_returns_tx_signal() {
        let g = grid();
        let params = EdfaParams::flat_noiseless(16.5, 1e9, &g);
        let config = LinkConfig {
            span_count: 12,
            span_loss_db: 16.5,
            edfa: params,
            grid: g,
        };
        let profile = PowerProfile::from_shape(
            &(0..40).map(|k| (k as f64) * 0.1).collect::<Vec<_>>(),
            13.0,
        )
        .unwrap();
        let rx = transmit(&profile, &config).unwrap();
        for (a, b) in rx.signal_dbm.iter().zip(profile.powers_dbm()) {
            assert!((a - b).abs() < 1e-9, "transparent link must return TX powers");
        }
    }

    #[test]
    fn single_span_noise_is_one_amplifier_ase() {
        let g = grid();
        let params = EdfaParams {
            small_signal_gain_db: vec![16.2; 40],
            saturated_output_mw: 1e9,
            noise_figure_db: vec![4.5; 40],
            gff_loss_db: None,
            pump_electrical_mw: 685.0,
            ase_enabled: true,
        };
        let config = LinkConfig {
            span_count: 1,
            span_loss_db: 10.0,
            edfa: params.clone(),
            grid: g.clone(),
        };
        let profile = PowerProfile::flat(40, 0.0);
        let rx = transmit(&profile, &config).unwrap();

        let attenuated: Vec<f64> = profile
            .powers_mw()
            .iter()
            .map(|p| p * db_to_linear(-10.0))
            .collect();
        let amp = amplify(&attenuated, &params, &g).unwrap();
        for (rx_n, ase) in rx.noise_dbm.iter().zip(&amp.ase_mw) {
            assert!((dbm_to_mw(*rx_n) - ase).abs() / ase < 1e-12);
        }
    }

    #[test]
    fn gff_free_rx_excursion_within_anchor_band() {
        let g = grid();
        let sc = scenario(&table(), &g, "150ma-nogff".parse().unwrap()).unwrap();
        let profile = PowerProfile::flat(40, sc.tx_total_dbm);
        let rx = transmit(&profile, &sc.link).unwrap();
        let excursion = peak_to_peak(&rx.signal_dbm);
        assert!(
            excursion > 5.0 && excursion < 25.0,
            "flat-TX RX excursion {excursion} dB outside (5, 25)"
        );
    }

    #[test]
    fn pce_basic_values() {
        assert!((pce(0.0, 100.0, 1000.0).unwrap() - 0.10).abs() < 1e-15);
        assert_eq!(pce(50.0, 50.0, 1000.0).unwrap(), 0.0);
        assert!(pce(0.0, 100.0, 0.0).is_err());
        assert!(matches!(
            pce(100.0, 50.0, 1000.0),
            Err(Error::NetLossDevice { .. })
        ));
    }

    #[test]
    fn pce_matches_derived_added_power() {
        // 0.149 * 685 = 102.1 mW of added power at the 450 mA point.
        let added = 0.149 * 685.0;
        let input = 11.6;
        let value = pce(input, input + added, 685.0).unwrap();
        assert!((value - 0.149).abs() < 1e-12);
    }

    #[test]
    fn calibration_reproduces_table_pce() {
        let g = grid();
        let scenarios = calibrate(&table(), &g).unwrap();
        let expected = [
            (75u32, true, 0.031),
            (75, false, 0.052),
            (150, true, 0.082),
            (150, false, 0.125),
            (450, true, 0.099),
            (450, false, 0.149),
        ];
        for (pump, gff, target) in expected {
            let sc = scenarios
                .iter()
                .find(|s| s.id.pump_ma == pump && s.id.gff == gff)
                .unwrap();
            let k = g.channel_count as f64;
            let input = vec![sc.nominal_input_mw / k; g.channel_count];
            let out = amplify(&input, &sc.link.edfa, &g).unwrap();
            let delivered: f64 = out.output_mw.iter().sum();
            let value = pce(sc.nominal_input_mw, delivered, sc.link.edfa.pump_electrical_mw).unwrap();
            let rel = (value - target).abs() / target;
            assert!(
                rel < 0.05,
                "{pump} mA gff={gff}: PCE {value:.4} vs target {target} (rel {rel:.3})"
            );
        }
    }

    #[test]
    fn calibration_hits_delivered_output_targets() {
        let g = grid();
        let scenarios = calibrate(&table(), &g).unwrap();
        for point in &table().points {
            let sc = scenarios
                .iter()
                .find(|s| s.id.pump_ma == point.pump_ma && s.id.gff)
                .unwrap();
            let delivered = delivered_saturated_output_mw(&sc.link.edfa, &g).unwrap();
            let rel = (delivered - dbm_to_mw(point.output_dbm)).abs() / dbm_to_mw(point.output_dbm);
            assert!(
                rel < 1e-9,
                "{} mA with GFF delivers {delivered} mW, target {} dBm",
                point.pump_ma,
                point.output_dbm
            );
        }
    }

    #[test]
    fn calibration_rejects_degenerate_targets() {
        let g = grid();
        let mut bad = table();
        bad.points[0].pce_with_gff = 0.0;
        assert!(matches!(
            calibrate(&bad, &g),
            Err(Error::InfeasibleCalibration(_))
        ));

        let mut bad = table();
        bad.points[1].pce_without_gff = 1.2;
        assert!(matches!(
            calibrate(&bad, &g),
            Err(Error::InfeasibleCalibration(_))
        ));
    }

    #[test]
    fn gff_loss_shape_is_nonnegative_for_all_points() {
        let g = grid();
        for sc in calibrate(&table(), &g).unwrap() {
            if let Some(gff) = &sc.link.edfa.gff_loss_db {
                assert!(gff.iter().all(|&l| l >= 0.0));
            }
        }
    }

    #[test]
    fn gain_monotone_in_total_input() {
        let g = grid();
        let sc = scenario(&table(), &g, "150ma-nogff".parse().unwrap()).unwrap();
        let base: Vec<f64> = (0..40).map(|k| 0.02 + 0.003 * k as f64).collect();
        let mut previous_gain = f64::INFINITY;
        for scale in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let input: Vec<f64> = base.iter().map(|p| p * scale).collect();
            let out = amplify(&input, &sc.link.edfa, &g).unwrap();
            let gain = out.gain_db[0];
            assert!(
                gain <= previous_gain + 1e-12,
                "gain increased with input power"
            );
            previous_gain = gain;
        }
    }

    #[test]
    fn total_output_respects_saturation_ceiling() {
        let g = grid();
        let sc = scenario(&table(), &g, "450ma-nogff".parse().unwrap()).unwrap();
        for scale in [1e-4, 1e-2, 1.0, 1e2, 1e4] {
            let input = vec![scale; 40];
            let out = amplify(&input, &sc.link.edfa, &g).unwrap();
            let total: f64 = out.output_mw.iter().sum();
            assert!(total <= sc.link.edfa.saturated_output_mw + 1e-9);
        }
    }

    #[test]
    fn rx_noise_positive_on_every_channel() {
        let g = grid();
        for sc in calibrate(&table(), &g).unwrap() {
            let profile = PowerProfile::flat(40, sc.tx_total_dbm);
            let rx = transmit(&profile, &sc.link).unwrap();
            assert!(rx.noise_dbm.iter().all(|n| n.is_finite()));
            assert!(rx
                .noise_dbm
                .iter()
                .all(|&n| dbm_to_mw(n) > 0.0));
        }
    }

    #[test]
    fn gff_wastes_delivered_power() {
        let g = grid();
        let scenarios = calibrate(&table(), &g).unwrap();
        for pump in [75u32, 150, 450] {
            let with = scenarios
                .iter()
                .find(|s| s.id.pump_ma == pump && s.id.gff)
                .unwrap();
            let without = scenarios
                .iter()
                .find(|s| s.id.pump_ma == pump && !s.id.gff)
                .unwrap();
            let d_with = delivered_saturated_output_mw(&with.link.edfa, &g).unwrap();
            let d_without = delivered_saturated_output_mw(&without.link.edfa, &g).unwrap();
            assert!(
                d_without >= d_with,
                "{pump} mA: GFF-free delivery {d_without} < with-GFF {d_with}"
            );
        }
    }

    #[test]
    fn noise_depends_on_signal_shape() {
        let g = grid();
        let sc = scenario(&table(), &g, "150ma-nogff".parse().unwrap()).unwrap();
        let ramp_up: Vec<f64> = (0..40).map(|k| k as f64).collect();
        let ramp_down: Vec<f64> = (0..40).map(|k| (39 - k) as f64).collect();
        let a = PowerProfile::from_shape(&ramp_up, sc.tx_total_dbm).unwrap();
        let b = PowerProfile::from_shape(&ramp_down, sc.tx_total_dbm).unwrap();
        assert!((a.total_mw() - b.total_mw()).abs() / a.total_mw() < 1e-12);

        let rx_a = transmit(&a, &sc.link).unwrap();
        let rx_b = transmit(&b, &sc.link).unwrap();
        let max_diff = rx_a
            .noise_dbm
            .iter()
            .zip(&rx_b.noise_dbm)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        assert!(
            max_diff > 3.0,
            "equal-total profiles produce only {max_diff} dB noise difference"
        );
    }

    #[test]
    fn transmit_is_deterministic() {
        let g = grid();
        let sc = scenario(&table(), &g, "75ma-gff".parse().unwrap()).unwrap();
        let shape: Vec<f64> = (0..40).map(|k| ((k * 7) % 13) as f64 * 0.7).collect();
        let profile = PowerProfile::from_shape(&shape, sc.tx_total_dbm).unwrap();
        let a = transmit(&profile, &sc.link).unwrap();
        let b = transmit(&profile, &sc.link).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn amplify_error_paths() {
        let g = grid();
        let params = EdfaParams::flat_noiseless(10.0, 1e9, &g);
        assert!(matches!(
            amplify(&vec![0.0; 40], &params, &g),
            Err(Error::NoOpticalInput)
        ));
        let mut bad = vec![1.0; 40];
        bad[3] = f64::NAN;
        assert!(matches!(
            amplify(&bad, &params, &g),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn pump_interpolation_hits_anchors_and_rejects_extrapolation() {
        let g = grid();
        let t = table();
        let at_anchor = params_for_pump(&t, &g, 207.0, false).unwrap();
        let sc = scenario(&t, &g, "150ma-nogff".parse().unwrap()).unwrap();
        assert_eq!(at_anchor.saturated_output_mw, sc.link.edfa.saturated_output_mw);

        let mid = params_for_pump(&t, &g, 400.0, false).unwrap();
        assert!(mid.saturated_output_mw > sc.link.edfa.saturated_output_mw);

        assert!(params_for_pump(&t, &g, 50.0, false).is_err());
        assert!(params_for_pump(&t, &g, 900.0, true).is_err());
    }

    #[test]
    fn scenario_id_round_trip() {
        for s in ["75ma-gff", "150ma-nogff", "450ma-gff"] {
            let id: ScenarioId = s.parse().unwrap();
            assert_eq!(id.to_string(), s);
        }
        assert!("150-nogff".parse::<ScenarioId>().is_err());
    }

    #[test]
    fn profile_invariants() {
        let p = PowerProfile::from_shape(&[0.0, 10.0, 20.0], 3.0).unwrap();
        p.validate().unwrap();
        assert!((p.excursion_db() - 20.0).abs() < 1e-12);
        assert!((p.total_dbm() - 3.0).abs() < 1e-12);

        assert!(PowerProfile::from_dbm(vec![0.0, f64::INFINITY]).is_err());
    }
}
