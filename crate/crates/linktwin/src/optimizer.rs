//! Capacity maximization on the twin by projected finite-difference gradient
//! ascent with profile smoothing, plus iterative and analytic waterfilling
//! baselines and the waterfilling-gain analysis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link_sim::PowerProfile;
use crate::metrics::capacity;
use crate::surrogate::MlpSurrogate;
use crate::units::{dbm_to_mw, mw_to_dbm, peak_to_peak};

const LN10: f64 = std::f64::consts::LN_10;
const LN2: f64 = std::f64::consts::LN_2;

/// How predicted RX powers turn into a capacity figure.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CapacityObjective {
    pub symbol_rate_hz: f64,
    pub eta: f64,
}

impl Default for CapacityObjective {
    fn default() -> Self {
        Self {
            symbol_rate_hz: 50e9,
            eta: 1.0,
        }
    }
}

impl CapacityObjective {
    /// Capacity of predicted signal/noise powers in dBm.
    pub fn of_outputs(&self, signal_dbm: &[f64], noise_dbm: &[f64]) -> Result<f64> {
        let snr: Vec<f64> = signal_dbm
            .iter()
            .zip(noise_dbm)
            .map(|(&s, &n)| 10f64.powf((s - n) / 10.0))
            .collect();
        capacity(&snr, self.symbol_rate_hz, self.eta)
    }
}

/// Gradient-descent configuration.
///
/// Steps are normalized: each iteration moves the profile by
/// `step_fraction * (P_O / K)` in the infinity norm along the projected
/// gradient direction, decaying geometrically by `step_decay` per iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GdConfig {
    /// Finite-difference perturbation in mW; default 1e-3 * (P_O / K).
    pub epsilon_mw: Option<f64>,
    pub step_fraction: f64,
    pub step_decay: f64,
    /// Neighbor weights of the post-update smoothing pass.
    pub smoothing: (f64, f64, f64),
    /// Apply the smoothing to dB powers instead of linear mW.
    pub smooth_in_db: bool,
    pub max_iterations: usize,
    /// Converged when the relative capacity gain over `tolerance_window`
    /// iterations drops below this.
    pub rel_tolerance: f64,
    pub tolerance_window: usize,
    pub total_power_dbm: f64,
    /// Channel power floor as a fraction of total power.
    pub floor_fraction: f64,
    pub objective: CapacityObjective,
    pub seed: u64,
}

impl GdConfig {
    pub fn new(total_power_dbm: f64) -> Self {
        Self {
            epsilon_mw: None,
            step_fraction: 0.5,
            step_decay: 0.98,
            smoothing: (0.03, 1.0, 0.03),
            smooth_in_db: false,
            max_iterations: 300,
            rel_tolerance: 1e-5,
            tolerance_window: 10,
            total_power_dbm,
            floor_fraction: 1e-6,
            objective: CapacityObjective::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon_mw.is_some_and(|e| e <= 0.0) {
            return Err(Error::InvalidConfig("epsilon must be > 0".into()));
        }
        if self.step_fraction <= 0.0 || !(0.0..=1.0).contains(&self.step_decay) {
            return Err(Error::InvalidConfig("bad step schedule".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if self.tolerance_window < 1 {
            return Err(Error::InvalidConfig("tolerance window must be >= 1".into()));
        }
        Ok(())
    }

    fn epsilon(&self, total_mw: f64, channels: usize) -> f64 {
        self.epsilon_mw
            .unwrap_or(1e-3 * total_mw / channels as f64)
    }
}

/// Capacity and extrapolation state of one twin evaluation.
fn evaluate(model: &MlpSurrogate, powers_mw: &[f64], objective: &CapacityObjective) -> Result<(f64, bool)> {
    let dbm: Vec<f64> = powers_mw.iter().map(|&p| mw_to_dbm(p)).collect();
    let pred = model.forward(&dbm)?;
    let c = objective.of_outputs(&pred.signal_dbm, &pred.noise_dbm)?;
    Ok((c, pred.extrapolated))
}

/// Result of a finite-difference gradient estimate.
#[derive(Debug, Clone)]
pub struct FdGradient {
    /// dC/dP per channel, bit/s per mW, projected onto the sum constraint.
    pub gradient: Vec<f64>,
    /// Capacity at the unperturbed profile.
    pub base_capacity_bps: f64,
    /// Any of the 41 evaluations left the twin's training range.
    pub extrapolated: bool,
}

/// Estimate the constrained capacity gradient by 41 twin evaluations: the
/// base profile plus one per-channel perturbation of `epsilon` mW, each
/// rescaled back to the total power before evaluation.
pub fn fd_gradient(
    model: &MlpSurrogate,
    profile: &PowerProfile,
    epsilon_mw: f64,
    objective: &CapacityObjective,
) -> Result<FdGradient> {
    if epsilon_mw <= 0.0 {
        return Err(Error::InvalidConfig("epsilon must be > 0".into()));
    }
    profile.validate()?;
    let powers = profile.powers_mw();
    let total: f64 = powers.iter().sum();
    let (base, mut extrapolated) = evaluate(model, &powers, objective)?;

    let mut gradient = vec![0.0; powers.len()];
    for k in 0..powers.len() {
        let scale = total / (total + epsilon_mw);
        let perturbed: Vec<f64> = powers
            .iter()
            .enumerate()
            .map(|(i, &p)| (if i == k { p + epsilon_mw } else { p }) * scale)
            .collect();
        let (c, extra) = evaluate(model, &perturbed, objective)?;
        extrapolated |= extra;
        gradient[k] = (c - base) / epsilon_mw;
    }
    Ok(FdGradient {
        gradient,
        base_capacity_bps: base,
        extrapolated,
    })
}

/// Analytic capacity gradient: backpropagation through the twin chained with
/// the capacity formula and the exact Jacobian of the total-power rescaling.
pub fn analytic_gradient(
    model: &MlpSurrogate,
    profile: &PowerProfile,
    objective: &CapacityObjective,
) -> Result<Vec<f64>> {
    profile.validate()?;
    let powers = profile.powers_mw();
    let total: f64 = powers.iter().sum();
    let dbm = profile.powers_dbm();
    let pred = model.forward(dbm)?;
    let k = pred.signal_dbm.len();

    // dC/d(predicted dB power): +/- 2 Rs eta snr ln10 / (10 ln2 (1 + eta snr)).
    let mut dl_dy = vec![0.0; 2 * k];
    for ch in 0..k {
        let snr = 10f64.powf((pred.signal_dbm[ch] - pred.noise_dbm[ch]) / 10.0);
        let d = 2.0 * objective.symbol_rate_hz * objective.eta * snr * LN10
            / (10.0 * LN2 * (1.0 + objective.eta * snr));
        dl_dy[ch] = d;
        dl_dy[k + ch] = -d;
    }

    let grad_dbm = model.input_gradient_dbm(dbm, &dl_dy);
    // dBm -> mW chain rule, then project onto the sum constraint.
    let grad_mw: Vec<f64> = grad_dbm
        .iter()
        .zip(&powers)
        .map(|(&g, &p)| g * 10.0 / (LN10 * p))
        .collect();
    let radial: f64 = grad_mw.iter().zip(&powers).map(|(&g, &p)| g * p).sum::<f64>() / total;
    Ok(grad_mw.iter().map(|&g| g - radial).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub powers_dbm: Vec<f64>,
    pub capacity_bps: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub final_profile: PowerProfile,
    pub final_capacity_bps: f64,
    pub best_capacity_bps: f64,
    /// Number of iterations whose gradient estimate saw the extrapolation
    /// flag.
    pub extrapolation_events: usize,
}

/// Maximize predicted capacity over the launch profile by projected gradient
/// ascent with per-iteration smoothing and exact renormalization to the
/// total power.
pub fn gd_maximize(
    model: &MlpSurrogate,
    initial: &PowerProfile,
    cfg: &GdConfig,
) -> Result<OptimizationTrace> {
    cfg.validate()?;
    initial.validate()?;
    let total_mw = dbm_to_mw(cfg.total_power_dbm);
    let channels = initial.channel_count();
    let epsilon = cfg.epsilon(total_mw, channels);
    let floor = cfg.floor_fraction * total_mw;

    // Bring the initial onto the configured total if it differs.
    let mut powers = initial.powers_mw();
    renormalize(&mut powers, total_mw);

    let mut iterations: Vec<IterationRecord> = Vec::with_capacity(cfg.max_iterations);
    let mut extrapolation_events = 0;
    let mut best_capacity = f64::NEG_INFINITY;
    let mut converged = false;
    let mut step = cfg.step_fraction * total_mw / channels as f64;

    for iter in 0..cfg.max_iterations {
        let profile = PowerProfile::from_mw(&powers)?;
        let fd = fd_gradient(model, &profile, epsilon, &cfg.objective)?;
        if !fd.base_capacity_bps.is_finite() {
            return Err(Error::NonFiniteCapacity { iteration: iter });
        }
        if fd.extrapolated {
            extrapolation_events += 1;
        }
        best_capacity = best_capacity.max(fd.base_capacity_bps);
        let grad_norm = fd.gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
        iterations.push(IterationRecord {
            powers_dbm: profile.powers_dbm().to_vec(),
            capacity_bps: fd.base_capacity_bps,
            gradient_norm: grad_norm,
        });

        // Stop when the windowed relative gain has flattened out.
        if iter >= cfg.tolerance_window {
            let past = iterations[iter - cfg.tolerance_window].capacity_bps;
            let gain = (fd.base_capacity_bps - past) / past.abs();
            if gain < cfg.rel_tolerance {
                converged = true;
                break;
            }
        }

        let max_component = fd
            .gradient
            .iter()
            .fold(0.0f64, |acc, g| acc.max(g.abs()));
        if max_component > 0.0 {
            let scale = step / max_component;
            for (p, g) in powers.iter_mut().zip(&fd.gradient) {
                *p += scale * g;
            }
        }
        for p in powers.iter_mut() {
            *p = p.max(floor);
        }
        if cfg.smooth_in_db {
            let mut db: Vec<f64> = powers.iter().map(|&p| mw_to_dbm(p)).collect();
            db = smooth(&db, cfg.smoothing);
            powers = db.iter().map(|&v| dbm_to_mw(v)).collect();
        } else {
            powers = smooth(&powers, cfg.smoothing);
        }
        renormalize(&mut powers, total_mw);
        let sum: f64 = powers.iter().sum();
        assert!(
            ((sum - total_mw) / total_mw).abs() <= 1e-9,
            "total-power constraint violated in GD loop"
        );
        step *= cfg.step_decay;
    }

    let final_profile = PowerProfile::from_mw(&powers)?;
    let (final_capacity, _) = evaluate(model, &powers, &cfg.objective)?;
    best_capacity = best_capacity.max(final_capacity);
    Ok(OptimizationTrace {
        iterations,
        converged,
        final_profile,
        final_capacity_bps: final_capacity,
        best_capacity_bps: best_capacity,
        extrapolation_events,
    })
}

/// Appendix-style neighbor smoothing with the window truncated at the band
/// edges (out-of-range terms dropped, no weight renormalization; the global
/// rescale absorbs the window gain).
fn smooth(values: &[f64], weights: (f64, f64, f64)) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let mut v = weights.1 * values[k];
            if k > 0 {
                v += weights.0 * values[k - 1];
            }
            if k + 1 < n {
                v += weights.2 * values[k + 1];
            }
            v
        })
        .collect()
}

fn renormalize(powers: &mut [f64], total_mw: f64) {
    let sum: f64 = powers.iter().sum();
    let scale = total_mw / sum;
    for p in powers.iter_mut() {
        *p *= scale;
    }
}

/// One gradient-descent run of a campaign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignRun {
    pub initial_powers_dbm: Vec<f64>,
    pub initial_capacity_bps: f64,
    pub trace: OptimizationTrace,
}

/// Run independent GD optimizations from many initials against a shared
/// immutable twin.
pub fn gd_campaign(
    model: &MlpSurrogate,
    initials: &[PowerProfile],
    cfg: &GdConfig,
) -> Result<Vec<CampaignRun>> {
    if initials.is_empty() {
        return Err(Error::InvalidConfig("no initial profiles".into()));
    }
    initials
        .par_iter()
        .map(|initial| {
            let trace = gd_maximize(model, initial, cfg)?;
            let initial_capacity = trace
                .iterations
                .first()
                .map(|r| r.capacity_bps)
                .unwrap_or(f64::NAN);
            Ok(CampaignRun {
                initial_powers_dbm: initial.powers_dbm().to_vec(),
                initial_capacity_bps: initial_capacity,
                trace,
            })
        })
        .collect()
}

/// Batch statistics over a campaign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub runs: usize,
    pub best_capacity_bps: f64,
    /// (max - min) / max over converged final capacities.
    pub capacity_spread: f64,
    /// Runs finishing more than 1% below the batch best.
    pub outliers: Vec<usize>,
    pub converged_runs: usize,
}

pub fn summarize_campaign(runs: &[CampaignRun]) -> CampaignSummary {
    let best = runs
        .iter()
        .map(|r| r.trace.final_capacity_bps)
        .fold(f64::NEG_INFINITY, f64::max);
    let outliers: Vec<usize> = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.trace.final_capacity_bps < best * 0.99)
        .map(|(i, _)| i)
        .collect();
    let converged: Vec<f64> = runs
        .iter()
        .filter(|r| r.trace.converged)
        .map(|r| r.trace.final_capacity_bps)
        .collect();
    let spread = if converged.is_empty() {
        f64::NAN
    } else {
        let max = converged.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = converged.iter().cloned().fold(f64::INFINITY, f64::min);
        (max - min) / max
    };
    CampaignSummary {
        runs: runs.len(),
        best_capacity_bps: best,
        capacity_spread: spread,
        outliers,
        converged_runs: converged.len(),
    }
}

/// Iterative waterfilling configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaterfillConfig {
    /// dB correction per dB of distance from the water level.
    pub step_gain: f64,
    /// Converged when RX signal+noise peak-to-peak spread drops below this.
    pub flatness_tol_db: f64,
    pub max_iterations: usize,
    /// Abort when flatness has not improved for this many iterations.
    pub stall_window: usize,
    pub total_power_dbm: f64,
}

impl WaterfillConfig {
    pub fn new(total_power_dbm: f64) -> Self {
        Self {
            step_gain: 0.2,
            flatness_tol_db: 0.05,
            max_iterations: 1000,
            stall_window: 50,
            total_power_dbm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.step_gain <= 0.0 || self.flatness_tol_db <= 0.0 || self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "waterfill parameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaterfillTrace {
    pub flatness_db: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
}

/// Iteratively raise TX powers whose RX signal+noise sits below the mean
/// water level (and vice versa) until the received spectrum is flat.
///
/// `transfer` maps a profile to (signal mW, noise mW) and may be either the
/// ground-truth simulator or the twin. Returns the best profile found plus
/// the flatness history; stalling for `stall_window` iterations returns the
/// best-so-far with `converged = false`.
pub fn iterative_waterfill<F>(
    transfer: F,
    initial: &PowerProfile,
    cfg: &WaterfillConfig,
) -> Result<(PowerProfile, WaterfillTrace)>
where
    F: Fn(&PowerProfile) -> Result<(Vec<f64>, Vec<f64>)>,
{
    cfg.validate()?;
    initial.validate()?;
    let total_mw = dbm_to_mw(cfg.total_power_dbm);

    let mut powers = initial.powers_mw();
    renormalize(&mut powers, total_mw);
    let mut flatness_history = Vec::new();
    let mut best_profile = PowerProfile::from_mw(&powers)?;
    let mut best_flatness = f64::INFINITY;
    let mut since_improvement = 0usize;
    let mut converged = false;

    for iter in 0..cfg.max_iterations {
        let profile = PowerProfile::from_mw(&powers)?;
        let (signal, noise) = transfer(&profile)?;
        let rx_db: Vec<f64> = signal
            .iter()
            .zip(&noise)
            .map(|(&s, &n)| mw_to_dbm(s + n))
            .collect();
        let flatness = peak_to_peak(&rx_db);
        flatness_history.push(flatness);

        if flatness < best_flatness {
            best_flatness = flatness;
            best_profile = profile.clone();
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if flatness <= cfg.flatness_tol_db {
            best_profile = profile;
            converged = true;
            break;
        }
        if since_improvement >= cfg.stall_window {
            break;
        }

        let mean: f64 = rx_db.iter().sum::<f64>() / rx_db.len() as f64;
        let next_db: Vec<f64> = profile
            .powers_dbm()
            .iter()
            .zip(&rx_db)
            .map(|(&p, &y)| p + cfg.step_gain * (mean - y))
            .collect();
        let next = PowerProfile::from_shape(&next_db, cfg.total_power_dbm)?;
        powers = next.powers_mw();
        let sum: f64 = powers.iter().sum();
        assert!(
            ((sum - total_mw) / total_mw).abs() <= 1e-9,
            "total-power constraint violated in waterfilling loop at iteration {iter}"
        );
    }

    let iterations_used = flatness_history.len();
    Ok((
        best_profile,
        WaterfillTrace {
            flatness_db: flatness_history,
            converged,
            iterations_used,
        },
    ))
}

/// Classic waterfilling against signal-independent noise: bisection on the
/// water level until the allocation spends the whole budget, then an exact
/// active-set polish.
pub fn analytic_waterfill(noise_mw: &[f64], total_mw: f64) -> Result<Vec<f64>> {
    if noise_mw.is_empty() {
        return Err(Error::InvalidConfig("no channels".into()));
    }
    if noise_mw.iter().any(|&n| !(n > 0.0) || !n.is_finite()) {
        return Err(Error::InvalidConfig("noise must be finite and > 0".into()));
    }
    if !(total_mw > 0.0) {
        return Err(Error::InvalidConfig("total power must be > 0".into()));
    }

    let spend = |w: f64| -> f64 { noise_mw.iter().map(|&n| (w - n).max(0.0)).sum() };
    let mut lo = noise_mw.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = noise_mw.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + total_mw;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spend(mid) < total_mw {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Exact polish on the active set fixed by the bisected level. Powers are
    // assembled from noise differences (cancellation-free for small budgets),
    // negative marginal channels are dropped, and the result is rescaled so
    // the allocation spends exactly the budget.
    let w_bisect = 0.5 * (lo + hi);
    let mut active: Vec<usize> = (0..noise_mw.len())
        .filter(|&k| noise_mw[k] < w_bisect)
        .collect();
    let mut powers = vec![0.0; noise_mw.len()];
    loop {
        powers.iter_mut().for_each(|p| *p = 0.0);
        let count = active.len() as f64;
        for &k in &active {
            let diff_sum: f64 = active.iter().map(|&j| noise_mw[j] - noise_mw[k]).sum();
            powers[k] = (total_mw + diff_sum) / count;
        }
        let violations: Vec<usize> = active
            .iter()
            .cloned()
            .filter(|&k| powers[k] < 0.0)
            .collect();
        if violations.is_empty() {
            break;
        }
        active.retain(|k| !violations.contains(k));
    }
    let sum: f64 = powers.iter().sum();
    let scale = total_mw / sum;
    for p in powers.iter_mut() {
        *p *= scale;
    }
    Ok(powers)
}

/// Capacity ratio of analytic waterfilling over the constant-SNR baseline on
/// a log-uniformly colored noise floor.
///
/// The noise vector spans `fn_db` decibels max-to-min on a uniform dB grid;
/// the baseline allocates power proportional to noise so every channel sits
/// at the stated overall SNR; waterfilling reallocates the same total power.
pub fn waterfill_gain_analysis(fn_db: f64, mean_snr_db: f64, channels: usize) -> Result<f64> {
    if channels < 2 {
        return Err(Error::InvalidConfig("need at least 2 channels".into()));
    }
    if fn_db < 0.0 {
        return Err(Error::InvalidConfig("noise excursion must be >= 0".into()));
    }
    let noise: Vec<f64> = (0..channels)
        .map(|k| {
            let db = -fn_db / 2.0 + fn_db * k as f64 / (channels - 1) as f64;
            10f64.powf(db / 10.0)
        })
        .collect();
    let snr = 10f64.powf(mean_snr_db / 10.0);
    let total_noise: f64 = noise.iter().sum();
    let total_power = snr * total_noise;

    let wf = analytic_waterfill(&noise, total_power)?;
    let capacity_of = |alloc: &[f64]| -> f64 {
        alloc
            .iter()
            .zip(&noise)
            .map(|(&p, &n)| (1.0 + p / n).log2())
            .sum()
    };
    let baseline: Vec<f64> = noise.iter().map(|&n| snr * n).collect();
    Ok(capacity_of(&wf) / capacity_of(&baseline))
}

/// KKT residual of a waterfilling allocation: deviation of active channels
/// from a common water level, and water-level violations by inactive ones.
pub fn waterfill_kkt_residual(noise_mw: &[f64], powers_mw: &[f64]) -> f64 {
    let levels: Vec<f64> = noise_mw
        .iter()
        .zip(powers_mw)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&n, &p)| n + p)
        .collect();
    if levels.is_empty() {
        return f64::INFINITY;
    }
    let w = levels.iter().sum::<f64>() / levels.len() as f64;
    let mut residual = peak_to_peak(&levels);
    for (&n, &p) in noise_mw.iter().zip(powers_mw) {
        if p == 0.0 && n < w {
            residual = residual.max(w - n);
        }
    }
    residual
}

/// Flat, ramp, and seeded-random initial profiles used by campaigns.
pub fn canonical_initials(
    channels: usize,
    total_dbm: f64,
    random_count: usize,
    max_excursion_db: f64,
    seed: u64,
) -> Result<Vec<PowerProfile>> {
    use crate::profile_gen::{excursion_schedule, generate_batch, ProfileBatchSpec};

    let mut initials = vec![PowerProfile::flat(channels, total_dbm)];
    let ramp: Vec<f64> = (0..channels).map(|k| k as f64).collect();
    initials.push(crate::profile_gen::rescale_to_excursion(
        &ramp,
        max_excursion_db.min(20.0),
        total_dbm,
    )?);
    if random_count > 0 {
        let spec = ProfileBatchSpec {
            count: random_count,
            excursion_schedule_db: excursion_schedule(random_count, 6.0, max_excursion_db),
            candidates_per_draw: 1,
            total_power_dbm: total_dbm,
            channels,
            seed,
        };
        initials.extend(generate_batch(&spec)?);
    }
    Ok(initials)
}
