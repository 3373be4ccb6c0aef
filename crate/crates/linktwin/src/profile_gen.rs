//! Random TX power profile generation.
//!
//! Profiles are drawn as cumulative random walks, smoothed by a 3-bin
//! weighted moving average, screened for diversity by maximizing the minimum
//! relative entropy against previously accepted profiles, and finally
//! rescaled to a target peak-to-peak excursion under the total-power
//! constraint.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link_sim::PowerProfile;
use crate::units::peak_to_peak;

/// Moving-average weights over 3 frequency bins, truncated and renormalized
/// at the band edges.
const SMOOTHING_WEIGHTS: [f64; 3] = [0.25, 0.5, 0.25];

/// Batch request: how many profiles, their excursion schedule, and the
/// candidate pool size per draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileBatchSpec {
    pub count: usize,
    /// Target excursion F per profile, dB, non-decreasing.
    pub excursion_schedule_db: Vec<f64>,
    pub candidates_per_draw: usize,
    pub total_power_dbm: f64,
    pub channels: usize,
    pub seed: u64,
}

impl ProfileBatchSpec {
    /// Standard batch: excursions linearly spaced from 6 to 45 dB.
    pub fn new(count: usize, total_power_dbm: f64, seed: u64) -> Self {
        Self {
            count,
            excursion_schedule_db: excursion_schedule(count, 6.0, 45.0),
            candidates_per_draw: 100,
            total_power_dbm,
            channels: 40,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::InvalidConfig("count must be >= 1".into()));
        }
        if self.candidates_per_draw < 1 {
            return Err(Error::InvalidConfig(
                "candidates_per_draw must be >= 1".into(),
            ));
        }
        if self.excursion_schedule_db.len() != self.count {
            return Err(Error::InvalidConfig(format!(
                "schedule has {} entries for {} profiles",
                self.excursion_schedule_db.len(),
                self.count
            )));
        }
        if self.excursion_schedule_db.iter().any(|&f| f <= 0.0) {
            return Err(Error::InvalidConfig("excursions must be > 0".into()));
        }
        if self.channels < 2 {
            return Err(Error::InvalidConfig("channels must be >= 2".into()));
        }
        Ok(())
    }
}

/// Excursion targets linearly spaced over the batch.
pub fn excursion_schedule(count: usize, from_db: f64, to_db: f64) -> Vec<f64> {
    if count == 1 {
        return vec![from_db];
    }
    (0..count)
        .map(|n| from_db + (to_db - from_db) * n as f64 / (count - 1) as f64)
        .collect()
}

/// Cumulative walk from explicit steps: `P_k = P_{k-1} + U_k` with `P_0 = 0`.
pub fn walk_from_steps(steps: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    steps
        .iter()
        .map(|&u| {
            acc += u;
            acc
        })
        .collect()
}

/// Weighted moving average over 3 frequency bins, weights truncated and
/// renormalized at the band edges.
pub fn smooth_3bin(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut num = 0.0;
        let mut den = 0.0;
        for (offset, &w) in SMOOTHING_WEIGHTS.iter().enumerate() {
            let idx = k as isize + offset as isize - 1;
            if idx >= 0 && (idx as usize) < n {
                num += w * values[idx as usize];
                den += w;
            }
        }
        out.push(num / den);
    }
    out
}

fn raw_walk(rng: &mut ChaCha8Rng, channels: usize) -> Vec<f64> {
    let steps: Vec<f64> = (0..channels).map(|_| rng.gen::<f64>() - 0.5).collect();
    walk_from_steps(&steps)
}

/// One raw profile shape in dB-relative units: a cumulative random walk with
/// uniform (-0.5, 0.5) steps, smoothed over 3 bins.
pub fn random_walk_profile(rng: &mut ChaCha8Rng, channels: usize) -> Vec<f64> {
    smooth_3bin(&raw_walk(rng, channels))
}

/// Affine-rescale a dB shape so its excursion hits `excursion_db` exactly,
/// then shift so the linear-domain sum equals `total_power_dbm`.
pub fn rescale_to_excursion(
    shape_db: &[f64],
    excursion_db: f64,
    total_power_dbm: f64,
) -> Result<PowerProfile> {
    if shape_db.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("profile shape".into()));
    }
    if excursion_db < 0.0 {
        return Err(Error::InvalidConfig("excursion must be >= 0".into()));
    }
    let range = peak_to_peak(shape_db);
    let scaled: Vec<f64> = if excursion_db == 0.0 {
        vec![0.0; shape_db.len()]
    } else if range == 0.0 {
        return Err(Error::ZeroExcursion {
            target_db: excursion_db,
        });
    } else {
        let scale = excursion_db / range;
        shape_db.iter().map(|&v| v * scale).collect()
    };
    PowerProfile::from_shape(&scaled, total_power_dbm)
}

/// A profile prepared for relative-entropy comparison: log-powers affinely
/// mapped to [0.1, 1], then normalized to a probability vector.
#[derive(Debug, Clone)]
pub struct KlPrepared {
    pub probs: Vec<f64>,
    /// Cached `sum p ln p`.
    entropy_term: f64,
}

/// Transform a dB shape into the comparison distribution.
pub fn prepare_for_kl(shape_db: &[f64]) -> Result<KlPrepared> {
    if shape_db.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("profile shape".into()));
    }
    let lo = shape_db.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = shape_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mapped: Vec<f64> = if hi == lo {
        vec![0.1; shape_db.len()]
    } else {
        shape_db
            .iter()
            .map(|&v| 0.1 + 0.9 * (v - lo) / (hi - lo))
            .collect()
    };
    if mapped.iter().any(|&v| v <= 0.0) {
        return Err(Error::KlUndefined);
    }
    let sum: f64 = mapped.iter().sum();
    let probs: Vec<f64> = mapped.iter().map(|&v| v / sum).collect();
    let entropy_term = probs.iter().map(|&p| p * p.ln()).sum();
    Ok(KlPrepared {
        probs,
        entropy_term,
    })
}

/// Relative entropy `D(p || q)` in nats over prepared distributions.
pub fn kl_divergence(p: &KlPrepared, q: &KlPrepared) -> f64 {
    p.entropy_term
        - p.probs
            .iter()
            .zip(&q.probs)
            .map(|(&pi, &qi)| pi * qi.ln())
            .sum::<f64>()
}

/// Diversity score of a candidate: its minimum relative entropy
/// `min_i D(accepted_i || candidate)` against all accepted profiles.
/// Vacuously infinite when nothing has been accepted yet.
pub fn min_kl_against(accepted: &[KlPrepared], candidate: &KlPrepared) -> f64 {
    let ln_q: Vec<f64> = candidate.probs.iter().map(|&q| q.ln()).collect();
    accepted
        .iter()
        .map(|p| {
            p.entropy_term
                - p.probs
                    .iter()
                    .zip(&ln_q)
                    .map(|(&pi, &lq)| pi * lq)
                    .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Pick the candidate with the greatest minimum relative entropy against the
/// accepted set. Returns the winning index and every candidate's score; ties
/// break toward the lowest index, and an empty accepted set selects the
/// first candidate.
pub fn select_diverse(
    candidates: &[KlPrepared],
    accepted: &[KlPrepared],
) -> Result<(usize, Vec<f64>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no candidates to select from".into()));
    }
    let scores: Vec<f64> = candidates
        .par_iter()
        .map(|c| min_kl_against(accepted, c))
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok((best, scores))
}

/// Generate a full batch: `count` profiles, each diversity-selected from
/// `candidates_per_draw` random walks and rescaled to its scheduled
/// excursion under the total-power constraint. Fully reproducible from the
/// spec's seed.
pub fn generate_batch(spec: &ProfileBatchSpec) -> Result<Vec<PowerProfile>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut accepted: Vec<KlPrepared> = Vec::with_capacity(spec.count);
    let mut profiles = Vec::with_capacity(spec.count);

    for n in 0..spec.count {
        let raws: Vec<Vec<f64>> = (0..spec.candidates_per_draw)
            .map(|_| random_walk_profile(&mut rng, spec.channels))
            .collect();
        let prepared: Vec<KlPrepared> = raws
            .par_iter()
            .map(|r| prepare_for_kl(r))
            .collect::<Result<_>>()?;
        let (idx, _) = select_diverse(&prepared, &accepted)?;
        accepted.push(prepared[idx].clone());
        profiles.push(rescale_to_excursion(
            &raws[idx],
            spec.excursion_schedule_db[n],
            spec.total_power_dbm,
        )?);
    }
    Ok(profiles)
}

/// Smallest pairwise relative entropy over a set of profiles; the batch
/// diversity statistic.
pub fn min_pairwise_kl(shapes: &[Vec<f64>]) -> Result<f64> {
    let prepared: Vec<KlPrepared> = shapes
        .iter()
        .map(|s| prepare_for_kl(s))
        .collect::<Result<_>>()?;
    let mut min = f64::INFINITY;
    for i in 0..prepared.len() {
        for j in 0..prepared.len() {
            if i != j {
                min = min.min(kl_divergence(&prepared[i], &prepared[j]));
            }
        }
    }
    Ok(min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{dbm_to_mw, mw_to_dbm};

    #[test]
    fn zero_steps_make_flat_profile() {
        let profile = smooth_3bin(&walk_from_steps(&[0.0; 40]));
        assert!(profile.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_steps_make_monotone_ramp() {
        let raw = walk_from_steps(&[0.4; 40]);
        for pair in raw.windows(2) {
            assert!(pair[1] > pair[0], "raw ramp must be strictly increasing");
        }
        let smoothed = smooth_3bin(&raw);
        // Interior points of a linear ramp are unchanged and monotone.
        for k in 1..39 {
            assert!((smoothed[k] - raw[k]).abs() < 1e-12);
        }
        for pair in smoothed.windows(2) {
            assert!(pair[1] > pair[0], "smoothing must preserve ramp monotonicity");
        }
    }

    #[test]
    fn walk_endpoint_statistics_match_uniform_sum() {
        // P_40 is a sum of 40 iid Uniform(-0.5, 0.5): mean 0, variance 40/12.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let end = *raw_walk(&mut rng, 40).last().unwrap();
            sum += end;
            sum_sq += end * end;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.03, "mean {mean} deviates from 0");
        assert!((var - 40.0 / 12.0).abs() < 0.1, "variance {var} deviates from 10/3");
    }

    #[test]
    fn rescale_keeps_ramp_already_at_target() {
        let ramp: Vec<f64> = (0..40).map(|k| k as f64).collect();
        let p = rescale_to_excursion(&ramp, 39.0, 13.0).unwrap();
        assert!((p.excursion_db() - 39.0).abs() < 1e-9);
        // Shape preserved: consecutive differences stay 1 dB.
        let v = p.powers_dbm();
        for pair in v.windows(2) {
            assert!((pair[1] - pair[0] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rescale_hits_requested_excursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let shape = random_walk_profile(&mut rng, 40);
            let p = rescale_to_excursion(&shape, 20.0, 13.0).unwrap();
            assert!((p.excursion_db() - 20.0).abs() < 1e-9);
            let sum: f64 = p.powers_mw().iter().sum();
            assert!(((sum - dbm_to_mw(13.0)) / dbm_to_mw(13.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn rescale_flat_with_zero_excursion() {
        let p = rescale_to_excursion(&[5.0; 40], 0.0, 13.0).unwrap();
        let expected = 13.0 - 10.0 * 40f64.log10();
        for &v in p.powers_dbm() {
            assert!((v - expected).abs() < 1e-9, "flat split must be total - 16.02 dB");
        }
        assert!((expected - (13.0 - 16.020599913279624)).abs() < 1e-12);
    }

    #[test]
    fn rescale_rejects_constant_profile_with_positive_target() {
        assert!(matches!(
            rescale_to_excursion(&[1.0; 40], 10.0, 13.0),
            Err(Error::ZeroExcursion { .. })
        ));
    }

    #[test]
    fn empty_accepted_returns_first_candidate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let candidates: Vec<KlPrepared> = (0..10)
            .map(|_| prepare_for_kl(&random_walk_profile(&mut rng, 40)).unwrap())
            .collect();
        let (idx, scores) = select_diverse(&candidates, &[]).unwrap();
        assert_eq!(idx, 0);
        assert!(scores.iter().all(|s| s.is_infinite()));
    }

    #[test]
    fn spike_is_farther_from_uniform_than_uniform() {
        let uniform = prepare_for_kl(&[0.0; 40]).unwrap();
        let mut spike_shape = vec![0.0; 40];
        spike_shape[7] = 30.0;
        let spike = prepare_for_kl(&spike_shape).unwrap();

        // Brute-force oracle: D(uniform || spike) and D(uniform || uniform).
        let d_spike: f64 = uniform
            .probs
            .iter()
            .zip(&spike.probs)
            .map(|(&p, &q)| p * (p / q).ln())
            .sum();
        let d_self: f64 = 0.0;
        assert!(d_spike > d_self);

        let candidates = vec![uniform.clone(), spike];
        let (idx, scores) = select_diverse(&candidates, &[uniform]).unwrap();
        assert_eq!(idx, 1, "the spike must win, scores {scores:?}");
        assert!((scores[1] - d_spike).abs() < 1e-12);
        assert!(scores[0].abs() < 1e-12);
    }

    #[test]
    fn selection_is_argmax_with_lowest_index_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let accepted: Vec<KlPrepared> = (0..5)
            .map(|_| prepare_for_kl(&random_walk_profile(&mut rng, 40)).unwrap())
            .collect();
        let candidates: Vec<KlPrepared> = (0..20)
            .map(|_| prepare_for_kl(&random_walk_profile(&mut rng, 40)).unwrap())
            .collect();
        let (idx, scores) = select_diverse(&candidates, &accepted).unwrap();
        for (i, &s) in scores.iter().enumerate() {
            assert!(scores[idx] >= s, "candidate {i} outscores the winner");
        }
        // Duplicate the winner ahead of itself: the earlier copy must win.
        let mut shuffled = candidates.clone();
        shuffled.insert(0, candidates[idx].clone());
        let (idx2, _) = select_diverse(&shuffled, &accepted).unwrap();
        assert_eq!(idx2, 0);
    }

    #[test]
    fn single_profile_batch() {
        let mut spec = ProfileBatchSpec::new(1, 13.0, 42);
        spec.excursion_schedule_db = vec![6.0];
        let batch = generate_batch(&spec).unwrap();
        assert_eq!(batch.len(), 1);
        assert!((batch[0].excursion_db() - 6.0).abs() < 1e-6);
        let sum: f64 = batch[0].powers_mw().iter().sum();
        assert!(((sum - dbm_to_mw(13.0)) / dbm_to_mw(13.0)).abs() < 1e-9);
    }

    #[test]
    fn batches_are_reproducible() {
        let spec = ProfileBatchSpec {
            count: 12,
            excursion_schedule_db: excursion_schedule(12, 6.0, 45.0),
            candidates_per_draw: 10,
            total_power_dbm: 13.0,
            channels: 40,
            seed: 7,
        };
        let a = generate_batch(&spec).unwrap();
        let b = generate_batch(&spec).unwrap();
        assert_eq!(a, b, "same seed must give bit-identical batches");
    }

    #[test]
    fn batch_satisfies_schedule_and_power_invariants() {
        let spec = ProfileBatchSpec {
            count: 30,
            excursion_schedule_db: excursion_schedule(30, 6.0, 45.0),
            candidates_per_draw: 8,
            total_power_dbm: 14.6,
            channels: 40,
            seed: 21,
        };
        let batch = generate_batch(&spec).unwrap();
        let total = dbm_to_mw(spec.total_power_dbm);
        for (profile, &f) in batch.iter().zip(&spec.excursion_schedule_db) {
            let sum: f64 = profile.powers_mw().iter().sum();
            assert!(((sum - total) / total).abs() <= 1e-9);
            assert!((profile.excursion_db() - f).abs() <= 1e-6);
        }
    }

    #[test]
    fn diversity_selection_beats_iid_draws() {
        let selected_spec = ProfileBatchSpec {
            count: 100,
            excursion_schedule_db: excursion_schedule(100, 6.0, 45.0),
            candidates_per_draw: 100,
            total_power_dbm: 13.0,
            channels: 40,
            seed: 1,
        };
        let iid_spec = ProfileBatchSpec {
            candidates_per_draw: 1,
            ..selected_spec.clone()
        };
        let selected = generate_batch(&selected_spec).unwrap();
        let iid = generate_batch(&iid_spec).unwrap();

        let shapes = |batch: &[PowerProfile]| -> Vec<Vec<f64>> {
            batch.iter().map(|p| p.powers_dbm().to_vec()).collect()
        };
        let kl_sel = min_pairwise_kl(&shapes(&selected)).unwrap();
        let kl_iid = min_pairwise_kl(&shapes(&iid)).unwrap();
        assert!(
            kl_sel > kl_iid,
            "diversity selection ({kl_sel}) must beat iid draws ({kl_iid})"
        );
    }

    #[test]
    fn total_power_metadata_agrees_with_sum() {
        let spec = ProfileBatchSpec {
            count: 5,
            excursion_schedule_db: excursion_schedule(5, 6.0, 45.0),
            candidates_per_draw: 4,
            total_power_dbm: 6.2,
            channels: 40,
            seed: 2,
        };
        for p in generate_batch(&spec).unwrap() {
            p.validate().unwrap();
            assert!((mw_to_dbm(p.powers_mw().iter().sum::<f64>()) - 6.2).abs() < 1e-9);
        }
    }
}
