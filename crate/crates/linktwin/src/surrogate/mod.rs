//! The digital twin: a feed-forward network mapping a 40-channel TX power
//! profile (dBm) to predicted RX signal and noise powers (dBm).
//!
//! Architecture 40 -> 80 -> 120 -> 80 with sigmoid, softplus, and linear
//! activations; inputs and outputs are min-max normalized to [0, 1] in the
//! log-power domain. Trained models are immutable and safe to share across
//! concurrent forward evaluations.

mod gradcheck;
mod train;

pub use gradcheck::gradient_check;
pub use train::{cross_validate, train, CrossValidation, LearningCurves, TrainConfig, TrainOutcome};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer dimensions of the twin.
pub const TWIN_DIMS: [usize; 4] = [40, 80, 120, 80];

/// Inputs farther than this outside the training min/max raise the
/// extrapolation flag.
pub const EXTRAPOLATION_MARGIN_DB: f64 = 3.0;

/// RX powers below this floor are clamped before taking logs for targets.
pub const LOG_POWER_FLOOR_DBM: f64 = -40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Sigmoid,
    Softplus,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            // max(x, 0) + ln(1 + exp(-|x|)) is stable for large |x|.
            Activation::Softplus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
        }
    }

    /// Derivative expressed through the pre-activation value.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 - s)
            }
            Activation::Softplus => 1.0 / (1.0 + (-x).exp()),
        }
    }
}

/// One dense layer, weights row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn glorot(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * limit)
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    #[inline]
    fn preactivations(&self, input: &[f64], out: &mut [f64]) {
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.biases[o];
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            out[o] = acc;
        }
    }
}

/// Per-feature min-max normalization to [0, 1]. Degenerate features
/// (min == max) pass through unscaled so round-trips stay exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            min: vec![0.0; dim],
            max: vec![1.0; dim],
        }
    }

    /// Fit per-feature bounds over rows of equal width.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, |r| r.len());
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Self { min, max }
    }

    #[inline]
    fn scale(&self, j: usize) -> f64 {
        let d = self.max[j] - self.min[j];
        if d > 0.0 {
            d
        } else {
            1.0
        }
    }

    pub fn normalize(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .enumerate()
            .map(|(j, &v)| (v - self.min[j]) / self.scale(j))
            .collect()
    }

    pub fn denormalize(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .enumerate()
            .map(|(j, &v)| v * self.scale(j) + self.min[j])
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.min.len() != self.max.len() {
            return Err(Error::ModelRejected(
                "normalization min/max length mismatch".into(),
            ));
        }
        for (lo, hi) in self.min.iter().zip(&self.max) {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::ModelRejected(
                    "normalization stats must be finite with min <= max".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Prediction of the twin for one TX profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub signal_dbm: Vec<f64>,
    pub noise_dbm: Vec<f64>,
    /// Set when any input channel lies more than the margin outside the
    /// training range; the prediction is still returned.
    pub extrapolated: bool,
}

impl Prediction {
    pub fn snr_linear(&self) -> Vec<f64> {
        self.signal_dbm
            .iter()
            .zip(&self.noise_dbm)
            .map(|(&s, &n)| 10f64.powf((s - n) / 10.0))
            .collect()
    }
}

/// The feed-forward twin with its normalization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSurrogate {
    pub layers: Vec<Layer>,
    pub input_norm: Normalizer,
    pub output_norm: Normalizer,
    pub extrapolation_margin_db: f64,
    /// Fingerprint of the training configuration.
    pub train_fingerprint: String,
    /// Fingerprint of the scenario the twin was trained against.
    pub scenario_fingerprint: String,
}

impl MlpSurrogate {
    /// Freshly initialized twin with the standard architecture: hidden
    /// sigmoid and softplus layers, linear output.
    pub fn standard(seed: u64) -> Self {
        Self::new(
            &TWIN_DIMS,
            &[Activation::Sigmoid, Activation::Softplus, Activation::Linear],
            seed,
        )
    }

    /// Arbitrary architecture (used by tests and diagnostics); normalization
    /// defaults to identity.
    pub fn new(dims: &[usize], activations: &[Activation], seed: u64) -> Self {
        assert_eq!(dims.len(), activations.len() + 1, "one activation per layer");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(d, &a)| Layer::glorot(d[0], d[1], a, &mut rng))
            .collect();
        Self {
            layers,
            input_norm: Normalizer::identity(dims[0]),
            output_norm: Normalizer::identity(dims[dims.len() - 1]),
            extrapolation_margin_db: EXTRAPOLATION_MARGIN_DB,
            train_fingerprint: String::new(),
            scenario_fingerprint: String::new(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    /// Raw network on an already-normalized input.
    pub fn forward_normalized(&self, x: &[f64]) -> Vec<f64> {
        let mut current = x.to_vec();
        for layer in &self.layers {
            let mut z = vec![0.0; layer.out_dim];
            layer.preactivations(&current, &mut z);
            for v in z.iter_mut() {
                *v = layer.activation.apply(*v);
            }
            current = z;
        }
        current
    }

    /// Predict RX signal and noise powers for a TX profile in dBm.
    pub fn forward(&self, tx_dbm: &[f64]) -> Result<Prediction> {
        if tx_dbm.len() != self.input_dim() {
            return Err(Error::InvalidConfig(format!(
                "input has {} entries, model expects {}",
                tx_dbm.len(),
                self.input_dim()
            )));
        }
        if tx_dbm.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("surrogate input".into()));
        }
        let margin = self.extrapolation_margin_db;
        let extrapolated = tx_dbm.iter().enumerate().any(|(j, &v)| {
            v < self.input_norm.min[j] - margin || v > self.input_norm.max[j] + margin
        });

        let y = self
            .output_norm
            .denormalize(&self.forward_normalized(&self.input_norm.normalize(tx_dbm)));
        let k = y.len() / 2;
        Ok(Prediction {
            signal_dbm: y[..k].to_vec(),
            noise_dbm: y[k..].to_vec(),
            extrapolated,
        })
    }

    /// Forward pass retaining pre-activations and activations per layer.
    pub(crate) fn forward_trace(&self, x_norm: &[f64]) -> ForwardTrace {
        let mut activations = vec![x_norm.to_vec()];
        let mut preactivations = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut z = vec![0.0; layer.out_dim];
            layer.preactivations(activations.last().unwrap(), &mut z);
            let a = z.iter().map(|&v| layer.activation.apply(v)).collect();
            preactivations.push(z);
            activations.push(a);
        }
        ForwardTrace {
            activations,
            preactivations,
        }
    }

    /// Vector-Jacobian product from output cotangent to input cotangent,
    /// everything in the normalized domain.
    pub(crate) fn input_vjp(&self, trace: &ForwardTrace, dl_dy: &[f64]) -> Vec<f64> {
        let mut delta = dl_dy.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let z = &trace.preactivations[idx];
            for (d, &zv) in delta.iter_mut().zip(z) {
                *d *= layer.activation.derivative(zv);
            }
            let mut prev = vec![0.0; layer.in_dim];
            for o in 0..layer.out_dim {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                let d = delta[o];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += w * d;
                }
            }
            delta = prev;
        }
        delta
    }

    /// Gradient of a scalar loss with respect to the TX profile in dBm, given
    /// the loss cotangent on the dBm-domain outputs.
    pub fn input_gradient_dbm(&self, tx_dbm: &[f64], dl_dy_dbm: &[f64]) -> Vec<f64> {
        let x_norm = self.input_norm.normalize(tx_dbm);
        let trace = self.forward_trace(&x_norm);
        let dl_dy_norm: Vec<f64> = dl_dy_dbm
            .iter()
            .enumerate()
            .map(|(j, &g)| g * self.output_norm.scale(j))
            .collect();
        let dl_dx_norm = self.input_vjp(&trace, &dl_dy_norm);
        dl_dx_norm
            .iter()
            .enumerate()
            .map(|(j, &g)| g / self.input_norm.scale(j))
            .collect()
    }

    /// Accumulate parameter gradients for one sample; `dl_dy` is the loss
    /// cotangent on the network output (normalized domain).
    pub(crate) fn accumulate_param_gradients(
        &self,
        trace: &ForwardTrace,
        dl_dy: &[f64],
        grads: &mut ParamGrads,
    ) {
        let mut delta = dl_dy.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let z = &trace.preactivations[idx];
            for (d, &zv) in delta.iter_mut().zip(z) {
                *d *= layer.activation.derivative(zv);
            }
            let input = &trace.activations[idx];
            let (gw, gb) = &mut grads.layers[idx];
            for o in 0..layer.out_dim {
                let d = delta[o];
                gb[o] += d;
                let row = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            if idx > 0 {
                let mut prev = vec![0.0; layer.in_dim];
                for o in 0..layer.out_dim {
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    let d = delta[o];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * d;
                    }
                }
                delta = prev;
            }
        }
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn get_param(&self, mut index: usize) -> f64 {
        for layer in &self.layers {
            if index < layer.weights.len() {
                return layer.weights[index];
            }
            index -= layer.weights.len();
            if index < layer.biases.len() {
                return layer.biases[index];
            }
            index -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut index: usize, value: f64) {
        for layer in &mut self.layers {
            if index < layer.weights.len() {
                layer.weights[index] = value;
                return;
            }
            index -= layer.weights.len();
            if index < layer.biases.len() {
                layer.biases[index] = value;
                return;
            }
            index -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }

    /// Serialize to the versioned model-file JSON.
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    /// Load from model-file JSON, rejecting version and dimension mismatches.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelRejected(format!(
                "unsupported format version {}",
                file.format_version
            )));
        }
        let model = file.model;
        if model.layers.is_empty() {
            return Err(Error::ModelRejected("model has no layers".into()));
        }
        for (i, layer) in model.layers.iter().enumerate() {
            if layer.weights.len() != layer.in_dim * layer.out_dim
                || layer.biases.len() != layer.out_dim
            {
                return Err(Error::ModelRejected(format!(
                    "layer {i} dimensions inconsistent with weight counts"
                )));
            }
            if layer.weights.iter().chain(&layer.biases).any(|w| !w.is_finite()) {
                return Err(Error::ModelRejected(format!("layer {i} has non-finite weights")));
            }
        }
        for pair in model.layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::ModelRejected("layer dimensions do not chain".into()));
            }
        }
        if model.input_norm.min.len() != model.input_dim()
            || model.output_norm.min.len() != model.output_dim()
        {
            return Err(Error::ModelRejected(
                "normalization dimensions do not match the architecture".into(),
            ));
        }
        model.input_norm.validate()?;
        model.output_norm.validate()?;
        Ok(model)
    }

    /// Reject models that do not use the twin architecture.
    pub fn require_twin_dims(&self) -> Result<()> {
        if self.dims() != TWIN_DIMS {
            return Err(Error::ModelRejected(format!(
                "expected dims {TWIN_DIMS:?}, got {:?}",
                self.dims()
            )));
        }
        Ok(())
    }
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    #[serde(flatten)]
    model: MlpSurrogate,
}

pub(crate) struct ForwardTrace {
    /// Input plus per-layer activations; length `layers + 1`.
    pub activations: Vec<Vec<f64>>,
    pub preactivations: Vec<Vec<f64>>,
}

/// Parameter gradients, one (weights, biases) pair per layer.
pub(crate) struct ParamGrads {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ParamGrads {
    pub fn zeros_like(model: &MlpSurrogate) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
                .collect(),
        }
    }

    pub fn reset(&mut self) {
        for (w, b) in &mut self.layers {
            w.iter_mut().for_each(|v| *v = 0.0);
            b.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// Mean absolute error between measured and predicted RX powers (Eq-style
/// dB-domain definition): `(1/2K) * sum(|S - S~| + |N - N~|)`.
pub fn mae(
    signal_dbm: &[f64],
    noise_dbm: &[f64],
    predicted_signal_dbm: &[f64],
    predicted_noise_dbm: &[f64],
) -> f64 {
    assert_eq!(signal_dbm.len(), predicted_signal_dbm.len());
    assert_eq!(noise_dbm.len(), predicted_noise_dbm.len());
    let total: f64 = signal_dbm
        .iter()
        .zip(predicted_signal_dbm)
        .chain(noise_dbm.iter().zip(predicted_noise_dbm))
        .map(|(&a, &b)| (a - b).abs())
        .sum();
    total / (signal_dbm.len() + noise_dbm.len()) as f64
}

/// Mean absolute difference over flat vectors (normalized-scale curves).
pub fn mean_abs_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Training data: TX profiles against clamped RX targets with a fixed
/// train/validation split.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    /// N x K TX powers, dBm.
    pub inputs: Vec<Vec<f64>>,
    /// N x 2K RX powers (signal then noise), dBm, floor-clamped.
    pub targets: Vec<Vec<f64>>,
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
}

impl TrainingSet {
    /// Assemble from raw rows, clamping targets at the log-power floor and
    /// drawing a random train/validation split.
    pub fn new(
        inputs: Vec<Vec<f64>>,
        raw_targets: Vec<Vec<f64>>,
        train_count: usize,
        val_count: usize,
        seed: u64,
    ) -> Result<Self> {
        if inputs.len() != raw_targets.len() {
            return Err(Error::InvalidConfig(
                "inputs and targets differ in length".into(),
            ));
        }
        if train_count + val_count > inputs.len() {
            return Err(Error::InvalidConfig(format!(
                "split {train_count}+{val_count} exceeds {} samples",
                inputs.len()
            )));
        }
        if inputs
            .iter()
            .flatten()
            .chain(raw_targets.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("training data".into()));
        }
        let targets = raw_targets
            .into_iter()
            .map(|row| row.into_iter().map(|v| v.max(LOG_POWER_FLOOR_DBM)).collect())
            .collect();
        let (train_idx, val_idx) = split_indices(inputs.len(), train_count, val_count, seed);
        Ok(Self {
            inputs,
            targets,
            train_idx,
            val_idx,
        })
    }

    /// Same data under a fresh random split (Monte-Carlo cross-validation).
    pub fn resplit(&self, seed: u64) -> Self {
        let (train_idx, val_idx) =
            split_indices(self.inputs.len(), self.train_idx.len(), self.val_idx.len(), seed);
        Self {
            inputs: self.inputs.clone(),
            targets: self.targets.clone(),
            train_idx,
            val_idx,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &i in self.train_idx.iter().chain(&self.val_idx) {
            if i >= self.inputs.len() {
                return Err(Error::InvalidConfig("split index out of range".into()));
            }
        }
        for &i in &self.train_idx {
            if self.val_idx.contains(&i) {
                return Err(Error::InvalidConfig(format!(
                    "sample {i} appears in both splits"
                )));
            }
        }
        Ok(())
    }
}

fn split_indices(
    total: usize,
    train_count: usize,
    val_count: usize,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates.
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let train = order[..train_count].to_vec();
    let val = order[train_count..train_count + val_count].to_vec();
    (train, val)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_at_zero_is_ln_two() {
        assert!((Activation::Softplus.apply(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn softplus_stable_at_large_negative_preactivation() {
        let v = Activation::Softplus.apply(-1e4);
        assert!(v.is_finite() && v >= 0.0);
        let d = Activation::Softplus.derivative(-1e4);
        assert!(d.is_finite() && d >= 0.0);
        assert!(Activation::Softplus.apply(1e4).is_finite());
    }

    #[test]
    fn zero_weights_output_denormalized_biases() {
        let mut model = MlpSurrogate::new(
            &[4, 3, 2],
            &[Activation::Sigmoid, Activation::Linear],
            0,
        );
        for layer in &mut model.layers {
            layer.weights.iter_mut().for_each(|w| *w = 0.0);
            layer.biases.iter_mut().for_each(|b| *b = 0.0);
        }
        model.layers[1].biases = vec![0.25, 0.75];
        model.output_norm = Normalizer {
            min: vec![-30.0, -40.0],
            max: vec![-10.0, -20.0],
        };
        let pred = model.forward(&[0.0; 4]).unwrap();
        // Output = bias through linear activation, then denormalized.
        assert!((pred.signal_dbm[0] - (0.25 * 20.0 - 30.0)).abs() < 1e-12);
        assert!((pred.noise_dbm[0] - (0.75 * 20.0 - 40.0)).abs() < 1e-12);
    }

    #[test]
    fn forward_is_deterministic() {
        let model = MlpSurrogate::standard(7);
        let x = vec![-10.0; 40];
        let a = model.forward(&x).unwrap();
        let b = model.forward(&x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn extrapolation_flag_honors_margin() {
        let mut model = MlpSurrogate::standard(1);
        model.input_norm = Normalizer {
            min: vec![-20.0; 40],
            max: vec![0.0; 40],
        };
        assert!(!model.forward(&[-10.0; 40]).unwrap().extrapolated);
        // 2 dB outside the range: within the 3-dB margin.
        assert!(!model.forward(&[-22.0; 40]).unwrap().extrapolated);
        let mut far = vec![-10.0; 40];
        far[13] = -24.0;
        assert!(model.forward(&far).unwrap().extrapolated);
    }

    #[test]
    fn normalization_round_trip() {
        let norm = Normalizer {
            min: vec![-40.0, -40.0, 5.0],
            max: vec![0.0, -40.0, 9.0],
        };
        let x = vec![-17.3, -40.0, 6.21];
        let back = norm.denormalize(&norm.normalize(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mae_basic_values() {
        let s = vec![-10.0; 40];
        let n = vec![-30.0; 40];
        assert_eq!(mae(&s, &n, &s, &n), 0.0);

        let s1: Vec<f64> = s.iter().map(|v| v + 1.0).collect();
        let n1: Vec<f64> = n.iter().map(|v| v - 1.0).collect();
        assert!((mae(&s, &n, &s1, &n1) - 1.0).abs() < 1e-12);

        let mut s2 = s.clone();
        s2[0] += 2.0;
        assert!((mae(&s, &n, &s2, &n) - 0.025).abs() < 1e-12);
    }

    #[test]
    fn mae_is_symmetric() {
        let a = vec![1.0, 2.0, 3.0];
        let b = vec![0.5, 2.5, 2.0];
        let n = vec![0.0; 3];
        assert_eq!(mae(&a, &n, &b, &n), mae(&b, &n, &a, &n));
    }

    #[test]
    fn serialization_round_trip_and_rejection() {
        let model = MlpSurrogate::standard(3);
        let json = model.to_json().unwrap();
        let back = MlpSurrogate::from_json(&json).unwrap();
        assert_eq!(model, back);

        // Corrupt a dimension: loader must reject.
        let mut broken = model.clone();
        broken.layers[1].in_dim = 81;
        let json = broken.to_json().unwrap();
        assert!(matches!(
            MlpSurrogate::from_json(&json),
            Err(Error::ModelRejected(_))
        ));

        // Unsupported version.
        let tampered = json.replace("\"format_version\":1", "\"format_version\":9");
        assert!(MlpSurrogate::from_json(&tampered).is_err());
    }

    #[test]
    fn split_has_no_overlap() {
        let data = TrainingSet::new(
            vec![vec![0.0; 4]; 50],
            vec![vec![0.0; 8]; 50],
            40,
            10,
            9,
        )
        .unwrap();
        data.validate().unwrap();
        assert_eq!(data.train_idx.len(), 40);
        assert_eq!(data.val_idx.len(), 10);
    }

    #[test]
    fn targets_are_floor_clamped() {
        let data = TrainingSet::new(
            vec![vec![0.0; 2]],
            vec![vec![-55.0, -10.0, -80.0, -41.0]],
            1,
            0,
            0,
        )
        .unwrap();
        assert_eq!(data.targets[0], vec![-40.0, -10.0, -40.0, -40.0]);
    }

    #[test]
    fn param_indexing_round_trip() {
        let mut model = MlpSurrogate::new(&[3, 4, 2], &[Activation::Sigmoid, Activation::Linear], 5);
        let n = model.param_count();
        assert_eq!(n, 3 * 4 + 4 + 4 * 2 + 2);
        for i in 0..n {
            let v = model.get_param(i);
            model.set_param(i, v + 1.0);
            assert_eq!(model.get_param(i), v + 1.0);
            model.set_param(i, v);
        }
    }
}
