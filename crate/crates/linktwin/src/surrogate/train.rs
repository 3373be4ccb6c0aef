//! Adam training of the twin on mean-absolute-error loss with L2
//! regularization, plus Monte-Carlo cross-validation.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surrogate::{
    mae, mean_abs_error, MlpSurrogate, ParamGrads, TrainingSet,
};

/// Training hyperparameters. The batch size drops at `batch_switch_epoch`
/// for finer late convergence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Multiplicative learning-rate decay applied once per epoch.
    pub lr_decay_per_epoch: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub l2_lambda: f64,
    pub epochs: usize,
    pub batch_size_initial: usize,
    pub batch_size_late: usize,
    pub batch_switch_epoch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            lr_decay_per_epoch: 0.995,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            l2_lambda: 1e-5,
            epochs: 600,
            batch_size_initial: 64,
            batch_size_late: 16,
            batch_switch_epoch: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.learning_rate,
            self.lr_decay_per_epoch,
            self.beta1,
            self.beta2,
            self.epsilon,
            self.l2_lambda,
        ];
        if positive.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidConfig(
                "training hyperparameters must be positive".into(),
            ));
        }
        if self.lr_decay_per_epoch > 1.0 {
            return Err(Error::InvalidConfig("lr decay must be <= 1".into()));
        }
        if self.beta1 >= 1.0 || self.beta2 >= 1.0 {
            return Err(Error::InvalidConfig("moment decays must be < 1".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size_initial < 1 || self.batch_size_late < 1 {
            return Err(Error::InvalidConfig("batch sizes must be >= 1".into()));
        }
        Ok(())
    }

    /// Fingerprint for embedding into trained model files.
    pub fn fingerprint(&self) -> String {
        let blob = serde_json::to_vec(self).expect("config serializes");
        let mut hasher = <sha2::Sha256 as sha2::Digest>::new();
        sha2::Digest::update(&mut hasher, &blob);
        let digest = sha2::Digest::finalize(hasher);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Per-epoch mean absolute error on the min-max normalized scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearningCurves {
    pub train_mae: Vec<f64>,
    pub val_mae: Vec<f64>,
}

/// A trained twin with its learning curves and final validation accuracy.
#[derive(Debug)]
pub struct TrainOutcome {
    pub model: MlpSurrogate,
    pub curves: LearningCurves,
    /// Unnormalized validation MAE in dB of the final model.
    pub validation_mae_db: f64,
    /// Unnormalized training MAE in dB of the final model.
    pub training_mae_db: f64,
}

struct AdamState {
    m: Vec<(Vec<f64>, Vec<f64>)>,
    v: Vec<(Vec<f64>, Vec<f64>)>,
    step: u64,
}

impl AdamState {
    fn new(model: &MlpSurrogate) -> Self {
        let zeros: Vec<(Vec<f64>, Vec<f64>)> = model
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    fn update(&mut self, model: &mut MlpSurrogate, grads: &ParamGrads, cfg: &TrainConfig) {
        self.step += 1;
        let bias1 = 1.0 - cfg.beta1.powi(self.step as i32);
        let bias2 = 1.0 - cfg.beta2.powi(self.step as i32);
        for (idx, layer) in model.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads.layers[idx];
            let (mw, mb) = &mut self.m[idx];
            let (vw, vb) = &mut self.v[idx];
            for (i, w) in layer.weights.iter_mut().enumerate() {
                let g = gw[i] + cfg.l2_lambda * *w;
                mw[i] = cfg.beta1 * mw[i] + (1.0 - cfg.beta1) * g;
                vw[i] = cfg.beta2 * vw[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = mw[i] / bias1;
                let v_hat = vw[i] / bias2;
                *w -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
            for (i, b) in layer.biases.iter_mut().enumerate() {
                let g = gb[i];
                mb[i] = cfg.beta1 * mb[i] + (1.0 - cfg.beta1) * g;
                vb[i] = cfg.beta2 * vb[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = mb[i] / bias1;
                let v_hat = vb[i] / bias2;
                *b -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
    }
}

/// Train the standard twin on `data` with Adam + L2 on the MAE loss.
///
/// Normalization statistics are fitted on the training split only. The MAE
/// subgradient at exactly zero error takes a random value in {-1, +1} drawn
/// from the training RNG stream, so runs stay seed-reproducible.
pub fn train(data: &TrainingSet, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    data.validate()?;
    if data.train_idx.is_empty() {
        return Err(Error::InvalidConfig("empty training split".into()));
    }

    let train_inputs: Vec<Vec<f64>> = data.train_idx.iter().map(|&i| data.inputs[i].clone()).collect();
    let train_targets: Vec<Vec<f64>> = data.train_idx.iter().map(|&i| data.targets[i].clone()).collect();

    let mut model = MlpSurrogate::standard(cfg.seed);
    model.input_norm = super::Normalizer::fit(&train_inputs);
    model.output_norm = super::Normalizer::fit(&train_targets);
    model.train_fingerprint = cfg.fingerprint();
    if model.input_dim() != data.inputs[0].len() || model.output_dim() != data.targets[0].len() {
        return Err(Error::InvalidConfig(format!(
            "twin expects {}->{} data, got {}->{}",
            model.input_dim(),
            model.output_dim(),
            data.inputs[0].len(),
            data.targets[0].len()
        )));
    }

    let x_train: Vec<Vec<f64>> = train_inputs.iter().map(|r| model.input_norm.normalize(r)).collect();
    let y_train: Vec<Vec<f64>> = train_targets.iter().map(|r| model.output_norm.normalize(r)).collect();
    let x_val: Vec<Vec<f64>> = data
        .val_idx
        .iter()
        .map(|&i| model.input_norm.normalize(&data.inputs[i]))
        .collect();
    let y_val: Vec<Vec<f64>> = data
        .val_idx
        .iter()
        .map(|&i| model.output_norm.normalize(&data.targets[i]))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_7ab1e);
    let mut state = AdamState::new(&model);
    let mut grads = ParamGrads::zeros_like(&model);
    let mut order: Vec<usize> = (0..x_train.len()).collect();
    let out_dim = model.output_dim() as f64;

    let mut curves = LearningCurves {
        train_mae: Vec::with_capacity(cfg.epochs),
        val_mae: Vec::with_capacity(cfg.epochs),
    };

    for epoch in 0..cfg.epochs {
        let batch_size = if epoch < cfg.batch_switch_epoch {
            cfg.batch_size_initial
        } else {
            cfg.batch_size_late
        };
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }

        let mut epoch_abs_sum = 0.0;
        for batch in order.chunks(batch_size) {
            grads.reset();
            let scale = 1.0 / (batch.len() as f64 * out_dim);
            for &sample in batch {
                let trace = model.forward_trace(&x_train[sample]);
                let prediction = trace.activations.last().unwrap();
                let target = &y_train[sample];
                let mut dl_dy = vec![0.0; prediction.len()];
                for (j, (&p, &t)) in prediction.iter().zip(target).enumerate() {
                    let e = p - t;
                    epoch_abs_sum += e.abs();
                    dl_dy[j] = if e > 0.0 {
                        scale
                    } else if e < 0.0 {
                        -scale
                    } else {
                        // Subgradient of |e| at 0: random sign.
                        if rng.gen::<bool>() {
                            scale
                        } else {
                            -scale
                        }
                    };
                }
                model.accumulate_param_gradients(&trace, &dl_dy, &mut grads);
            }
            state.update(&mut model, &grads, cfg);
        }

        let train_mae = epoch_abs_sum / (x_train.len() as f64 * out_dim);
        let val_mae = evaluate_normalized(&model, &x_val, &y_val);
        if !train_mae.is_finite() || !val_mae.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                detail: format!("train MAE {train_mae}, validation MAE {val_mae}"),
            });
        }
        curves.train_mae.push(train_mae);
        curves.val_mae.push(val_mae);
    }

    let validation_mae_db = mae_db_over(&model, data, &data.val_idx);
    let training_mae_db = mae_db_over(&model, data, &data.train_idx);
    Ok(TrainOutcome {
        model,
        curves,
        validation_mae_db,
        training_mae_db,
    })
}

/// Mean normalized MAE over a prepared (normalized) evaluation set.
fn evaluate_normalized(model: &MlpSurrogate, x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let total: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| mean_abs_error(&model.forward_normalized(xi), yi))
        .sum();
    total / x.len() as f64
}

/// Mean unnormalized (dB) MAE of the model over a subset of a training set.
pub fn mae_db_over(model: &MlpSurrogate, data: &TrainingSet, indices: &[usize]) -> f64 {
    if indices.is_empty() {
        return 0.0;
    }
    let k = model.output_dim() / 2;
    let total: f64 = indices
        .iter()
        .map(|&i| {
            let pred = model.forward(&data.inputs[i]).expect("in-range input");
            let target = &data.targets[i];
            mae(&target[..k], &target[k..], &pred.signal_dbm, &pred.noise_dbm)
        })
        .sum();
    total / indices.len() as f64
}

/// Result of Monte-Carlo cross-validation with random sub-sampling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossValidation {
    pub fold_validation_mae_db: Vec<f64>,
    pub fold_training_mae_db: Vec<f64>,
    pub mean_validation_mae_db: f64,
    pub std_validation_mae_db: f64,
    /// Set when validation exceeds training MAE by more than 0.05 dB on
    /// average.
    pub overfitting: bool,
}

/// Repeat training on random resplits of the same data and report the
/// spread of validation accuracy.
pub fn cross_validate(data: &TrainingSet, cfg: &TrainConfig, folds: usize) -> Result<CrossValidation> {
    if folds < 2 {
        return Err(Error::InvalidConfig("folds must be >= 2".into()));
    }
    let mut fold_validation = Vec::with_capacity(folds);
    let mut fold_training = Vec::with_capacity(folds);
    for fold in 0..folds {
        let fold_seed = cfg
            .seed
            .wrapping_add((fold as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let resplit = data.resplit(fold_seed);
        let fold_cfg = TrainConfig {
            seed: fold_seed,
            ..cfg.clone()
        };
        let outcome = train(&resplit, &fold_cfg)?;
        fold_validation.push(outcome.validation_mae_db);
        fold_training.push(outcome.training_mae_db);
    }
    let mean = fold_validation.iter().sum::<f64>() / folds as f64;
    let var = fold_validation
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / folds as f64;
    let mean_gap = fold_validation
        .iter()
        .zip(&fold_training)
        .map(|(v, t)| v - t)
        .sum::<f64>()
        / folds as f64;
    Ok(CrossValidation {
        fold_validation_mae_db: fold_validation,
        fold_training_mae_db: fold_training,
        mean_validation_mae_db: mean,
        std_validation_mae_db: var.sqrt(),
        overfitting: mean_gap > 0.05,
    })
}
