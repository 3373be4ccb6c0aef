//! Finite-difference validation of the backpropagated parameter gradients.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::surrogate::{MlpSurrogate, ParamGrads};

const FD_STEP: f64 = 1e-6;
const CHECK_COORDINATES: usize = 100;

/// Compare analytic parameter gradients against central finite differences
/// at randomly chosen coordinates and return the maximum relative error.
///
/// The check replaces the MAE training loss with a smooth squared loss
/// `L = 1/2 sum (f(x) - t)^2` over a few random samples in normalized space,
/// so the finite-difference oracle is well defined everywhere.
pub fn gradient_check(model: &MlpSurrogate, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..4)
        .map(|_| {
            let x: Vec<f64> = (0..model.input_dim()).map(|_| rng.gen::<f64>()).collect();
            let t: Vec<f64> = (0..model.output_dim()).map(|_| rng.gen::<f64>()).collect();
            (x, t)
        })
        .collect();

    // Analytic gradient of the squared loss.
    let mut grads = ParamGrads::zeros_like(model);
    for (x, t) in &samples {
        let trace = model.forward_trace(x);
        let y = trace.activations.last().unwrap();
        let dl_dy: Vec<f64> = y.iter().zip(t).map(|(&p, &tv)| p - tv).collect();
        model.accumulate_param_gradients(&trace, &dl_dy, &mut grads);
    }
    let analytic: Vec<f64> = grads
        .layers
        .iter()
        .flat_map(|(w, b)| w.iter().chain(b.iter()).copied().collect::<Vec<_>>())
        .collect();

    let loss = |m: &MlpSurrogate| -> f64 {
        samples
            .iter()
            .map(|(x, t)| {
                m.forward_normalized(x)
                    .iter()
                    .zip(t)
                    .map(|(&p, &tv)| 0.5 * (p - tv) * (p - tv))
                    .sum::<f64>()
            })
            .sum()
    };

    let count = model.param_count();
    let mut probe = model.clone();
    let mut max_rel = 0.0f64;
    for _ in 0..CHECK_COORDINATES {
        let idx = rng.gen_range(0..count);
        let original = probe.get_param(idx);
        probe.set_param(idx, original + FD_STEP);
        let plus = loss(&probe);
        probe.set_param(idx, original - FD_STEP);
        let minus = loss(&probe);
        probe.set_param(idx, original);
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let denom = analytic[idx].abs().max(numeric.abs());
        if denom > 1e-10 {
            max_rel = max_rel.max((analytic[idx] - numeric).abs() / denom);
        }
    }
    max_rel
}
