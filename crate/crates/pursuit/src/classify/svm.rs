//! Linear SVM trained by dual coordinate descent (L2-regularized hinge
//! loss). The bias is folded in as a constant augmented feature, so the
//! primal objective is 0.5 (||w||^2 + b^2) + C * sum hinge.

use rand::seq::SliceRandom;

use super::{ClassifyError, Observation, SvmModel, N_FEATURES};
use crate::rng::rng_for;
use crate::trace::Session;

const MAX_EPOCHS: usize = 2000;
const TOLERANCE: f64 = 1e-9;

/// Training result: the model plus convergence diagnostics and the dual
/// coefficients for optimality checks.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SvmModel,
    pub converged: bool,
    pub final_violation: f64,
    pub epochs: usize,
    pub alpha: Vec<f64>,
}

/// Trains on already-standardized observations. Non-convergence is reported
/// in the outcome, not an error.
pub fn train_linear_svm(
    train: &[Observation],
    c_param: f64,
    seed: u64,
) -> Result<TrainOutcome, ClassifyError> {
    if c_param <= 0.0 || !c_param.is_finite() {
        return Err(ClassifyError::InvalidC(c_param));
    }
    let has = |s: Session| train.iter().any(|o| o.session == s);
    if !has(Session::Baseline) || !has(Session::Impaired) {
        return Err(ClassifyError::SingleClass);
    }

    let n = train.len();
    let y: Vec<f64> = train
        .iter()
        .map(|o| if o.session == Session::Impaired { 1.0 } else { -1.0 })
        .collect();
    // augmented feature vectors (x, 1)
    let q_diag: Vec<f64> = train
        .iter()
        .map(|o| o.features.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .collect();

    let mut alpha = vec![0.0f64; n];
    let mut w = [0.0f64; N_FEATURES + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_for(seed);

    let mut epochs = 0;
    let mut violation = f64::INFINITY;
    let mut converged = false;
    while epochs < MAX_EPOCHS {
        epochs += 1;
        order.shuffle(&mut rng);
        violation = 0.0f64;
        for &i in &order {
            let xi = &train[i].features;
            let mut wx = w[N_FEATURES];
            for k in 0..N_FEATURES {
                wx += w[k] * xi[k];
            }
            let grad = y[i] * wx - 1.0;
            let projected = if alpha[i] <= 0.0 {
                grad.min(0.0)
            } else if alpha[i] >= c_param {
                grad.max(0.0)
            } else {
                grad
            };
            violation = violation.max(projected.abs());
            if projected.abs() > 1e-14 {
                let old = alpha[i];
                alpha[i] = (old - grad / q_diag[i]).clamp(0.0, c_param);
                let delta = (alpha[i] - old) * y[i];
                for k in 0..N_FEATURES {
                    w[k] += delta * xi[k];
                }
                w[N_FEATURES] += delta;
            }
        }
        if violation < TOLERANCE {
            converged = true;
            break;
        }
    }

    let mut weights = [0.0; N_FEATURES];
    weights.copy_from_slice(&w[..N_FEATURES]);
    Ok(TrainOutcome {
        model: SvmModel {
            weights,
            bias: w[N_FEATURES],
            c_param,
            feature_means: [0.0; N_FEATURES],
            feature_sds: [1.0; N_FEATURES],
            seed,
        },
        converged,
        final_violation: violation,
        epochs,
        alpha,
    })
}

/// Dual objective sum(alpha) - 0.5 ||w_aug||^2; equals the primal optimum
/// at convergence.
pub fn dual_objective(train: &[Observation], outcome: &TrainOutcome) -> f64 {
    let mut w = [0.0f64; N_FEATURES + 1];
    for (i, o) in train.iter().enumerate() {
        let yi = if o.session == Session::Impaired { 1.0 } else { -1.0 };
        let a = outcome.alpha[i] * yi;
        for (wk, x) in w.iter_mut().zip(&o.features) {
            *wk += a * x;
        }
        w[N_FEATURES] += a;
    }
    let norm_sq: f64 = w.iter().map(|v| v * v).sum();
    outcome.alpha.iter().sum::<f64>() - 0.5 * norm_sq
}

/// Primal objective 0.5 (||w||^2 + b^2) + C * sum hinge for the augmented
/// formulation; used by the brute-force oracle in tests.
pub fn primal_objective(train: &[Observation], w: &[f64; N_FEATURES], b: f64, c: f64) -> f64 {
    let mut loss = 0.0;
    for o in train {
        let yi = if o.session == Session::Impaired { 1.0 } else { -1.0 };
        let v = b + w.iter().zip(&o.features).map(|(wk, x)| wk * x).sum::<f64>();
        loss += (1.0 - yi * v).max(0.0);
    }
    0.5 * (w.iter().map(|v| v * v).sum::<f64>() + b * b) + c * loss
}
