//! The two supervised protocols: linear SVM over 5-metric feature rows with
//! repeated stratified 50/50 splits, with and without per-subject baseline
//! normalization, scored by accuracy and rank-based AUC.
//!
//! V gain is deliberately not an SVM feature; the feature order is
//! (mean_radius_deg, skew_radial, skew_phase, kurt_phase, blink_loss_pct).

pub mod roc;
pub mod svm;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::Serialize;
use thiserror::Error;

use crate::features::FeatureRow;
use crate::rng::{child_seed, rng_for};
use crate::trace::Session;

pub use roc::roc_auc;
pub use svm::{dual_objective, primal_objective, train_linear_svm, TrainOutcome};

/// Number of SVM features.
pub const N_FEATURES: usize = 5;

/// Classification mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Features as extracted.
    Raw,
    /// Per-subject mean baseline feature row subtracted from every one of
    /// that subject's observations.
    Normalized,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Raw, Mode::Normalized];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Raw => "raw",
            Mode::Normalized => "normalized",
        }
    }
}

/// One labeled observation (label = session).
#[derive(Debug, Clone)]
pub struct Observation {
    pub subject_id: String,
    pub session: Session,
    pub features: [f64; N_FEATURES],
}

/// Trained linear model plus the standardization fitted on its training
/// split.
#[derive(Debug, Clone)]
pub struct SvmModel {
    pub weights: [f64; N_FEATURES],
    pub bias: f64,
    pub c_param: f64,
    pub feature_means: [f64; N_FEATURES],
    pub feature_sds: [f64; N_FEATURES],
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("subject {0} has no baseline runs for normalization")]
    MissingBaseline(String),
    #[error("split left one side without both labels")]
    DegenerateSplit,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("feature {0} has zero variance on the training split")]
    ZeroVarianceFeature(usize),
    #[error("c_param must be positive, got {0}")]
    InvalidC(f64),
    #[error("split fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("dataset is empty or single-label")]
    EmptyDataset,
}

/// Builds one observation per run; in normalized mode subtracts each
/// subject's mean baseline feature row from all of their observations.
pub fn build_dataset(rows: &[FeatureRow], mode: Mode) -> Result<Vec<Observation>, ClassifyError> {
    let mut observations: Vec<Observation> = rows
        .iter()
        .map(|r| {
            let m = &r.metrics;
            Observation {
                subject_id: r.subject_id.clone(),
                session: r.session,
                features: [
                    m.mean_radius_deg,
                    m.skew_radial,
                    m.skew_phase,
                    m.kurt_phase,
                    m.blink_loss_pct,
                ],
            }
        })
        .collect();

    if mode == Mode::Normalized {
        let mut baseline_sum: BTreeMap<&str, ([f64; N_FEATURES], usize)> = BTreeMap::new();
        for o in observations.iter().filter(|o| o.session == Session::Baseline) {
            let e = baseline_sum.entry(o.subject_id.as_str()).or_insert(([0.0; N_FEATURES], 0));
            for k in 0..N_FEATURES {
                e.0[k] += o.features[k];
            }
            e.1 += 1;
        }
        let mut baseline_mean: BTreeMap<String, [f64; N_FEATURES]> = BTreeMap::new();
        for (subject, (sum, count)) in baseline_sum {
            let mut mean = [0.0; N_FEATURES];
            for k in 0..N_FEATURES {
                mean[k] = sum[k] / count as f64;
            }
            baseline_mean.insert(subject.to_string(), mean);
        }
        for o in &mut observations {
            let mean = baseline_mean
                .get(&o.subject_id)
                .ok_or_else(|| ClassifyError::MissingBaseline(o.subject_id.clone()))?;
            for (f, m) in o.features.iter_mut().zip(mean) {
                *f -= m;
            }
        }
    }
    Ok(observations)
}

/// Stratified-by-label random split. Observations from the same subject may
/// land on both sides.
pub fn split(
    dataset: &[Observation],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<Observation>, Vec<Observation>), ClassifyError> {
    if !(0.0 < fraction && fraction < 1.0) {
        return Err(ClassifyError::BadFraction(fraction));
    }
    let mut by_label: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, o) in dataset.iter().enumerate() {
        by_label[usize::from(o.session == Session::Impaired)].push(i);
    }
    if by_label[0].is_empty() || by_label[1].is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    let total_train = (dataset.len() as f64 * fraction).round() as usize;
    let k0 = ((by_label[0].len() as f64 * fraction).round() as usize).min(by_label[0].len());
    let k1 = total_train.saturating_sub(k0).min(by_label[1].len());

    let mut rng = rng_for(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label_idx, take) in [(0, k0), (1, k1)] {
        let mut idx = by_label[label_idx].clone();
        idx.shuffle(&mut rng);
        for (j, &i) in idx.iter().enumerate() {
            if j < take {
                train.push(dataset[i].clone());
            } else {
                test.push(dataset[i].clone());
            }
        }
    }
    let both = |side: &[Observation]| {
        side.iter().any(|o| o.session == Session::Baseline)
            && side.iter().any(|o| o.session == Session::Impaired)
    };
    if !both(&train) || !both(&test) {
        return Err(ClassifyError::DegenerateSplit);
    }
    Ok((train, test))
}

/// Fits z-score parameters on the training split only.
pub fn standardize_fit(
    train: &[Observation],
) -> Result<([f64; N_FEATURES], [f64; N_FEATURES]), ClassifyError> {
    let n = train.len() as f64;
    let mut means = [0.0; N_FEATURES];
    for o in train {
        for (m, f) in means.iter_mut().zip(&o.features) {
            *m += f;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut sds = [0.0; N_FEATURES];
    for o in train {
        for k in 0..N_FEATURES {
            let d = o.features[k] - means[k];
            sds[k] += d * d;
        }
    }
    for (k, sd) in sds.iter_mut().enumerate() {
        *sd = (*sd / n).sqrt();
        if *sd <= 0.0 {
            return Err(ClassifyError::ZeroVarianceFeature(k));
        }
    }
    Ok((means, sds))
}

fn apply_standardization(
    obs: &[Observation],
    means: &[f64; N_FEATURES],
    sds: &[f64; N_FEATURES],
) -> Vec<Observation> {
    obs.iter()
        .map(|o| {
            let mut f = o.features;
            for k in 0..N_FEATURES {
                f[k] = (f[k] - means[k]) / sds[k];
            }
            Observation { features: f, ..o.clone() }
        })
        .collect()
}

/// Z-scores both sets using train statistics only.
#[allow(clippy::type_complexity)]
pub fn standardize_fit_apply(
    train: &[Observation],
    test: &[Observation],
) -> Result<(Vec<Observation>, Vec<Observation>, [f64; N_FEATURES], [f64; N_FEATURES]), ClassifyError>
{
    let (means, sds) = standardize_fit(train)?;
    Ok((
        apply_standardization(train, &means, &sds),
        apply_standardization(test, &means, &sds),
        means,
        sds,
    ))
}

/// Decision values w . standardize(x) + b for raw observations.
pub fn decision_values(model: &SvmModel, observations: &[Observation]) -> Vec<f64> {
    observations
        .iter()
        .map(|o| {
            let mut v = model.bias;
            for k in 0..N_FEATURES {
                v += model.weights[k] * (o.features[k] - model.feature_means[k]) / model.feature_sds[k];
            }
            v
        })
        .collect()
}

/// Label 1 (impaired) iff the decision value is strictly positive; ties go
/// to baseline.
pub fn predict(model: &SvmModel, observations: &[Observation]) -> Vec<Session> {
    decision_values(model, observations)
        .into_iter()
        .map(|v| if v > 0.0 { Session::Impaired } else { Session::Baseline })
        .collect()
}

/// Accuracy/AUC summary over repeated random splits for one mode.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub mode: Mode,
    pub n_splits: usize,
    pub median_auc: f64,
    pub best_auc: f64,
    pub median_accuracy: f64,
    pub per_split: Vec<SplitResult>,
    /// Degenerate splits redrawn with the next child seed.
    #[serde(skip)]
    pub redraws: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplitResult {
    pub accuracy: f64,
    pub auc: f64,
}

fn median_of(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs the full protocol for one mode.
pub fn evaluate_mode(
    rows: &[FeatureRow],
    mode: Mode,
    n_splits: usize,
    c_param: f64,
    seed: u64,
) -> Result<EvalReport, ClassifyError> {
    let dataset = build_dataset(rows, mode)?;
    let mode_tag = mode as u64;
    let mut per_split = Vec::with_capacity(n_splits);
    let mut redraws = 0usize;
    for split_idx in 0..n_splits {
        // a degenerate draw is retried with the next attempt counter
        let mut attempt = 0u64;
        let (train, test) = loop {
            let s = child_seed(seed, &[mode_tag, split_idx as u64, attempt]);
            match split(&dataset, 0.5, s) {
                Ok(pair) => break pair,
                Err(ClassifyError::DegenerateSplit) if attempt < 100 => {
                    redraws += 1;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        let (train_std, _, means, sds) = standardize_fit_apply(&train, &test)?;
        let svm_seed = child_seed(seed, &[mode_tag, split_idx as u64, 0xabcd]);
        let mut outcome = train_linear_svm(&train_std, c_param, svm_seed)?;
        outcome.model.feature_means = means;
        outcome.model.feature_sds = sds;

        let scores = decision_values(&outcome.model, &test);
        let labels: Vec<Session> = test.iter().map(|o| o.session).collect();
        let auc = roc_auc(&scores, &labels)?;
        let correct = scores
            .iter()
            .zip(&labels)
            .filter(|(&s, &l)| (s > 0.0) == (l == Session::Impaired))
            .count();
        per_split.push(SplitResult { accuracy: correct as f64 / test.len() as f64, auc });
    }
    let aucs: Vec<f64> = per_split.iter().map(|r| r.auc).collect();
    let accs: Vec<f64> = per_split.iter().map(|r| r.accuracy).collect();
    Ok(EvalReport {
        mode,
        n_splits,
        median_auc: median_of(&aucs),
        best_auc: aucs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        median_accuracy: median_of(&accs),
        per_split,
        redraws,
    })
}

/// Runs both modes with the same master seed.
pub fn evaluate_modes(
    rows: &[FeatureRow],
    n_splits: usize,
    c_param: f64,
    seed: u64,
) -> Result<Vec<EvalReport>, ClassifyError> {
    Mode::ALL
        .iter()
        .map(|&mode| evaluate_mode(rows, mode, n_splits, c_param, seed))
        .collect()
}
