//! Analytics for circular smooth-pursuit eye-tracking sessions.
//!
//! The pipeline runs end to end at desk scale: simulate sober/impaired gaze
//! cohorts against a 0.4 Hz circular stimulus, decompose each trace into
//! phase/radial errors, extract six oculomotor metrics per run, compute the
//! paired-statistics table (t, p, Cohen's D, required observations at 80%
//! power), and evaluate linear-SVM impairment classifiers with ROC/AUC, with
//! and without per-subject baseline normalization.

pub mod classify;
pub mod features;
pub mod preprocess;
pub mod report;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod trace;
