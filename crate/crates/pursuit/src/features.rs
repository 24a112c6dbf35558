//! Phase/radial error decomposition and the six per-run oculomotor metrics.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::preprocess::{blink_loss_percent, mask_blinks, PreprocessError, ValidityMask, DEFAULT_BLINK_PAD};
use crate::trace::{target_angle, GazeRun, Session};

/// Gaze closer to the center than this fraction of the stimulus radius has
/// an ill-defined polar angle and is dropped.
const DEGENERATE_RADIUS_FRACTION: f64 = 0.1;

/// Per-sample gains beyond this multiple of target speed are treated as
/// saccade-like and excluded from the pursuit-gain estimate.
const SACCADE_GAIN_LIMIT: f64 = 3.0;

/// Minimum usable samples for a meaningful decomposition.
const MIN_USABLE_SAMPLES: usize = 10;

/// Exact header of the features CSV (plus a trailing `error` column for
/// degenerate runs).
pub const FEATURES_HEADER: &str =
    "subject_id,session,run_index,mean_radius_deg,v_gain,skew_radial,skew_phase,kurt_phase,blink_loss_pct";

/// Per-sample errors of gaze relative to the moving target. Entries at
/// unusable indices are NaN and must be filtered through `usable`.
#[derive(Debug, Clone)]
pub struct ErrorSeries {
    /// Wrapped to (-pi, pi].
    pub phase_err_rad: Vec<f64>,
    /// Gaze radius minus stimulus radius, degrees.
    pub radial_err_deg: Vec<f64>,
    pub gaze_radius_deg: Vec<f64>,
    pub usable: Vec<bool>,
}

/// The six per-run metrics; the unit of statistical and ML analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricVector {
    pub mean_radius_deg: f64,
    pub v_gain: f64,
    pub skew_radial: f64,
    pub skew_phase: f64,
    /// Excess kurtosis.
    pub kurt_phase: f64,
    pub blink_loss_pct: f64,
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("degenerate run: {0}")]
    DegenerateRun(String),
    #[error("too few samples (have {0})")]
    TooFewSamples(usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("no usable samples")]
    NoUsableSamples,
    #[error("n_bins must be >= 2")]
    TooFewBins,
    #[error("mask length {mask} does not match run length {run}")]
    MaskMismatch { mask: usize, run: usize },
    #[error("metric {metric}: {source}")]
    Metric {
        metric: &'static str,
        #[source]
        source: Box<FeatureError>,
    },
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

fn for_metric(metric: &'static str) -> impl Fn(FeatureError) -> FeatureError {
    move |source| FeatureError::Metric { metric, source: Box::new(source) }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let mut r = x.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Polar decomposition of gaze against the moving target.
pub fn decompose_errors(run: &GazeRun, mask: &ValidityMask) -> Result<ErrorSeries, FeatureError> {
    let n = run.samples.len();
    if mask.flags.len() != n {
        return Err(FeatureError::MaskMismatch { mask: mask.flags.len(), run: n });
    }
    let spec = &run.stimulus;
    let mut series = ErrorSeries {
        phase_err_rad: vec![f64::NAN; n],
        radial_err_deg: vec![f64::NAN; n],
        gaze_radius_deg: vec![f64::NAN; n],
        usable: vec![false; n],
    };
    let mut usable_count = 0;
    for (i, s) in run.samples.iter().enumerate() {
        if !mask.flags[i] {
            continue;
        }
        let dx = s.x_deg - spec.center_deg[0];
        let dy = s.y_deg - spec.center_deg[1];
        let gaze_radius = dx.hypot(dy);
        if gaze_radius < DEGENERATE_RADIUS_FRACTION * spec.radius_deg {
            continue;
        }
        let gaze_angle = dy.atan2(dx);
        series.phase_err_rad[i] = wrap_angle(gaze_angle - target_angle(spec, s.t_s));
        series.radial_err_deg[i] = gaze_radius - spec.radius_deg;
        series.gaze_radius_deg[i] = gaze_radius;
        series.usable[i] = true;
        usable_count += 1;
    }
    if usable_count < MIN_USABLE_SAMPLES {
        return Err(FeatureError::DegenerateRun(format!(
            "only {usable_count} usable samples"
        )));
    }
    Ok(series)
}

fn central_moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (mean, m2 / n, m3 / n, m4 / n)
}

/// Variance below this is float cancellation dust (errors are O(10 deg)
/// quantities), not signal; shape statistics on it would be meaningless.
const VARIANCE_FLOOR: f64 = 1e-24;

/// Uncorrected moment skewness g1 = m3 / m2^(3/2).
pub fn sample_skewness(xs: &[f64]) -> Result<f64, FeatureError> {
    if xs.len() < 3 {
        return Err(FeatureError::TooFewSamples(xs.len()));
    }
    let (_, m2, m3, _) = central_moments(xs);
    if m2 <= VARIANCE_FLOOR {
        return Err(FeatureError::ZeroVariance);
    }
    Ok(m3 / m2.powf(1.5))
}

/// Uncorrected excess kurtosis g2 = m4 / m2^2 - 3.
pub fn excess_kurtosis(xs: &[f64]) -> Result<f64, FeatureError> {
    if xs.len() < 4 {
        return Err(FeatureError::TooFewSamples(xs.len()));
    }
    let (_, m2, _, m4) = central_moments(xs);
    if m2 <= VARIANCE_FLOOR {
        return Err(FeatureError::ZeroVariance);
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

/// Pursuit velocity gain: median ratio of gaze to target angular velocity
/// over contiguous usable spans, after rejecting saccade-like samples.
pub fn v_gain(run: &GazeRun, mask: &ValidityMask) -> Result<f64, FeatureError> {
    let n = run.samples.len();
    if mask.flags.len() != n {
        return Err(FeatureError::MaskMismatch { mask: mask.flags.len(), run: n });
    }
    let spec = &run.stimulus;
    let omega = spec.angular_velocity();

    // polar angle where defined
    let mut angle = vec![f64::NAN; n];
    for (i, s) in run.samples.iter().enumerate() {
        if !mask.flags[i] {
            continue;
        }
        let dx = s.x_deg - spec.center_deg[0];
        let dy = s.y_deg - spec.center_deg[1];
        if dx.hypot(dy) < DEGENERATE_RADIUS_FRACTION * spec.radius_deg {
            continue;
        }
        angle[i] = dy.atan2(dx);
    }

    let mut gains = Vec::new();
    let mut span_start = None;
    for i in 0..=n {
        let ok = i < n && angle[i].is_finite();
        match (span_start, ok) {
            (None, true) => span_start = Some(i),
            (Some(start), false) => {
                collect_span_gains(&run.samples, &angle, start, i, omega, &mut gains);
                span_start = None;
            }
            _ => {}
        }
    }
    if gains.is_empty() {
        return Err(FeatureError::DegenerateRun("no gain samples survive".into()));
    }
    Ok(median(&mut gains))
}

fn collect_span_gains(
    samples: &[crate::trace::GazeSample],
    angle: &[f64],
    start: usize,
    end: usize,
    omega: f64,
    gains: &mut Vec<f64>,
) {
    if end - start < 3 {
        return;
    }
    // unwrap within the span
    let mut unwrapped = Vec::with_capacity(end - start);
    unwrapped.push(angle[start]);
    for &a in &angle[start + 1..end] {
        let prev = *unwrapped.last().expect("span non-empty");
        unwrapped.push(prev + wrap_angle(a - prev));
    }
    for i in 1..unwrapped.len() - 1 {
        let dt = samples[start + i + 1].t_s - samples[start + i - 1].t_s;
        if dt <= 0.0 {
            continue;
        }
        let vel = (unwrapped[i + 1] - unwrapped[i - 1]) / dt;
        let gain = vel / omega;
        if gain.abs() <= SACCADE_GAIN_LIMIT {
            gains.push(gain);
        }
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("no NaN gains"));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn usable_values(values: &[f64], usable: &[bool]) -> Vec<f64> {
    values
        .iter()
        .zip(usable)
        .filter_map(|(&v, &u)| u.then_some(v))
        .collect()
}

/// Computes all six metrics for one run with the default blink padding.
pub fn metric_vector(run: &GazeRun) -> Result<MetricVector, FeatureError> {
    let mask = mask_blinks(run, DEFAULT_BLINK_PAD)?;
    let series = decompose_errors(run, &mask)?;
    let radial = usable_values(&series.radial_err_deg, &series.usable);
    let phase = usable_values(&series.phase_err_rad, &series.usable);
    let radii = usable_values(&series.gaze_radius_deg, &series.usable);

    let mean_radius_deg = radii.iter().sum::<f64>() / radii.len() as f64;
    let skew_radial = sample_skewness(&radial).map_err(for_metric("skew_radial"))?;
    let skew_phase = sample_skewness(&phase).map_err(for_metric("skew_phase"))?;
    let kurt_phase = excess_kurtosis(&phase).map_err(for_metric("kurt_phase"))?;
    let v_gain = v_gain(run, &mask).map_err(for_metric("v_gain"))?;
    let blink_loss_pct = blink_loss_percent(&mask)?;

    Ok(MetricVector {
        mean_radius_deg,
        v_gain,
        skew_radial,
        skew_phase,
        kurt_phase,
        blink_loss_pct,
    })
}

/// Equal-width histogram over the usable values.
pub fn error_histogram(
    values: &[f64],
    usable: &[bool],
    n_bins: usize,
) -> Result<(Vec<f64>, Vec<u64>), FeatureError> {
    if n_bins < 2 {
        return Err(FeatureError::TooFewBins);
    }
    let vals = usable_values(values, usable);
    if vals.is_empty() {
        return Err(FeatureError::NoUsableSamples);
    }
    let mut lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        // degenerate span: widen by half a unit each side
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0u64; n_bins];
    for v in vals {
        let idx = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    Ok((edges, counts))
}

/// One row of the features CSV.
#[derive(Debug, Clone)]
pub struct FeatureRow {
    pub subject_id: String,
    pub session: Session,
    pub run_index: u8,
    pub metrics: MetricVector,
}

impl FeatureRow {
    /// Feature values in header order.
    pub fn metric_values(&self) -> [f64; 6] {
        let m = &self.metrics;
        [
            m.mean_radius_deg,
            m.v_gain,
            m.skew_radial,
            m.skew_phase,
            m.kurt_phase,
            m.blink_loss_pct,
        ]
    }
}

/// Serializes feature rows (and degenerate-run notes) to CSV.
pub fn features_csv_string(rows: &[FeatureRow], errors: &[(String, Session, u8, String)]) -> String {
    let mut out = String::new();
    out.push_str(FEATURES_HEADER);
    out.push_str(",error\n");
    for r in rows {
        let m = r.metric_values();
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},\n",
            r.subject_id, r.session, r.run_index, m[0], m[1], m[2], m[3], m[4], m[5]
        ));
    }
    for (subject, session, run_index, note) in errors {
        out.push_str(&format!("{subject},{session},{run_index},,,,,,,{note}\n"));
    }
    out
}

/// Parses a features CSV, skipping rows that carry an error note.
pub fn parse_features_csv(text: &str, path: &str) -> Result<Vec<FeatureRow>, FeatureParseError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| FeatureParseError::new(path, 1, "empty file"))?;
    let trimmed = header.trim_end();
    if trimmed != FEATURES_HEADER && trimmed != format!("{FEATURES_HEADER},error") {
        return Err(FeatureParseError::new(path, 1, "unexpected header"));
    }
    let has_error_col = trimmed.ends_with(",error");
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = if has_error_col { 10 } else { 9 };
        if fields.len() != expected {
            return Err(FeatureParseError::new(
                path,
                lineno,
                &format!("expected {expected} fields, got {}", fields.len()),
            ));
        }
        if has_error_col && !fields[9].is_empty() {
            continue; // degenerate run, excluded downstream
        }
        let session = Session::parse(fields[1])
            .ok_or_else(|| FeatureParseError::new(path, lineno, "bad session"))?;
        let run_index: u8 = fields[2]
            .parse()
            .map_err(|_| FeatureParseError::new(path, lineno, "bad run_index"))?;
        let mut nums = [0.0f64; 6];
        for (j, slot) in nums.iter_mut().enumerate() {
            let raw = fields[3 + j];
            let v: f64 = raw
                .parse()
                .map_err(|_| FeatureParseError::new(path, lineno, &format!("bad number `{raw}`")))?;
            if !v.is_finite() {
                return Err(FeatureParseError::new(path, lineno, "non-finite metric"));
            }
            *slot = v;
        }
        rows.push(FeatureRow {
            subject_id: fields[0].to_string(),
            session,
            run_index,
            metrics: MetricVector {
                mean_radius_deg: nums[0],
                v_gain: nums[1],
                skew_radial: nums[2],
                skew_phase: nums[3],
                kurt_phase: nums[4],
                blink_loss_pct: nums[5],
            },
        });
    }
    Ok(rows)
}

#[derive(Debug, Error)]
#[error("{path}: line {line}: {msg}")]
pub struct FeatureParseError {
    pub path: String,
    pub line: usize,
    pub msg: String,
}

impl FeatureParseError {
    fn new(path: &str, line: usize, msg: &str) -> Self {
        FeatureParseError { path: path.to_string(), line, msg: msg.to_string() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::mask_blinks;
    use crate::synth::{simulate_run, OculomotorParams};
    use crate::trace::{GazeSample, StimulusSpec};
    use proptest::prelude::*;

    fn perfect_run() -> GazeRun {
        simulate_run(&OculomotorParams::perfect(), &StimulusSpec::default(), 1)
    }

    fn full_mask(run: &GazeRun) -> ValidityMask {
        mask_blinks(run, 0).unwrap()
    }

    #[test]
    fn perfect_tracking_has_zero_errors() {
        let run = perfect_run();
        let series = decompose_errors(&run, &full_mask(&run)).unwrap();
        for i in 0..run.samples.len() {
            assert!(series.usable[i]);
            assert!(series.phase_err_rad[i].abs() < 1e-9);
            assert!(series.radial_err_deg[i].abs() < 1e-9);
        }
    }

    #[test]
    fn radial_offset_shows_in_radial_error_only() {
        let mut run = perfect_run();
        for s in &mut run.samples {
            let r = s.x_deg.hypot(s.y_deg);
            let scale = (r + 1.0) / r;
            s.x_deg *= scale;
            s.y_deg *= scale;
        }
        let series = decompose_errors(&run, &full_mask(&run)).unwrap();
        for i in 0..run.samples.len() {
            assert!((series.radial_err_deg[i] - 1.0).abs() < 1e-9);
            assert!(series.phase_err_rad[i].abs() < 1e-9);
        }
    }

    #[test]
    fn phase_wrap_convention() {
        // gaze at 350 deg, target at 10 deg -> -20 deg, not +340
        let err = wrap_angle(350f64.to_radians() - 10f64.to_radians());
        assert!((err - (-20f64.to_radians())).abs() < 1e-12);
        assert!((err + 0.3491).abs() < 1e-4);
    }

    #[test]
    fn wrap_range_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn skewness_known_values() {
        assert_eq!(sample_skewness(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
        // [0,0,0,1]: g1 = 2/sqrt(3)
        let g1 = sample_skewness(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((g1 - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((g1 - 1.1547).abs() < 1e-4);
    }

    #[test]
    fn skewness_errors() {
        assert!(matches!(sample_skewness(&[1.0, 2.0]), Err(FeatureError::TooFewSamples(2))));
        assert!(matches!(sample_skewness(&[5.0; 8]), Err(FeatureError::ZeroVariance)));
    }

    #[test]
    fn kurtosis_known_values() {
        let g2 = excess_kurtosis(&[-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert!((g2 + 2.0).abs() < 1e-12);
        assert!(matches!(excess_kurtosis(&[1.0, 2.0, 3.0]), Err(FeatureError::TooFewSamples(3))));
    }

    #[test]
    fn kurtosis_of_normal_draws_is_near_zero() {
        let mut rng = crate::rng::rng_for(5);
        let xs: Vec<f64> = (0..1_000_000).map(|_| crate::rng::standard_normal(&mut rng)).collect();
        let g2 = excess_kurtosis(&xs).unwrap();
        assert!(g2.abs() < 0.02, "g2 = {g2}");
    }

    #[test]
    fn v_gain_of_perfect_and_frozen_and_half_speed() {
        let run = perfect_run();
        assert!((v_gain(&run, &full_mask(&run)).unwrap() - 1.0).abs() < 1e-9);

        let mut frozen = perfect_run();
        for s in &mut frozen.samples {
            s.x_deg = 10.0;
            s.y_deg = 0.0;
        }
        assert!(v_gain(&frozen, &full_mask(&frozen)).unwrap().abs() < 1e-9);

        let spec = StimulusSpec::default();
        let half = GazeRun {
            samples: perfect_run()
                .samples
                .iter()
                .map(|s| {
                    let theta = 0.5 * target_angle(&spec, s.t_s);
                    GazeSample {
                        t_s: s.t_s,
                        x_deg: spec.radius_deg * theta.cos(),
                        y_deg: spec.radius_deg * theta.sin(),
                        valid: true,
                    }
                })
                .collect(),
            ..perfect_run()
        };
        assert!((v_gain(&half, &full_mask(&half)).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn v_gain_of_time_reversed_run_is_minus_one() {
        let mut run = perfect_run();
        let times: Vec<f64> = run.samples.iter().map(|s| s.t_s).collect();
        run.samples.reverse();
        for (s, &t) in run.samples.iter_mut().zip(&times) {
            s.t_s = t;
        }
        assert!((v_gain(&run, &full_mask(&run)).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn noiseless_run_reports_zero_variance_with_metric_name() {
        let err = metric_vector(&perfect_run()).unwrap_err();
        match err {
            FeatureError::Metric { metric, source } => {
                assert_eq!(metric, "skew_radial");
                assert!(matches!(*source, FeatureError::ZeroVariance));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn metric_vector_on_noisy_run() {
        let params = OculomotorParams {
            radial_noise_sd_deg: 0.5,
            radial_noise_corr_time_s: 0.3,
            jitter_sd_deg: 0.1,
            ..OculomotorParams::perfect()
        };
        let mut radius_sum = 0.0;
        let mut gain_sum = 0.0;
        let n_seeds = 50;
        for seed in 0..n_seeds {
            let run = simulate_run(&params, &StimulusSpec::default(), seed);
            let m = metric_vector(&run).unwrap();
            radius_sum += m.mean_radius_deg;
            gain_sum += m.v_gain;
            assert_eq!(m.blink_loss_pct, 0.0);
        }
        let mean_radius = radius_sum / n_seeds as f64;
        let mean_gain = gain_sum / n_seeds as f64;
        assert!((mean_radius - 10.0).abs() < 0.05, "mean radius {mean_radius}");
        assert!((mean_gain - 1.0).abs() < 0.02, "v gain {mean_gain}");
    }

    #[test]
    fn measured_gain_tracks_parameter() {
        let spec = StimulusSpec::default();
        let params = OculomotorParams { pursuit_gain: 0.8, ..OculomotorParams::perfect() };
        let run = simulate_run(&params, &spec, 3);
        let g = v_gain(&run, &full_mask(&run)).unwrap();
        assert!((g - 0.8).abs() < 0.01, "gain {g}");
        // monotone in the parameter, noiseless case
        let lower = simulate_run(
            &OculomotorParams { pursuit_gain: 0.6, ..OculomotorParams::perfect() },
            &spec,
            3,
        );
        assert!(v_gain(&lower, &full_mask(&lower)).unwrap() < g);
    }

    #[test]
    fn blanked_samples_floor_blink_loss() {
        let mut run = simulate_run(
            &OculomotorParams { jitter_sd_deg: 0.2, ..OculomotorParams::perfect() },
            &StimulusSpec::default(),
            8,
        );
        let n = run.samples.len();
        let blank = (n as f64 * 0.07).round() as usize;
        for s in &mut run.samples[100..100 + blank] {
            s.valid = false;
        }
        let m = metric_vector(&run).unwrap();
        assert!(m.blink_loss_pct >= 7.0, "loss {}", m.blink_loss_pct);
    }

    #[test]
    fn histogram_counts() {
        let (edges, counts) = error_histogram(&[0.0, 0.0, 0.0, 1.0], &[true; 4], 2).unwrap();
        assert_eq!(counts, vec![3, 1]);
        assert_eq!(edges.len(), 3);
    }

    #[test]
    fn histogram_degenerate_span_widens() {
        let (edges, counts) = error_histogram(&[2.0; 5], &[true; 5], 4).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), 5);
        assert!((edges[0] - 1.5).abs() < 1e-12 && (edges[4] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn histogram_uniform_spread() {
        let mut rng = crate::rng::rng_for(11);
        use rand::Rng;
        let vals: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
        let (_, counts) = error_histogram(&vals, &vec![true; 1000], 10).unwrap();
        for c in counts {
            assert!((c as i64 - 100).abs() <= 40, "count {c}");
        }
    }

    #[test]
    fn rotation_invariance_of_metrics() {
        let params = OculomotorParams {
            radial_noise_sd_deg: 0.3,
            radial_noise_corr_time_s: 0.3,
            jitter_sd_deg: 0.2,
            slip_rate_hz: 0.3,
            slip_duration_mean_s: 0.3,
            slip_gain_drop: 0.5,
            radial_slip_coupling: 0.3,
            ..OculomotorParams::perfect()
        };
        let run = simulate_run(&params, &StimulusSpec::default(), 4);
        let base = metric_vector(&run).unwrap();

        // rotate gaze and stimulus start phase by a common angle: shift time
        // origin is equivalent; rotate positions directly instead
        let angle = 1.234f64;
        let (c, s) = (angle.cos(), angle.sin());
        let mut rotated = run.clone();
        for p in &mut rotated.samples {
            let (x, y) = (p.x_deg, p.y_deg);
            p.x_deg = c * x - s * y;
            p.y_deg = c * y + s * x;
        }
        // rotating the trace alone shifts phase error by a constant, which
        // leaves skew/kurtosis and every radial quantity unchanged
        let rot = metric_vector(&rotated).unwrap();
        assert!((base.mean_radius_deg - rot.mean_radius_deg).abs() < 1e-9);
        assert!((base.v_gain - rot.v_gain).abs() < 1e-9);
        assert!((base.skew_radial - rot.skew_radial).abs() < 1e-9);
        assert!((base.skew_phase - rot.skew_phase).abs() < 1e-6);
        assert!((base.kurt_phase - rot.kurt_phase).abs() < 1e-6);
    }

    #[test]
    fn features_csv_round_trip_and_error_rows() {
        let rows = vec![FeatureRow {
            subject_id: "s01".into(),
            session: Session::Baseline,
            run_index: 0,
            metrics: MetricVector {
                mean_radius_deg: 10.0,
                v_gain: 0.95,
                skew_radial: -0.1,
                skew_phase: 0.2,
                kurt_phase: 0.3,
                blink_loss_pct: 4.5,
            },
        }];
        let errors = vec![("s02".to_string(), Session::Impaired, 1, "zero variance".to_string())];
        let text = features_csv_string(&rows, &errors);
        let parsed = parse_features_csv(&text, "mem").unwrap();
        assert_eq!(parsed.len(), 1); // error row excluded
        assert_eq!(parsed[0].subject_id, "s01");
        assert!((parsed[0].metrics.v_gain - 0.95).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn skewness_negation(xs in prop::collection::vec(-100.0f64..100.0, 3..50)) {
            if let Ok(g) = sample_skewness(&xs) {
                let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
                let gn = sample_skewness(&neg).unwrap();
                prop_assert!((g + gn).abs() < 1e-8);
            }
        }

        #[test]
        fn kurtosis_affine_invariance(xs in prop::collection::vec(-100.0f64..100.0, 4..50),
                                      a in 0.5f64..3.0, b in -10.0f64..10.0) {
            if let Ok(g) = excess_kurtosis(&xs) {
                let mapped: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
                let gm = excess_kurtosis(&mapped).unwrap();
                prop_assert!((g - gm).abs() < 1e-6 * (1.0 + g.abs()));
            }
        }

        #[test]
        fn wrap_angle_in_range(x in -1000.0f64..1000.0) {
            let w = wrap_angle(x);
            prop_assert!(w > -PI - 1e-12 && w <= PI + 1e-12);
            // wrap preserves the angle modulo 2*pi
            prop_assert!(((x - w) / TAU).round() * TAU - (x - w) < 1e-6);
        }
    }
}
