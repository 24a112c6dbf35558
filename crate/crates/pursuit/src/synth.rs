//! Synthetic gaze cohorts from a parametric oculomotor model.
//!
//! The deterministic part of a trace follows the stimulus with a velocity
//! gain and a fixed phase lag. On top of that, three stochastic processes
//! degrade tracking:
//!
//! * smooth radial wobble: first-order autoregressive noise on gaze radius;
//! * white positional jitter per axis;
//! * pursuit slips: Poisson-arriving episodes where angular velocity drops,
//!   lag accumulates, and the eye cuts inside the circle in proportion to
//!   the lag, followed by a fast catch-up that the gain estimator rejects
//!   as saccade-like.
//!
//! Blinks arrive as a Poisson process with truncated-normal durations and
//! mark samples invalid. Impairment is expressed as parameter shifts (more
//! slip load, more noise, a longer lag), consistent with a sluggish,
//! low-pass-filtered oculomotor response.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{child_seed, rng_for, standard_normal};
use crate::trace::{
    target_angle, write_atomic, write_run, CohortManifest, GazeRun, GazeSample, Session,
    StimulusSpec, SubjectRecord, TraceError,
};

/// Catch-up angular speed after a slip, as a multiple of target speed.
/// Above the 3x saccade-rejection threshold used by the gain estimator.
const CATCH_UP_SPEED_MULTIPLE: f64 = 8.0;

/// Subject-level oculomotor parameters. Also used as a parameter-shaped
/// delta (impairment shift, between-subject spread), where fields may be
/// negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OculomotorParams {
    /// Eye angular speed over target angular speed during locked pursuit.
    pub pursuit_gain: f64,
    /// Constant tracking delay, seconds.
    pub phase_lag_s: f64,
    /// Stationary SD of the smooth radial wobble, degrees.
    pub radial_noise_sd_deg: f64,
    /// Correlation time of the radial wobble, seconds.
    pub radial_noise_corr_time_s: f64,
    /// White positional noise SD per axis, degrees.
    pub jitter_sd_deg: f64,
    /// Expected blink events per second.
    pub blink_rate_hz: f64,
    /// Mean blink duration, seconds.
    pub blink_duration_mean_s: f64,
    /// SD of blink duration, seconds.
    pub blink_duration_sd_s: f64,
    /// Expected pursuit-slip episodes per second.
    pub slip_rate_hz: f64,
    /// Mean slip episode duration, seconds (exponentially distributed).
    pub slip_duration_mean_s: f64,
    /// Fractional velocity deficit during a slip, 0..1.
    pub slip_gain_drop: f64,
    /// Inward radial excursion per radian of slip lag, as a fraction of the
    /// stimulus radius.
    pub radial_slip_coupling: f64,
}

impl OculomotorParams {
    /// All-zero delta.
    pub fn zero() -> Self {
        OculomotorParams {
            pursuit_gain: 0.0,
            phase_lag_s: 0.0,
            radial_noise_sd_deg: 0.0,
            radial_noise_corr_time_s: 0.0,
            jitter_sd_deg: 0.0,
            blink_rate_hz: 0.0,
            blink_duration_mean_s: 0.0,
            blink_duration_sd_s: 0.0,
            slip_rate_hz: 0.0,
            slip_duration_mean_s: 0.0,
            slip_gain_drop: 0.0,
            radial_slip_coupling: 0.0,
        }
    }

    /// A quiet, noiseless tracker; useful as a unit-test fixture.
    pub fn perfect() -> Self {
        OculomotorParams {
            pursuit_gain: 1.0,
            ..OculomotorParams::zero()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let checks: [(&str, bool); 8] = [
            (
                "pursuit_gain in 0..=1.5",
                (0.0..=1.5).contains(&self.pursuit_gain),
            ),
            ("phase_lag_s >= 0", self.phase_lag_s >= 0.0),
            ("radial_noise_sd_deg >= 0", self.radial_noise_sd_deg >= 0.0),
            (
                "radial_noise_corr_time_s >= 0",
                self.radial_noise_corr_time_s >= 0.0,
            ),
            ("jitter_sd_deg >= 0", self.jitter_sd_deg >= 0.0),
            (
                "blink params >= 0",
                self.blink_rate_hz >= 0.0
                    && self.blink_duration_mean_s >= 0.0
                    && self.blink_duration_sd_s >= 0.0,
            ),
            (
                "slip params >= 0",
                self.slip_rate_hz >= 0.0 && self.slip_duration_mean_s >= 0.0,
            ),
            (
                "slip_gain_drop in 0..=1, radial_slip_coupling >= 0",
                (0.0..=1.0).contains(&self.slip_gain_drop) && self.radial_slip_coupling >= 0.0,
            ),
        ];
        for (msg, ok) in checks {
            if !ok {
                return Err(SynthError::InvalidParams(msg.into()));
            }
        }
        Ok(())
    }

    /// Element-wise sum with a delta.
    pub fn add(&self, d: &OculomotorParams) -> Self {
        OculomotorParams {
            pursuit_gain: self.pursuit_gain + d.pursuit_gain,
            phase_lag_s: self.phase_lag_s + d.phase_lag_s,
            radial_noise_sd_deg: self.radial_noise_sd_deg + d.radial_noise_sd_deg,
            radial_noise_corr_time_s: self.radial_noise_corr_time_s + d.radial_noise_corr_time_s,
            jitter_sd_deg: self.jitter_sd_deg + d.jitter_sd_deg,
            blink_rate_hz: self.blink_rate_hz + d.blink_rate_hz,
            blink_duration_mean_s: self.blink_duration_mean_s + d.blink_duration_mean_s,
            blink_duration_sd_s: self.blink_duration_sd_s + d.blink_duration_sd_s,
            slip_rate_hz: self.slip_rate_hz + d.slip_rate_hz,
            slip_duration_mean_s: self.slip_duration_mean_s + d.slip_duration_mean_s,
            slip_gain_drop: self.slip_gain_drop + d.slip_gain_drop,
            radial_slip_coupling: self.radial_slip_coupling + d.radial_slip_coupling,
        }
    }

    /// Clamps every field back into its invariant range, recording each
    /// clamp as a human-readable note.
    pub fn clamped(&self, log: &mut Vec<String>, context: &str) -> Self {
        let mut out = *self;
        let mut clamp = |name: &str, v: &mut f64, lo: f64, hi: f64| {
            let c = v.clamp(lo, hi);
            if c != *v {
                log.push(format!("{context}: {name} clamped {v:.4} -> {c:.4}"));
                *v = c;
            }
        };
        clamp("pursuit_gain", &mut out.pursuit_gain, 0.0, 1.5);
        clamp("phase_lag_s", &mut out.phase_lag_s, 0.0, f64::INFINITY);
        clamp("radial_noise_sd_deg", &mut out.radial_noise_sd_deg, 0.0, f64::INFINITY);
        clamp(
            "radial_noise_corr_time_s",
            &mut out.radial_noise_corr_time_s,
            0.0,
            f64::INFINITY,
        );
        clamp("jitter_sd_deg", &mut out.jitter_sd_deg, 0.0, f64::INFINITY);
        clamp("blink_rate_hz", &mut out.blink_rate_hz, 0.0, f64::INFINITY);
        clamp("blink_duration_mean_s", &mut out.blink_duration_mean_s, 0.0, f64::INFINITY);
        clamp("blink_duration_sd_s", &mut out.blink_duration_sd_s, 0.0, f64::INFINITY);
        clamp("slip_rate_hz", &mut out.slip_rate_hz, 0.0, f64::INFINITY);
        clamp("slip_duration_mean_s", &mut out.slip_duration_mean_s, 0.0, f64::INFINITY);
        clamp("slip_gain_drop", &mut out.slip_gain_drop, 0.0, 1.0);
        clamp("radial_slip_coupling", &mut out.radial_slip_coupling, 0.0, f64::INFINITY);
        out
    }
}

/// Cohort-level generator configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_subjects: usize,
    pub runs_per_session: usize,
    pub seed: u64,
    /// Population means of the sober parameters.
    pub sober_population: OculomotorParams,
    /// Added to each subject's sober parameters for impaired runs.
    pub impaired_shift: OculomotorParams,
    /// Per-parameter SD of the subject-level draws.
    pub between_subject_sd: OculomotorParams,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            n_subjects: 19,
            runs_per_session: 3,
            seed: 42,
            sober_population: default_sober_population(),
            impaired_shift: default_impaired_shift(),
            between_subject_sd: default_between_subject_sd(),
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_subjects < 2 {
            return Err(SynthError::InvalidParams("n_subjects must be >= 2".into()));
        }
        if self.runs_per_session < 1 {
            return Err(SynthError::InvalidParams("runs_per_session must be >= 1".into()));
        }
        self.sober_population.validate()
    }
}

/// Population means of a typical sober tracker.
pub fn default_sober_population() -> OculomotorParams {
    OculomotorParams {
        pursuit_gain: 1.0,
        phase_lag_s: 0.02,
        radial_noise_sd_deg: 0.30,
        radial_noise_corr_time_s: 0.35,
        jitter_sd_deg: 0.35,
        blink_rate_hz: 0.30,
        blink_duration_mean_s: 0.25,
        blink_duration_sd_s: 0.05,
        slip_rate_hz: 0.08,
        slip_duration_mean_s: 0.25,
        slip_gain_drop: 0.45,
        radial_slip_coupling: 0.35,
    }
}

/// Default impairment shift, calibrated so the six group t-statistics carry
/// the expected signs under diff = impaired - baseline: mean radius, v gain,
/// radial skew, and blink loss go down; phase skew and phase kurtosis go up.
pub fn default_impaired_shift() -> OculomotorParams {
    OculomotorParams {
        pursuit_gain: 0.0,
        phase_lag_s: 0.01,
        radial_noise_sd_deg: 0.03,
        radial_noise_corr_time_s: 0.0,
        jitter_sd_deg: 0.03,
        blink_rate_hz: -0.08,
        blink_duration_mean_s: 0.0,
        blink_duration_sd_s: 0.0,
        slip_rate_hz: 0.16,
        slip_duration_mean_s: 0.10,
        slip_gain_drop: 0.05,
        radial_slip_coupling: 0.0,
    }
}

/// Default between-subject spread of the sober parameters.
pub fn default_between_subject_sd() -> OculomotorParams {
    OculomotorParams {
        pursuit_gain: 0.005,
        phase_lag_s: 0.01,
        radial_noise_sd_deg: 0.06,
        radial_noise_corr_time_s: 0.05,
        jitter_sd_deg: 0.07,
        blink_rate_hz: 0.14,
        blink_duration_mean_s: 0.06,
        blink_duration_sd_s: 0.01,
        slip_rate_hz: 0.06,
        slip_duration_mean_s: 0.06,
        slip_gain_drop: 0.08,
        radial_slip_coupling: 0.05,
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// A generated cohort: all runs, subject metadata, and any parameter clamps
/// applied after subject-level draws.
#[derive(Debug)]
pub struct CohortData {
    pub runs: Vec<GazeRun>,
    pub subjects: Vec<SubjectRecord>,
    pub clamp_log: Vec<String>,
}

/// Simulates the sample stream of one run.
pub fn simulate_samples(
    params: &OculomotorParams,
    spec: &StimulusSpec,
    seed: u64,
) -> Vec<GazeSample> {
    let mut rng = rng_for(seed);
    let n = spec.n_samples();
    let dt = 1.0 / spec.sample_rate_hz;
    let omega = spec.angular_velocity();
    let dir = spec.direction.angular_sign();
    let speed = omega.abs();

    // phi_base(t) = theta(-lag) + gain * (theta(t - lag) - theta(-lag))
    let phi0 = target_angle(spec, -params.phase_lag_s);

    // AR(1) radial wobble
    let rho = if params.radial_noise_corr_time_s > 0.0 {
        (-dt / params.radial_noise_corr_time_s).exp()
    } else {
        0.0
    };
    let innovation_sd = params.radial_noise_sd_deg * (1.0 - rho * rho).sqrt();
    let mut wobble = if params.radial_noise_sd_deg > 0.0 {
        params.radial_noise_sd_deg * standard_normal(&mut rng)
    } else {
        0.0
    };

    let mut slips = EpisodeClock::new(params.slip_rate_hz, &mut rng);
    let mut blinks = EpisodeClock::new(params.blink_rate_hz, &mut rng);
    let mut slip_lag = 0.0f64; // radians behind the deterministic angle
    let mut slip_state = SlipState::Locked;

    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;

        // pursuit-slip state machine
        match slip_state {
            SlipState::Locked => {
                if slips.starts(t, &mut rng) {
                    let d = sample_exponential(params.slip_duration_mean_s, &mut rng).max(dt);
                    slip_state = SlipState::Slipping { until: t + d };
                }
            }
            SlipState::Slipping { until } => {
                slip_lag += params.slip_gain_drop * params.pursuit_gain * speed * dt;
                if t >= until {
                    slip_state = SlipState::Recovering;
                }
            }
            SlipState::Recovering => {
                slip_lag -= CATCH_UP_SPEED_MULTIPLE * speed * dt;
                if slip_lag <= 0.0 {
                    slip_lag = 0.0;
                    slip_state = SlipState::Locked;
                    slips.rearm(t, &mut rng);
                }
            }
        }

        // blink state machine
        let in_blink = match blinks.active_until {
            Some(until) if t < until => true,
            Some(_) => {
                blinks.active_until = None;
                blinks.rearm(t, &mut rng);
                false
            }
            None => {
                if blinks.starts(t, &mut rng) {
                    let raw = params.blink_duration_mean_s
                        + params.blink_duration_sd_s * standard_normal(&mut rng);
                    blinks.active_until = Some(t + raw.max(dt));
                    true
                } else {
                    false
                }
            }
        };

        let phi_base = phi0 + params.pursuit_gain * (target_angle(spec, t - params.phase_lag_s) - phi0);
        let phi = phi_base - dir * slip_lag;

        if params.radial_noise_sd_deg > 0.0 {
            wobble = rho * wobble + innovation_sd * standard_normal(&mut rng);
        }
        let inward =
            params.radial_slip_coupling * spec.radius_deg * slip_lag.min(std::f64::consts::FRAC_PI_2).sin();
        let radius = spec.radius_deg + wobble - inward;

        let (jx, jy) = if params.jitter_sd_deg > 0.0 {
            (
                params.jitter_sd_deg * standard_normal(&mut rng),
                params.jitter_sd_deg * standard_normal(&mut rng),
            )
        } else {
            (0.0, 0.0)
        };

        samples.push(GazeSample {
            t_s: t,
            x_deg: spec.center_deg[0] + radius * phi.cos() + jx,
            y_deg: spec.center_deg[1] + radius * phi.sin() + jy,
            valid: !in_blink,
        });
    }
    samples
}

/// Simulates one run under a throwaway identity. `simulate_cohort` assigns
/// real subject/session identities.
pub fn simulate_run(params: &OculomotorParams, spec: &StimulusSpec, seed: u64) -> GazeRun {
    GazeRun {
        subject_id: "sim".into(),
        session: Session::Baseline,
        run_index: 0,
        stimulus: *spec,
        samples: simulate_samples(params, spec, seed),
    }
}

enum SlipState {
    Locked,
    Slipping { until: f64 },
    Recovering,
}

/// Poisson arrival clock for blink/slip episodes.
struct EpisodeClock {
    rate_hz: f64,
    next_start: f64,
    active_until: Option<f64>,
}

impl EpisodeClock {
    fn new(rate_hz: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut clock = EpisodeClock { rate_hz, next_start: f64::INFINITY, active_until: None };
        clock.rearm(0.0, rng);
        clock
    }

    fn rearm(&mut self, now: f64, rng: &mut ChaCha8Rng) {
        self.next_start = if self.rate_hz > 0.0 {
            now + sample_exponential(1.0 / self.rate_hz, rng)
        } else {
            f64::INFINITY
        };
    }

    fn starts(&mut self, t: f64, rng: &mut ChaCha8Rng) -> bool {
        if t >= self.next_start {
            self.rearm(t, rng);
            true
        } else {
            false
        }
    }
}

fn sample_exponential(mean: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    -mean * u.ln()
}

const SESSIONS: [Session; 2] = [Session::Baseline, Session::Impaired];

/// Draws subject-level parameters and generates every run of the cohort.
///
/// Each run owns a child RNG derived from (seed, subject, session, run), so
/// generation order never affects the output.
pub fn simulate_cohort(cohort: &CohortSpec, spec: &StimulusSpec) -> Result<CohortData, SynthError> {
    cohort.validate()?;
    spec.validate().map_err(SynthError::Trace)?;

    let mut runs = Vec::with_capacity(cohort.n_subjects * cohort.runs_per_session * 2);
    let mut subjects = Vec::with_capacity(cohort.n_subjects);
    let mut clamp_log = Vec::new();

    for subj_idx in 0..cohort.n_subjects {
        let subject_id = format!("s{:02}", subj_idx + 1);
        let mut draw_rng = rng_for(child_seed(cohort.seed, &[0xd7a3, subj_idx as u64]));
        let sober_raw = draw_params(
            &cohort.sober_population,
            &cohort.between_subject_sd,
            &mut draw_rng,
        );
        let sober = sober_raw.clamped(&mut clamp_log, &format!("{subject_id} sober"));
        let impaired = sober
            .add(&cohort.impaired_shift)
            .clamped(&mut clamp_log, &format!("{subject_id} impaired"));

        subjects.push(SubjectRecord { subject_id: subject_id.clone(), ..SubjectRecord::default() });

        for (sess_idx, &session) in SESSIONS.iter().enumerate() {
            let params = if session == Session::Baseline { &sober } else { &impaired };
            for run_index in 0..cohort.runs_per_session {
                let seed = child_seed(
                    cohort.seed,
                    &[1, subj_idx as u64, sess_idx as u64, run_index as u64],
                );
                runs.push(GazeRun {
                    subject_id: subject_id.clone(),
                    session,
                    run_index: run_index as u8,
                    stimulus: *spec,
                    samples: simulate_samples(params, spec, seed),
                });
            }
        }
    }
    Ok(CohortData { runs, subjects, clamp_log })
}

fn draw_params(
    mean: &OculomotorParams,
    sd: &OculomotorParams,
    rng: &mut ChaCha8Rng,
) -> OculomotorParams {
    let mut deviate = |m: f64, s: f64| m + s * standard_normal(rng);
    OculomotorParams {
        pursuit_gain: deviate(mean.pursuit_gain, sd.pursuit_gain),
        phase_lag_s: deviate(mean.phase_lag_s, sd.phase_lag_s),
        radial_noise_sd_deg: deviate(mean.radial_noise_sd_deg, sd.radial_noise_sd_deg),
        radial_noise_corr_time_s: deviate(mean.radial_noise_corr_time_s, sd.radial_noise_corr_time_s),
        jitter_sd_deg: deviate(mean.jitter_sd_deg, sd.jitter_sd_deg),
        blink_rate_hz: deviate(mean.blink_rate_hz, sd.blink_rate_hz),
        blink_duration_mean_s: deviate(mean.blink_duration_mean_s, sd.blink_duration_mean_s),
        blink_duration_sd_s: deviate(mean.blink_duration_sd_s, sd.blink_duration_sd_s),
        slip_rate_hz: deviate(mean.slip_rate_hz, sd.slip_rate_hz),
        slip_duration_mean_s: deviate(mean.slip_duration_mean_s, sd.slip_duration_mean_s),
        slip_gain_drop: deviate(mean.slip_gain_drop, sd.slip_gain_drop),
        radial_slip_coupling: deviate(mean.radial_slip_coupling, sd.radial_slip_coupling),
    }
}

/// Writes a cohort as the canonical trace directory tree plus manifest.
pub fn write_cohort(
    root: &Path,
    data: &CohortData,
    cohort: &CohortSpec,
    spec: &StimulusSpec,
) -> Result<(), SynthError> {
    for run in &data.runs {
        write_run(root, run)?;
    }
    let manifest = CohortManifest {
        subjects: data.subjects.clone(),
        seed: cohort.seed,
        generator_params: serde_json::json!({
            "cohort": cohort,
            "stimulus": spec,
        }),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&root.join("manifest.json"), json.as_bytes())?;
    Ok(())
}
