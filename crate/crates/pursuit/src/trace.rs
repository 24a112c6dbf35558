//! Gaze-trace data model: stimulus geometry, runs, validation, and the
//! canonical on-disk formats (trace CSV, sidecar JSON, cohort manifest).
//!
//! All positions are in visual degrees, y-up, origin at the display center.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact header of a canonical trace CSV file.
pub const TRACE_HEADER: &str = "t_s,gaze_x_deg,gaze_y_deg,valid";

/// Rotation sense of the pursuit target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Clockwise,
    Counterclockwise,
}

impl Direction {
    /// Sign of dtheta/dt: -1 for clockwise (y-up convention), +1 otherwise.
    pub fn angular_sign(self) -> f64 {
        match self {
            Direction::Clockwise => -1.0,
            Direction::Counterclockwise => 1.0,
        }
    }
}

/// Geometry and kinematics of the circular pursuit target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulusSpec {
    pub frequency_hz: f64,
    pub radius_deg: f64,
    pub center_deg: [f64; 2],
    pub direction: Direction,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
}

impl Default for StimulusSpec {
    fn default() -> Self {
        StimulusSpec {
            frequency_hz: 0.4,
            radius_deg: 10.0,
            center_deg: [0.0, 0.0],
            direction: Direction::Clockwise,
            duration_s: 30.0,
            sample_rate_hz: 60.0,
        }
    }
}

impl StimulusSpec {
    // negated comparisons so NaN fields fail validation too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), TraceError> {
        if !(self.frequency_hz > 0.0) {
            return Err(TraceError::InvalidStimulus("frequency_hz must be > 0".into()));
        }
        if !(self.radius_deg > 0.0) {
            return Err(TraceError::InvalidStimulus("radius_deg must be > 0".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(TraceError::InvalidStimulus("duration_s must be > 0".into()));
        }
        if !(self.sample_rate_hz >= 20.0 * self.frequency_hz) {
            return Err(TraceError::InvalidStimulus(
                "sample_rate_hz must be at least 20x frequency_hz".into(),
            ));
        }
        Ok(())
    }

    /// Number of samples in one run at the nominal rate.
    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    /// Signed target angular velocity in rad/s.
    pub fn angular_velocity(&self) -> f64 {
        self.direction.angular_sign() * std::f64::consts::TAU * self.frequency_hz
    }
}

/// Target angle at time `t`, radians; theta(0) = 0 (3 o'clock).
pub fn target_angle(spec: &StimulusSpec, t: f64) -> f64 {
    spec.angular_velocity() * t
}

/// Target position at time `t`, visual degrees.
pub fn target_position(spec: &StimulusSpec, t: f64) -> [f64; 2] {
    let theta = target_angle(spec, t);
    [
        spec.center_deg[0] + spec.radius_deg * theta.cos(),
        spec.center_deg[1] + spec.radius_deg * theta.sin(),
    ]
}

/// Session timepoint of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Session {
    Baseline,
    Impaired,
}

impl Session {
    pub fn as_str(self) -> &'static str {
        match self {
            Session::Baseline => "baseline",
            Session::Impaired => "impaired",
        }
    }

    pub fn parse(s: &str) -> Option<Session> {
        match s {
            "baseline" => Some(Session::Baseline),
            "impaired" => Some(Session::Impaired),
            _ => None,
        }
    }
}

impl fmt::Display for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One timestamped gaze sample. When `valid` is false the position carries
/// no meaning and must be ignored by all consumers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeSample {
    pub t_s: f64,
    pub x_deg: f64,
    pub y_deg: f64,
    pub valid: bool,
}

/// One gaze trace for one subject/session/iteration.
#[derive(Debug, Clone)]
pub struct GazeRun {
    pub subject_id: String,
    pub session: Session,
    pub run_index: u8,
    pub stimulus: StimulusSpec,
    pub samples: Vec<GazeSample>,
}

/// Per-subject metadata carried alongside a cohort.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sex: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vision_correction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adhd: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub use_cadence: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_use_days: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

/// Sidecar metadata stored next to each trace CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub subject_id: String,
    pub session: Session,
    pub run_index: u8,
    pub stimulus: StimulusSpec,
}

/// Cohort manifest written at the root of a trace directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortManifest {
    pub subjects: Vec<SubjectRecord>,
    pub seed: u64,
    pub generator_params: serde_json::Value,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("run has no samples")]
    EmptyRun,
    #[error("timestamps not strictly increasing at sample {0}")]
    NonMonotoneTime(usize),
    #[error("irregular sampling at sample {index}: dt = {observed_dt:.6} s")]
    IrregularSampling { index: usize, observed_dt: f64 },
    #[error("run_index {0} outside 0..=2")]
    BadRunIndex(u8),
    #[error("invalid stimulus: {0}")]
    InvalidStimulus(String),
    #[error("{path}: line {line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Meta { path: String, msg: String },
    #[error("no runs found under {0}")]
    NoRuns(String),
}

/// Every invariant violation found in a run.
#[derive(Debug)]
pub struct ValidationReport {
    pub violations: Vec<TraceError>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks all `GazeRun` invariants, collecting every violation.
pub fn validate_run(run: &GazeRun) -> Result<(), ValidationReport> {
    let mut violations = Vec::new();
    if let Err(e) = run.stimulus.validate() {
        violations.push(e);
    }
    if run.run_index > 2 {
        violations.push(TraceError::BadRunIndex(run.run_index));
    }
    if run.samples.is_empty() {
        violations.push(TraceError::EmptyRun);
    } else {
        let nominal_dt = 1.0 / run.stimulus.sample_rate_hz;
        for i in 1..run.samples.len() {
            let dt = run.samples[i].t_s - run.samples[i - 1].t_s;
            if dt <= 0.0 {
                violations.push(TraceError::NonMonotoneTime(i));
            } else if (dt - nominal_dt).abs() > 0.10 * nominal_dt {
                violations.push(TraceError::IrregularSampling {
                    index: i,
                    observed_dt: dt,
                });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ValidationReport { violations })
    }
}

/// Serializes samples to the canonical trace CSV.
pub fn trace_csv_string(samples: &[GazeSample]) -> String {
    let mut out = String::with_capacity(32 * samples.len() + TRACE_HEADER.len() + 1);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&format!(
            "{:.6},{:.6},{:.6},{}\n",
            s.t_s,
            s.x_deg,
            s.y_deg,
            u8::from(s.valid)
        ));
    }
    out
}

/// Parses a canonical trace CSV. Rejects non-finite numbers and malformed
/// rows; never panics on arbitrary input.
pub fn parse_trace_csv(text: &str, path: &str) -> Result<Vec<GazeSample>, TraceError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| TraceError::Parse {
        path: path.to_string(),
        line: 1,
        msg: "empty file".into(),
    })?;
    if header.trim_end() != TRACE_HEADER {
        return Err(TraceError::Parse {
            path: path.to_string(),
            line: 1,
            msg: format!("bad header, expected `{TRACE_HEADER}`"),
        });
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| {
            fields.next().ok_or_else(|| TraceError::Parse {
                path: path.to_string(),
                line: lineno,
                msg: format!("missing field {name}"),
            })
        };
        let t_s = parse_finite(next("t_s")?, "t_s", path, lineno)?;
        let x_deg = parse_finite(next("gaze_x_deg")?, "gaze_x_deg", path, lineno)?;
        let y_deg = parse_finite(next("gaze_y_deg")?, "gaze_y_deg", path, lineno)?;
        let valid = match next("valid")? {
            "0" => false,
            "1" => true,
            other => {
                return Err(TraceError::Parse {
                    path: path.to_string(),
                    line: lineno,
                    msg: format!("valid must be 0 or 1, got `{other}`"),
                })
            }
        };
        if fields.next().is_some() {
            return Err(TraceError::Parse {
                path: path.to_string(),
                line: lineno,
                msg: "too many fields".into(),
            });
        }
        samples.push(GazeSample { t_s, x_deg, y_deg, valid });
    }
    Ok(samples)
}

fn parse_finite(s: &str, name: &str, path: &str, line: usize) -> Result<f64, TraceError> {
    let v: f64 = s.parse().map_err(|_| TraceError::Parse {
        path: path.to_string(),
        line,
        msg: format!("{name}: not a number: `{s}`"),
    })?;
    if !v.is_finite() {
        return Err(TraceError::Parse {
            path: path.to_string(),
            line,
            msg: format!("{name}: non-finite value"),
        });
    }
    Ok(v)
}

/// Parses a sidecar metadata JSON object.
pub fn parse_run_meta(text: &str, path: &str) -> Result<RunMeta, TraceError> {
    serde_json::from_str(text).map_err(|e| TraceError::Meta {
        path: path.to_string(),
        msg: e.to_string(),
    })
}

/// Parses a cohort manifest JSON object.
pub fn parse_manifest(text: &str, path: &str) -> Result<CohortManifest, TraceError> {
    serde_json::from_str(text).map_err(|e| TraceError::Meta {
        path: path.to_string(),
        msg: e.to_string(),
    })
}

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), TraceError> {
    let tmp = path.with_extension("tmp~");
    let ctx = |e: std::io::Error| TraceError::Io {
        path: path.display().to_string(),
        source: e,
    };
    fs::write(&tmp, bytes).map_err(ctx)?;
    fs::rename(&tmp, path).map_err(ctx)?;
    Ok(())
}

/// Path of run `k` for a subject/session under a trace directory.
pub fn run_csv_path(root: &Path, subject_id: &str, session: Session, run_index: u8) -> PathBuf {
    root.join(subject_id)
        .join(session.as_str())
        .join(format!("run{run_index}.csv"))
}

/// Writes one run (CSV plus sidecar JSON) into the directory tree.
pub fn write_run(root: &Path, run: &GazeRun) -> Result<(), TraceError> {
    let csv_path = run_csv_path(root, &run.subject_id, run.session, run.run_index);
    let dir = csv_path.parent().expect("run path has parent");
    fs::create_dir_all(dir).map_err(|e| TraceError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    write_atomic(&csv_path, trace_csv_string(&run.samples).as_bytes())?;
    let meta = RunMeta {
        subject_id: run.subject_id.clone(),
        session: run.session,
        run_index: run.run_index,
        stimulus: run.stimulus,
    };
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    write_atomic(&csv_path.with_extension("json"), json.as_bytes())
}

/// Reads every run under a trace directory, sorted by (subject, session,
/// run_index) for deterministic downstream output.
pub fn read_runs(root: &Path) -> Result<Vec<GazeRun>, TraceError> {
    let mut runs = Vec::new();
    let subjects = sorted_dir_entries(root)?;
    for subj_dir in subjects.iter().filter(|p| p.is_dir()) {
        for sess_dir in sorted_dir_entries(subj_dir)?.iter().filter(|p| p.is_dir()) {
            let sess_name = file_name(sess_dir);
            let Some(session) = Session::parse(&sess_name) else {
                continue;
            };
            for csv in sorted_dir_entries(sess_dir)? {
                let name = file_name(&csv);
                if !(name.starts_with("run") && name.ends_with(".csv")) {
                    continue;
                }
                let meta_path = csv.with_extension("json");
                let meta_text = fs::read_to_string(&meta_path).map_err(|e| TraceError::Io {
                    path: meta_path.display().to_string(),
                    source: e,
                })?;
                let meta = parse_run_meta(&meta_text, &meta_path.display().to_string())?;
                let text = fs::read_to_string(&csv).map_err(|e| TraceError::Io {
                    path: csv.display().to_string(),
                    source: e,
                })?;
                let samples = parse_trace_csv(&text, &csv.display().to_string())?;
                runs.push(GazeRun {
                    subject_id: meta.subject_id,
                    session,
                    run_index: meta.run_index,
                    stimulus: meta.stimulus,
                    samples,
                });
            }
        }
    }
    if runs.is_empty() {
        return Err(TraceError::NoRuns(root.display().to_string()));
    }
    runs.sort_by(|a, b| {
        (&a.subject_id, a.session, a.run_index).cmp(&(&b.subject_id, b.session, b.run_index))
    });
    Ok(runs)
}

fn sorted_dir_entries(dir: &Path) -> Result<Vec<PathBuf>, TraceError> {
    let rd = fs::read_dir(dir).map_err(|e| TraceError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut entries: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    Ok(entries)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}
