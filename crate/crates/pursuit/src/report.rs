//! Hand-written SVG figures: per-subject eye traces and error histograms,
//! plus cohort-level paired before/after point plots, tied together by an
//! index markdown file.
//!
//! Pre-impairment strokes are blue, post-impairment strokes are green.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::features::{decompose_errors, ErrorSeries, FeatureRow};
use crate::preprocess::{mask_blinks, DEFAULT_BLINK_PAD};
use crate::trace::{target_position, write_atomic, GazeRun, Session, TraceError};

const PRE_COLOR: &str = "#1f6fd0";
const POST_COLOR: &str = "#2ca05a";
const AXIS_COLOR: &str = "#444444";
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const HIST_BINS: usize = 40;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("subject {0} not present in the trace directory")]
    SubjectNotFound(String),
    #[error(transparent)]
    Io(#[from] TraceError),
}

/// Minimal SVG document builder (polyline / rect / text only).
struct Svg {
    body: String,
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.2}")
}

impl Svg {
    fn new(title: &str) -> Svg {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        let _ = writeln!(
            body,
            "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>"
        );
        let mut svg = Svg { body };
        svg.text(WIDTH / 2.0, 24.0, title, "middle", 16);
        svg
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64) {
        if points.len() < 2 {
            return;
        }
        let pts: Vec<String> = points
            .iter()
            .map(|(x, y)| format!("{},{}", fmt_coord(*x), fmt_coord(*y)))
            .collect();
        let _ = writeln!(
            self.body,
            "  <polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\" points=\"{}\"/>",
            pts.join(" ")
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"/>",
            fmt_coord(x),
            fmt_coord(y),
            fmt_coord(w.max(0.0)),
            fmt_coord(h.max(0.0))
        );
    }

    fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str, size: u32) {
        let escaped = s
            .replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"{size}\" text-anchor=\"{anchor}\" fill=\"#111111\">{escaped}</text>",
            fmt_coord(x),
            fmt_coord(y)
        );
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        self.polyline(
            &[
                (MARGIN, MARGIN),
                (MARGIN, HEIGHT - MARGIN),
                (WIDTH - MARGIN, HEIGHT - MARGIN),
            ],
            AXIS_COLOR,
            1.0,
        );
        self.text(WIDTH / 2.0, HEIGHT - 14.0, x_label, "middle", 12);
        self.text(16.0, HEIGHT / 2.0, y_label, "middle", 12);
    }

    fn legend(&mut self) {
        self.rect(WIDTH - 180.0, 40.0, 14.0, 14.0, PRE_COLOR);
        self.text(WIDTH - 160.0, 52.0, "pre (baseline)", "start", 12);
        self.rect(WIDTH - 180.0, 60.0, 14.0, 14.0, POST_COLOR);
        self.text(WIDTH - 160.0, 72.0, "post (impaired)", "start", 12);
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

/// Affine map from data range to pixel range.
fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi <= lo {
        return (a + b) / 2.0;
    }
    a + (v - lo) / (hi - lo) * (b - a)
}

fn session_color(session: Session) -> &'static str {
    match session {
        Session::Baseline => PRE_COLOR,
        Session::Impaired => POST_COLOR,
    }
}

/// Gaze path over the target circle for one run.
fn trace_svg(run: &GazeRun) -> String {
    let spec = &run.stimulus;
    let half = spec.radius_deg * 1.8;
    let (cx, cy) = (spec.center_deg[0], spec.center_deg[1]);
    let to_px = |x: f64, y: f64| {
        (
            scale(x, cx - half, cx + half, MARGIN, WIDTH - MARGIN),
            // screen y grows downward
            scale(y, cy - half, cy + half, HEIGHT - MARGIN, MARGIN),
        )
    };
    let title = format!(
        "{} {} run {} eye trace",
        run.subject_id,
        run.session,
        run.run_index
    );
    let mut svg = Svg::new(&title);
    svg.axes("x (deg)", "y (deg)");

    let target: Vec<(f64, f64)> = (0..=360)
        .map(|i| {
            let t = i as f64 / 360.0 * spec.duration_s;
            let p = target_position(spec, t);
            to_px(p[0], p[1])
        })
        .collect();
    svg.polyline(&target, AXIS_COLOR, 1.0);

    // break the gaze polyline at blinks so dropouts show as gaps
    let mut segment = Vec::new();
    for s in &run.samples {
        if s.valid {
            segment.push(to_px(s.x_deg, s.y_deg));
        } else if segment.len() > 1 {
            svg.polyline(&segment, session_color(run.session), 1.2);
            segment.clear();
        } else {
            segment.clear();
        }
    }
    svg.polyline(&segment, session_color(run.session), 1.2);
    svg.text(
        WIDTH - MARGIN,
        40.0,
        &format!("target path gray, gaze {}", match run.session {
            Session::Baseline => "blue",
            Session::Impaired => "green",
        }),
        "end",
        12,
    );
    svg.finish()
}

/// Step-outline histogram of pooled per-session error samples.
fn histogram_svg(
    title: &str,
    x_label: &str,
    pre: &[f64],
    post: &[f64],
) -> String {
    let mut svg = Svg::new(title);
    svg.axes(x_label, "count");
    svg.legend();
    let lo = pre
        .iter()
        .chain(post)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = pre
        .iter()
        .chain(post)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 0.5, lo + 0.5) };

    let mut max_count = 0u64;
    let mut series = Vec::new();
    for (values, color) in [(pre, PRE_COLOR), (post, POST_COLOR)] {
        if values.is_empty() {
            continue;
        }
        // histogram over the shared range so bins align between sessions
        let width = (hi - lo) / HIST_BINS as f64;
        let mut counts = vec![0u64; HIST_BINS];
        for &v in values {
            let idx = (((v - lo) / width) as usize).min(HIST_BINS - 1);
            counts[idx] += 1;
        }
        max_count = max_count.max(counts.iter().cloned().max().unwrap_or(0));
        series.push((counts, color));
    }
    for (counts, color) in &series {
        let mut points = Vec::new();
        let bin_w = (hi - lo) / HIST_BINS as f64;
        points.push((scale(lo, lo, hi, MARGIN, WIDTH - MARGIN), HEIGHT - MARGIN));
        for (i, &c) in counts.iter().enumerate() {
            let x0 = lo + i as f64 * bin_w;
            let x1 = x0 + bin_w;
            let y = scale(c as f64, 0.0, max_count as f64, HEIGHT - MARGIN, MARGIN);
            points.push((scale(x0, lo, hi, MARGIN, WIDTH - MARGIN), y));
            points.push((scale(x1, lo, hi, MARGIN, WIDTH - MARGIN), y));
        }
        points.push((scale(hi, lo, hi, MARGIN, WIDTH - MARGIN), HEIGHT - MARGIN));
        svg.polyline(&points, color, 1.5);
    }
    svg.text(MARGIN, 40.0, &format!("range [{lo:.3}, {hi:.3}]"), "start", 12);
    svg.finish()
}

/// Per-subject paired before/after plot for one metric.
fn paired_points_svg(title: &str, y_label: &str, pairs: &[(String, f64, f64)]) -> String {
    let mut svg = Svg::new(title);
    svg.axes("subject", y_label);
    svg.legend();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, a, b) in pairs {
        lo = lo.min(*a).min(*b);
        hi = hi.max(*a).max(*b);
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    } else if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = (hi - lo) * 0.08;
    let (lo, hi) = (lo - pad, hi + pad);
    let n = pairs.len().max(1);
    for (i, (subject, pre, post)) in pairs.iter().enumerate() {
        let x = scale(i as f64 + 0.5, 0.0, n as f64, MARGIN, WIDTH - MARGIN);
        let y_pre = scale(*pre, lo, hi, HEIGHT - MARGIN, MARGIN);
        let y_post = scale(*post, lo, hi, HEIGHT - MARGIN, MARGIN);
        svg.polyline(&[(x, y_pre), (x, y_post)], AXIS_COLOR, 0.8);
        svg.rect(x - 3.0, y_pre - 3.0, 6.0, 6.0, PRE_COLOR);
        svg.rect(x - 3.0, y_post - 3.0, 6.0, 6.0, POST_COLOR);
        if i % 2 == 0 {
            svg.text(x, HEIGHT - MARGIN + 16.0, subject, "middle", 9);
        }
    }
    svg.text(
        MARGIN,
        HEIGHT - MARGIN + 34.0,
        &format!("y range [{lo:.3}, {hi:.3}]"),
        "start",
        11,
    );
    svg.finish()
}

fn pooled_errors(runs: &[&GazeRun]) -> (Vec<f64>, Vec<f64>, Vec<String>) {
    let mut phase = Vec::new();
    let mut radial = Vec::new();
    let mut excluded = Vec::new();
    for run in runs {
        let series: Result<ErrorSeries, _> = mask_blinks(run, DEFAULT_BLINK_PAD)
            .map_err(Into::into)
            .and_then(|m| decompose_errors(run, &m));
        match series {
            Ok(s) => {
                for i in 0..s.usable.len() {
                    if s.usable[i] {
                        phase.push(s.phase_err_rad[i].to_degrees());
                        radial.push(s.radial_err_deg[i]);
                    }
                }
            }
            Err(e) => excluded.push(format!(
                "{} {} run {}: {e}",
                run.subject_id, run.session, run.run_index
            )),
        }
    }
    (phase, radial, excluded)
}

/// Session-mean metric pairs for the cohort plots; subjects missing either
/// session are skipped (they cannot form a pair).
fn session_mean_pairs(rows: &[FeatureRow], pick: fn(&FeatureRow) -> f64) -> Vec<(String, f64, f64)> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<&str, [(f64, usize); 2]> = BTreeMap::new();
    for r in rows {
        let slot = match r.session {
            Session::Baseline => 0,
            Session::Impaired => 1,
        };
        let e = &mut acc.entry(r.subject_id.as_str()).or_insert([(0.0, 0); 2])[slot];
        e.0 += pick(r);
        e.1 += 1;
    }
    acc.into_iter()
        .filter(|(_, s)| s[0].1 > 0 && s[1].1 > 0)
        .map(|(id, s)| {
            (
                id.to_string(),
                s[0].0 / s[0].1 as f64,
                s[1].0 / s[1].1 as f64,
            )
        })
        .collect()
}

/// Writes the full report directory and returns the emitted paths.
pub fn write_report(
    out_dir: &Path,
    runs: &[GazeRun],
    rows: &[FeatureRow],
    subject_id: &str,
) -> Result<Vec<PathBuf>, ReportError> {
    let subject_runs: Vec<&GazeRun> = runs.iter().filter(|r| r.subject_id == subject_id).collect();
    if subject_runs.is_empty() {
        return Err(ReportError::SubjectNotFound(subject_id.to_string()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| TraceError::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;

    let mut files = Vec::new();
    let mut index = String::from("# Pursuit report\n\n");
    let emit = |name: &str, content: &str, files: &mut Vec<PathBuf>| -> Result<(), ReportError> {
        let path = out_dir.join(name);
        write_atomic(&path, content.as_bytes())?;
        files.push(path);
        Ok(())
    };

    let pre_runs: Vec<&GazeRun> = subject_runs
        .iter()
        .copied()
        .filter(|r| r.session == Session::Baseline)
        .collect();
    let post_runs: Vec<&GazeRun> = subject_runs
        .iter()
        .copied()
        .filter(|r| r.session == Session::Impaired)
        .collect();
    let (pre_phase, pre_radial, mut excluded) = pooled_errors(&pre_runs);
    let (post_phase, post_radial, excluded_post) = pooled_errors(&post_runs);
    excluded.extend(excluded_post);

    let _ = writeln!(index, "## Subject {subject_id}\n");
    if pre_phase.is_empty() && post_phase.is_empty() {
        let _ = writeln!(
            index,
            "All runs for subject {subject_id} were degenerate; trace and histogram figures were skipped.\n"
        );
    } else {
        for (session, session_runs) in [(Session::Baseline, &pre_runs), (Session::Impaired, &post_runs)] {
            if let Some(run) = session_runs.first() {
                let name = format!("{subject_id}_{session}_trace.svg");
                emit(&name, &trace_svg(run), &mut files)?;
                let _ = writeln!(index, "- [{session} eye trace]({name})");
            }
        }
        let name = format!("{subject_id}_phase_error_hist.svg");
        emit(
            &name,
            &histogram_svg(
                &format!("{subject_id} phase error distribution"),
                "phase error (deg)",
                &pre_phase,
                &post_phase,
            ),
            &mut files,
        )?;
        let _ = writeln!(index, "- [phase error histogram]({name})");
        let name = format!("{subject_id}_radial_error_hist.svg");
        emit(
            &name,
            &histogram_svg(
                &format!("{subject_id} radial error distribution"),
                "radial error (deg)",
                &pre_radial,
                &post_radial,
            ),
            &mut files,
        )?;
        let _ = writeln!(index, "- [radial error histogram]({name})");
    }
    if !excluded.is_empty() {
        let _ = writeln!(index, "\nExcluded degenerate runs:\n");
        for e in &excluded {
            let _ = writeln!(index, "- {e}");
        }
    }

    let _ = writeln!(index, "\n## Cohort\n");
    type MetricPick = fn(&FeatureRow) -> f64;
    let cohort_plots: [(&str, &str, MetricPick); 3] = [
        ("cohort_blink_loss.svg", "blink loss (%)", |r| r.metrics.blink_loss_pct),
        ("cohort_kurtosis.svg", "phase kurtosis (excess)", |r| r.metrics.kurt_phase),
        ("cohort_skew.svg", "phase skew", |r| r.metrics.skew_phase),
    ];
    for (name, label, pick) in cohort_plots {
        let pairs = session_mean_pairs(rows, pick);
        let title = format!("per-subject before/after: {label}");
        emit(name, &paired_points_svg(&title, label, &pairs), &mut files)?;
        let _ = writeln!(index, "- [{label}]({name})");
    }

    let index_path = out_dir.join("index.md");
    write_atomic(&index_path, index.as_bytes())?;
    files.push(index_path);
    Ok(files)
}
