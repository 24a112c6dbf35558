//! Paired-statistics machinery: dependent t-test with exact p-values,
//! Cohen's D (paired and pooled), and required observations at 80% power.
//!
//! Difference convention throughout: diff = impaired - baseline. Every
//! reported sign depends on it.

pub mod power;
pub mod special;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::features::FeatureRow;
use crate::trace::Session;
use special::inc_beta;

pub use power::{mc_power, noncentral_t_cdf, paired_power, required_n};

/// Sidedness of a test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sided {
    One,
    Two,
}

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("baseline and impaired lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("zero variance of differences")]
    ZeroVariance,
    #[error("need at least 2 subjects, have {0}")]
    TooFewSubjects(usize),
    #[error("df must be >= 1")]
    InvalidDf,
    #[error("effect size must be nonzero")]
    ZeroEffect,
    #[error("target power not attainable (power <= alpha)")]
    Unattainable,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("subject {subject} has no {session} runs")]
    MissingSession { subject: String, session: Session },
}

/// Student t CDF for real df via the regularized incomplete beta.
pub(crate) fn student_t_cdf_real(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 0.5;
    }
    let x = df / (df + t * t);
    let half_tail = 0.5 * inc_beta(df / 2.0, 0.5, x);
    if t > 0.0 {
        1.0 - half_tail
    } else {
        half_tail
    }
}

/// Student t quantile for real df (bisection on the CDF).
pub(crate) fn student_t_quantile(p: f64, df: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let mut lo = -1.0;
    let mut hi = 1.0;
    while student_t_cdf_real(lo, df) > p {
        lo *= 2.0;
    }
    while student_t_cdf_real(hi, df) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf_real(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * (1.0 + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Student t CDF; absolute error below 1e-10 for df <= 1000, |t| <= 50.
pub fn t_cdf(t: f64, df: u32) -> Result<f64, StatsError> {
    if df < 1 {
        return Err(StatsError::InvalidDf);
    }
    Ok(student_t_cdf_real(t, f64::from(df)))
}

/// Result of a paired two-tailed t-test.
#[derive(Debug, Clone, Copy)]
pub struct PairedT {
    pub t: f64,
    pub df: usize,
    pub p_two_tailed: f64,
}

/// Two-tailed dependent t-test on per-subject means,
/// diff = impaired - baseline.
pub fn paired_t(baseline: &[f64], impaired: &[f64]) -> Result<PairedT, StatsError> {
    let (mean, sd, n) = diff_stats(baseline, impaired)?;
    let t = mean / (sd / (n as f64).sqrt());
    let df = n - 1;
    let p = 2.0 * (1.0 - student_t_cdf_real(t.abs(), df as f64));
    Ok(PairedT { t, df, p_two_tailed: p })
}

fn diff_stats(baseline: &[f64], impaired: &[f64]) -> Result<(f64, f64, usize), StatsError> {
    if baseline.len() != impaired.len() {
        return Err(StatsError::LengthMismatch(baseline.len(), impaired.len()));
    }
    let n = baseline.len();
    if n < 2 {
        return Err(StatsError::TooFewSubjects(n));
    }
    let diffs: Vec<f64> = impaired.iter().zip(baseline).map(|(i, b)| i - b).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((mean, var.sqrt(), n))
}

/// Paired effect size dz = mean(diff)/sd(diff) and the pooled-SD variant
/// over the two per-subject-mean samples (equal-n pooling).
pub fn cohens_d(baseline: &[f64], impaired: &[f64]) -> Result<(f64, f64), StatsError> {
    let (mean_diff, sd_diff, _n) = diff_stats(baseline, impaired)?;
    let dz = mean_diff / sd_diff;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64], m: f64| {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
    };
    let (mb, mi) = (mean(baseline), mean(impaired));
    let pooled = ((var(baseline, mb) + var(impaired, mi)) / 2.0).sqrt();
    if pooled <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((dz, (mi - mb) / pooled))
}

/// One computed row of the paired-statistics table.
#[derive(Debug, Clone, Serialize)]
pub struct StatsRow {
    pub metric: String,
    pub n_subjects: usize,
    pub t_stat: f64,
    pub df: usize,
    pub p_value: f64,
    pub cohen_dz: f64,
    pub cohen_d_pooled: f64,
    pub n_req_one_sided: f64,
    pub n_req_two_sided: f64,
}

/// A table row: computed, or a captured per-metric failure.
#[derive(Debug, Clone)]
pub enum TableRow {
    Row(StatsRow),
    Failed { metric: String, message: String },
}

/// Metric names in table order.
pub const METRIC_NAMES: [&str; 6] = [
    "mean_radius_deg",
    "v_gain",
    "skew_radial",
    "skew_phase",
    "kurt_phase",
    "blink_loss_pct",
];

/// Builds the six-metric paired table from per-run features: per-subject
/// session means, then t-test, effect sizes, and required n per metric.
pub fn stats_table(rows: &[FeatureRow]) -> Result<Vec<TableRow>, StatsError> {
    let per_subject = per_subject_session_means(rows)?;
    let n_subjects = per_subject.len();
    let mut out = Vec::with_capacity(METRIC_NAMES.len());
    for (m_idx, metric) in METRIC_NAMES.iter().enumerate() {
        let baseline: Vec<f64> = per_subject.values().map(|(b, _)| b[m_idx]).collect();
        let impaired: Vec<f64> = per_subject.values().map(|(_, i)| i[m_idx]).collect();
        out.push(match build_row(metric, n_subjects, &baseline, &impaired) {
            Ok(row) => TableRow::Row(row),
            Err(e) => TableRow::Failed { metric: metric.to_string(), message: e.to_string() },
        });
    }
    Ok(out)
}

fn build_row(
    metric: &str,
    n_subjects: usize,
    baseline: &[f64],
    impaired: &[f64],
) -> Result<StatsRow, StatsError> {
    let test = paired_t(baseline, impaired)?;
    let (dz, d_pooled) = cohens_d(baseline, impaired)?;
    let req = |sided| required_n(dz, 0.05, 0.8, sided).unwrap_or(f64::NAN);
    Ok(StatsRow {
        metric: metric.to_string(),
        n_subjects,
        t_stat: test.t,
        df: test.df,
        p_value: test.p_two_tailed,
        cohen_dz: dz,
        cohen_d_pooled: d_pooled,
        n_req_one_sided: req(Sided::One),
        n_req_two_sided: req(Sided::Two),
    })
}

type SessionMeans = BTreeMap<String, ([f64; 6], [f64; 6])>;

/// Averages each metric per subject per session; errors if a subject lacks
/// a session.
pub fn per_subject_session_means(rows: &[FeatureRow]) -> Result<SessionMeans, StatsError> {
    let mut acc: BTreeMap<String, ([f64; 6], usize, [f64; 6], usize)> = BTreeMap::new();
    for row in rows {
        let entry = acc
            .entry(row.subject_id.clone())
            .or_insert(([0.0; 6], 0, [0.0; 6], 0));
        let values = row.metric_values();
        match row.session {
            Session::Baseline => {
                for (a, v) in entry.0.iter_mut().zip(values) {
                    *a += v;
                }
                entry.1 += 1;
            }
            Session::Impaired => {
                for (a, v) in entry.2.iter_mut().zip(values) {
                    *a += v;
                }
                entry.3 += 1;
            }
        }
    }
    let mut out = SessionMeans::new();
    for (subject, (bsum, bn, isum, inn)) in acc {
        if bn == 0 {
            return Err(StatsError::MissingSession { subject, session: Session::Baseline });
        }
        if inn == 0 {
            return Err(StatsError::MissingSession { subject, session: Session::Impaired });
        }
        let mut b = [0.0; 6];
        let mut i = [0.0; 6];
        for k in 0..6 {
            b[k] = bsum[k] / bn as f64;
            i[k] = isum[k] / inn as f64;
        }
        out.insert(subject, (b, i));
    }
    if out.len() < 2 {
        return Err(StatsError::TooFewSubjects(out.len()));
    }
    Ok(out)
}

/// TSV rendering of the table (machine form).
pub fn table_tsv(rows: &[TableRow]) -> String {
    let mut out = String::from(
        "metric\tn\tt_stat\tdf\tp_value\tcohen_dz\tcohen_d_pooled\tn_req_one_sided\tn_req_two_sided\n",
    );
    for row in rows {
        match row {
            TableRow::Row(r) => out.push_str(&format!(
                "{}\t{}\t{:.4}\t{}\t{:.6}\t{:.4}\t{:.4}\t{:.3}\t{:.3}\n",
                r.metric,
                r.n_subjects,
                r.t_stat,
                r.df,
                r.p_value,
                r.cohen_dz,
                r.cohen_d_pooled,
                r.n_req_one_sided,
                r.n_req_two_sided
            )),
            TableRow::Failed { metric, message } => {
                out.push_str(&format!("{metric}\terror: {message}\n"))
            }
        }
    }
    out
}

/// Markdown rendering of the table (human form).
pub fn table_markdown(rows: &[TableRow]) -> String {
    let mut out = String::from(
        "| Metric | n | t | df | p (two-tailed) | Cohen's dz | Cohen's d (pooled) | n req (1-sided) | n req (2-sided) |\n\
         |---|---|---|---|---|---|---|---|---|\n",
    );
    for row in rows {
        match row {
            TableRow::Row(r) => out.push_str(&format!(
                "| {} | {} | {:.3} | {} | {:.6} | {:.3} | {:.3} | {:.2} | {:.2} |\n",
                r.metric,
                r.n_subjects,
                r.t_stat,
                r.df,
                r.p_value,
                r.cohen_dz,
                r.cohen_d_pooled,
                r.n_req_one_sided,
                r.n_req_two_sided
            )),
            TableRow::Failed { metric, message } => {
                out.push_str(&format!("| {metric} | error: {message} | | | | | | | |\n"))
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::MetricVector;
    use proptest::prelude::*;

    #[test]
    fn t_cdf_known_values() {
        assert_eq!(t_cdf(0.0, 7).unwrap(), 0.5);
        // df = 1 is Cauchy: F(1) = 1/2 + atan(1)/pi = 3/4
        assert!((t_cdf(1.0, 1).unwrap() - 0.75).abs() < 1e-10);
        // normal limit
        assert!((t_cdf(1.96, 1_000_000).unwrap() - 0.9750).abs() < 1e-4);
        assert!(t_cdf(1.0, 0).is_err());
    }

    #[test]
    fn paired_t_hand_example() {
        let r = paired_t(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r.t - 3.4641016).abs() < 1e-6);
        assert_eq!(r.df, 2);
        assert!((r.p_two_tailed - 0.0742).abs() < 1e-3);
    }

    #[test]
    fn paired_t_errors() {
        assert!(matches!(paired_t(&[1.0], &[2.0]), Err(StatsError::TooFewSubjects(1))));
        assert!(matches!(paired_t(&[1.0, 2.0], &[1.0]), Err(StatsError::LengthMismatch(2, 1))));
        assert!(matches!(
            paired_t(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]),
            Err(StatsError::ZeroVariance)
        ));
    }

    #[test]
    fn cohens_d_antisymmetry_and_zero_variance() {
        let b = [1.0, 2.0, 4.0, 3.0];
        let i = [2.0, 2.5, 6.0, 3.5];
        let (dz, dp) = cohens_d(&b, &i).unwrap();
        let (dz2, dp2) = cohens_d(&i, &b).unwrap();
        assert!((dz + dz2).abs() < 1e-12 && (dp + dp2).abs() < 1e-12);
        assert!(matches!(
            cohens_d(&[1.0, 2.0, 3.0], &[3.0, 4.0, 5.0]),
            Err(StatsError::ZeroVariance)
        ));
    }

    fn feature_row(subject: &str, session: Session, run: u8, shift: f64) -> FeatureRow {
        FeatureRow {
            subject_id: subject.to_string(),
            session,
            run_index: run,
            metrics: MetricVector {
                mean_radius_deg: 10.0 + shift,
                v_gain: 0.95 + shift * 0.01,
                skew_radial: -0.1 + shift * 0.1,
                skew_phase: 0.2 + shift * 0.1,
                kurt_phase: 0.1 + shift * 0.1,
                blink_loss_pct: 5.0 + shift,
            },
        }
    }

    #[test]
    fn stats_table_boundary_two_subjects() {
        let mut rows = Vec::new();
        for (k, s) in ["s01", "s02"].iter().enumerate() {
            rows.push(feature_row(s, Session::Baseline, 0, k as f64 * 0.3));
            rows.push(feature_row(s, Session::Impaired, 0, 1.0 + k as f64 * 0.1));
        }
        let table = stats_table(&rows).unwrap();
        assert_eq!(table.len(), 6);
        for row in table {
            match row {
                TableRow::Row(r) => assert_eq!(r.df, 1),
                TableRow::Failed { .. } => panic!("unexpected failure"),
            }
        }
    }

    #[test]
    fn stats_table_identical_sessions_report_zero_variance() {
        let mut rows = Vec::new();
        for (k, s) in ["s01", "s02", "s03"].iter().enumerate() {
            rows.push(feature_row(s, Session::Baseline, 0, k as f64));
            rows.push(feature_row(s, Session::Impaired, 0, k as f64));
        }
        let table = stats_table(&rows).unwrap();
        for row in table {
            assert!(matches!(row, TableRow::Failed { .. }));
        }
    }

    #[test]
    fn stats_table_missing_session_names_subject() {
        let rows = vec![
            feature_row("s01", Session::Baseline, 0, 0.0),
            feature_row("s01", Session::Impaired, 0, 1.0),
            feature_row("s02", Session::Baseline, 0, 0.0),
        ];
        match stats_table(&rows) {
            Err(StatsError::MissingSession { subject, session }) => {
                assert_eq!(subject, "s02");
                assert_eq!(session, Session::Impaired);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn dz_equals_t_over_sqrt_n(pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..30)) {
            let b: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let i: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            if let (Ok(t), Ok((dz, _))) = (paired_t(&b, &i), cohens_d(&b, &i)) {
                let n = b.len() as f64;
                prop_assert!((dz - t.t / n.sqrt()).abs() < 1e-12);
            }
        }

        #[test]
        fn t_cdf_symmetry(t in -50.0f64..50.0, df in 1u32..1000) {
            let a = t_cdf(t, df).unwrap();
            let b = t_cdf(-t, df).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }

        #[test]
        fn common_shift_leaves_test_unchanged(
            pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..20),
            c in -100.0f64..100.0,
        ) {
            let b: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let i: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let bs: Vec<f64> = b.iter().map(|x| x + c).collect();
            let is: Vec<f64> = i.iter().map(|x| x + c).collect();
            if let (Ok(r1), Ok(r2)) = (paired_t(&b, &i), paired_t(&bs, &is)) {
                prop_assert!((r1.t - r2.t).abs() < 1e-9);
                prop_assert!((r1.p_two_tailed - r2.p_two_tailed).abs() < 1e-9);
            }
        }
    }
}
