//! Black-box tests of the `pursuit` binary: command composition, exit
//! codes, and byte-level reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn pursuit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pursuit"))
        .args(args)
        .env_remove("PURSUIT_SEED")
        .output()
        .expect("binary runs")
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                files.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

/// simulate -> features -> stats -> train-eval -> report, all on each
/// other's outputs, with a small cohort.
#[test]
fn pipeline_composes_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces");
    let features = dir.path().join("features.csv");

    let out = pursuit(&[
        "simulate",
        "--out",
        traces.to_str().unwrap(),
        "--subjects",
        "4",
        "--runs",
        "2",
        "--seed",
        "5",
        "--duration-s",
        "10",
    ]);
    assert_code(&out, 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("16 runs"));
    assert!(traces.join("manifest.json").exists());

    let out = pursuit(&["features", "--input", traces.to_str().unwrap(), "--out", features.to_str().unwrap()]);
    assert_code(&out, 0);
    let text = std::fs::read_to_string(&features).unwrap();
    assert_eq!(text.lines().count(), 17); // header + 16 rows

    let stats_dir = dir.path().join("stats");
    let out = pursuit(&["stats", "--features", features.to_str().unwrap(), "--out", stats_dir.to_str().unwrap()]);
    assert_code(&out, 0);
    let tsv = std::fs::read_to_string(stats_dir.join("stats.tsv")).unwrap();
    assert!(tsv.starts_with(
        "metric\tn\tt_stat\tdf\tp_value\tcohen_dz\tcohen_d_pooled\tn_req_one_sided\tn_req_two_sided"
    ));
    assert_eq!(tsv.lines().count(), 7);
    assert!(stats_dir.join("stats.md").exists());

    let eval_dir = dir.path().join("eval");
    let out = pursuit(&[
        "train-eval",
        "--features",
        features.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
        "--splits",
        "1",
        "--seed",
        "3",
    ]);
    assert_code(&out, 0);
    for mode in ["raw", "normalized"] {
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(eval_dir.join(format!("{mode}.json"))).unwrap())
                .unwrap();
        assert_eq!(report["mode"], mode);
        assert_eq!(report["n_splits"], 1);
        assert_eq!(report["per_split"].as_array().unwrap().len(), 1);
        assert_eq!(report["median_auc"], report["best_auc"]);
        assert!(report["median_accuracy"].is_number());
    }

    let report_dir = dir.path().join("report");
    let out = pursuit(&[
        "report",
        "--traces",
        traces.to_str().unwrap(),
        "--features",
        features.to_str().unwrap(),
        "--out",
        report_dir.to_str().unwrap(),
        "--subject",
        "s02",
    ]);
    assert_code(&out, 0);
    assert!(report_dir.join("index.md").exists());
    assert!(report_dir.join("s02_baseline_trace.svg").exists());
    assert!(report_dir.join("cohort_blink_loss.svg").exists());
}

#[test]
fn single_subject_single_run_writes_two_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("t");
    let out = pursuit(&[
        "simulate",
        "--out",
        traces.to_str().unwrap(),
        "--subjects",
        "2",
        "--runs",
        "1",
        "--duration-s",
        "5",
    ]);
    assert_code(&out, 0);
    let csvs = tree_bytes(&traces)
        .into_iter()
        .filter(|(name, _)| name.ends_with(".csv"))
        .count();
    assert_eq!(csvs, 4); // 2 subjects x 2 sessions x 1 run
}

#[test]
fn identical_flags_give_byte_identical_outputs() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        let traces = d.path().join("traces");
        assert_code(
            &pursuit(&[
                "simulate",
                "--out",
                traces.to_str().unwrap(),
                "--subjects",
                "3",
                "--runs",
                "2",
                "--seed",
                "11",
                "--duration-s",
                "8",
            ]),
            0,
        );
        let features = d.path().join("f.csv");
        assert_code(
            &pursuit(&["features", "--input", traces.to_str().unwrap(), "--out", features.to_str().unwrap()]),
            0,
        );
        assert_code(
            &pursuit(&[
                "train-eval",
                "--features",
                features.to_str().unwrap(),
                "--out",
                d.path().join("eval").to_str().unwrap(),
                "--splits",
                "5",
                "--seed",
                "2",
            ]),
            0,
        );
    }
    let t1 = tree_bytes(d1.path());
    let t2 = tree_bytes(d2.path());
    assert_eq!(t1.len(), t2.len());
    for ((n1, b1), (n2, b2)) in t1.iter().zip(&t2) {
        assert_eq!(n1, n2);
        assert_eq!(b1, b2, "{n1} differs between reruns");
    }
}

#[test]
fn usage_errors_exit_1() {
    assert_code(&pursuit(&["no-such-command"]), 1);
    assert_code(&pursuit(&["simulate"]), 1); // missing --out
    assert_code(&pursuit(&["power", "--d", "0"]), 1);
    assert_code(&pursuit(&["power", "--d", "0.5", "--sided", "three"]), 1);
    let help = pursuit(&["--help"]);
    assert_code(&help, 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("simulate"));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = pursuit(&["features", "--input", empty.to_str().unwrap(), "--out", dir.path().join("f.csv").to_str().unwrap()]);
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no runs"));

    // corrupt one trace file; the error must cite it
    let traces = dir.path().join("traces");
    assert_code(
        &pursuit(&[
            "simulate",
            "--out",
            traces.to_str().unwrap(),
            "--subjects",
            "2",
            "--runs",
            "1",
            "--duration-s",
            "5",
        ]),
        0,
    );
    let victim = traces.join("s01/baseline/run0.csv");
    std::fs::write(&victim, "t_s,gaze_x_deg,gaze_y_deg,valid\n0.0,not_a_number,0.0,1\n").unwrap();
    let out = pursuit(&["features", "--input", traces.to_str().unwrap(), "--out", dir.path().join("g.csv").to_str().unwrap()]);
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("run0.csv"));

    // features file whose subjects all lack the impaired session
    let lopsided = dir.path().join("lopsided.csv");
    std::fs::write(
        &lopsided,
        "subject_id,session,run_index,mean_radius_deg,v_gain,skew_radial,skew_phase,kurt_phase,blink_loss_pct\n\
         s01,baseline,0,10.0,1.0,0.1,0.1,0.1,5.0\n\
         s02,baseline,0,9.0,0.9,0.2,0.2,0.2,6.0\n",
    )
    .unwrap();
    let out = pursuit(&["stats", "--features", lopsided.to_str().unwrap(), "--out", dir.path().join("s").to_str().unwrap()]);
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("impaired"));

    // report for an absent subject
    let out = pursuit(&[
        "report",
        "--traces",
        traces.to_str().unwrap(),
        "--features",
        lopsided.to_str().unwrap(),
        "--out",
        dir.path().join("r").to_str().unwrap(),
        "--subject",
        "zz",
    ]);
    assert_code(&out, 2);
}

#[test]
fn power_command_reports_required_n() {
    let out = pursuit(&["power", "--d", "1.568", "--alpha", "0.05", "--power", "0.8", "--sided", "one"]);
    assert_code(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("4.2"), "{text}");

    let out = pursuit(&["power", "--d", "0.5", "--sided", "two", "--verify"]);
    assert_code(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("required n = 33"), "{text}");
    assert!(text.contains("monte carlo check"), "{text}");
}

#[test]
fn env_seed_is_flag_default_only() {
    let dir = tempfile::tempdir().unwrap();
    let with_env = dir.path().join("env");
    let with_flag = dir.path().join("flag");
    let out = Command::new(env!("CARGO_BIN_EXE_pursuit"))
        .args(["simulate", "--out", with_env.to_str().unwrap(), "--subjects", "2", "--runs", "1", "--duration-s", "5"])
        .env("PURSUIT_SEED", "123")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    // explicit flag wins over the environment
    let out = Command::new(env!("CARGO_BIN_EXE_pursuit"))
        .args(["simulate", "--out", with_flag.to_str().unwrap(), "--subjects", "2", "--runs", "1", "--duration-s", "5", "--seed", "123"])
        .env("PURSUIT_SEED", "999")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(tree_bytes(&with_env), tree_bytes(&with_flag));
}
