//! Command-line pipeline: simulate a cohort, extract per-run metrics, and
//! produce the statistics table, classifier evaluation, and SVG report.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pursuit::classify::{evaluate_modes, EvalReport};
use pursuit::features::{features_csv_string, metric_vector, parse_features_csv, FeatureRow};
use pursuit::report::write_report;
use pursuit::stats::{
    mc_power, required_n, stats_table, table_markdown, table_tsv, Sided, StatsError, TableRow,
};
use pursuit::synth::{simulate_cohort, write_cohort, CohortSpec};
use pursuit::trace::{read_runs, write_atomic, StimulusSpec};

#[derive(Parser)]
#[command(
    name = "pursuit",
    version,
    about = "Circular smooth-pursuit gaze analytics: synthesis, metrics, statistics, classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic gaze cohort as a trace directory
    Simulate(SimulateArgs),
    /// Extract per-run oculomotor metrics from a trace directory
    Features(FeaturesArgs),
    /// Paired baseline-vs-impaired statistics table from a features CSV
    Stats(StatsArgs),
    /// Required sample size for a paired t-test at 80% power
    Power(PowerArgs),
    /// Train and evaluate the linear SVM protocols (raw and normalized)
    TrainEval(TrainEvalArgs),
    /// Render SVG figures and an index for one subject plus cohort plots
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Output trace directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 19)]
    subjects: usize,
    /// Runs per session per subject
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long, default_value_t = 42, env = "PURSUIT_SEED")]
    seed: u64,
    /// Stimulus rotation frequency in Hz
    #[arg(long, default_value_t = 0.4)]
    freq_hz: f64,
    /// Stimulus circle radius in visual degrees
    #[arg(long, default_value_t = 10.0)]
    radius_deg: f64,
    /// Run duration in seconds
    #[arg(long, default_value_t = 30.0)]
    duration_s: f64,
    /// Sampling rate in Hz
    #[arg(long, default_value_t = 60.0)]
    sample_rate_hz: f64,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Input trace directory (as written by `simulate`)
    #[arg(long)]
    input: PathBuf,
    /// Output features CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Input features CSV
    #[arg(long)]
    features: PathBuf,
    /// Output directory for stats.tsv and stats.md
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PowerArgs {
    /// Standardized paired effect size (Cohen's dz)
    #[arg(long)]
    d: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.8)]
    power: f64,
    /// one or two
    #[arg(long, default_value = "one")]
    sided: String,
    /// Cross-check the solution with a Monte Carlo power estimate
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 42, env = "PURSUIT_SEED")]
    seed: u64,
}

#[derive(Args)]
struct TrainEvalArgs {
    /// Input features CSV
    #[arg(long)]
    features: PathBuf,
    /// Output directory for raw.json and normalized.json
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    splits: usize,
    /// SVM regularization strength
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 42, env = "PURSUIT_SEED")]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    /// Input trace directory
    #[arg(long)]
    traces: PathBuf,
    /// Input features CSV
    #[arg(long)]
    features: PathBuf,
    /// Output report directory
    #[arg(long)]
    out: PathBuf,
    /// Subject to plot individually
    #[arg(long, default_value = "s01")]
    subject: String,
}

/// Usage errors exit 1, data errors exit 2.
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Data(_) => ExitCode::from(2),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // keep clap's rendered help/usage text but normalize the exit code
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Features(args) => cmd_features(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Power(args) => cmd_power(args),
        Command::TrainEval(args) => cmd_train_eval(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let spec = StimulusSpec {
        frequency_hz: args.freq_hz,
        radius_deg: args.radius_deg,
        duration_s: args.duration_s,
        sample_rate_hz: args.sample_rate_hz,
        ..StimulusSpec::default()
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let cohort = CohortSpec {
        n_subjects: args.subjects,
        runs_per_session: args.runs,
        seed: args.seed,
        ..CohortSpec::default()
    };
    cohort.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let data = simulate_cohort(&cohort, &spec).map_err(data_err)?;
    write_cohort(&args.out, &data, &cohort, &spec).map_err(data_err)?;
    for note in &data.clamp_log {
        eprintln!("note: clamped {note}");
    }
    println!(
        "wrote {} runs for {} subjects under {}",
        data.runs.len(),
        cohort.n_subjects,
        args.out.display()
    );
    Ok(())
}

fn cmd_features(args: FeaturesArgs) -> Result<(), CliError> {
    let runs = read_runs(&args.input).map_err(data_err)?;
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for run in &runs {
        match metric_vector(run) {
            Ok(metrics) => rows.push(FeatureRow {
                subject_id: run.subject_id.clone(),
                session: run.session,
                run_index: run.run_index,
                metrics,
            }),
            Err(e) => errors.push((
                run.subject_id.clone(),
                run.session,
                run.run_index,
                e.to_string(),
            )),
        }
    }
    let csv = features_csv_string(&rows, &errors);
    write_atomic(&args.out, csv.as_bytes()).map_err(data_err)?;
    println!(
        "wrote {} feature rows ({} degenerate) to {}",
        rows.len(),
        errors.len(),
        args.out.display()
    );
    Ok(())
}

fn load_features(path: &Path) -> Result<Vec<FeatureRow>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_features_csv(&text, &path.display().to_string()).map_err(data_err)
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let rows = load_features(&args.features)?;
    let table = stats_table(&rows).map_err(data_err)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    let md = table_markdown(&table);
    write_atomic(&args.out.join("stats.tsv"), table_tsv(&table).as_bytes()).map_err(data_err)?;
    write_atomic(&args.out.join("stats.md"), md.as_bytes()).map_err(data_err)?;
    print!("{md}");
    let failures: Vec<&TableRow> = table
        .iter()
        .filter(|r| matches!(r, TableRow::Failed { .. }))
        .collect();
    if !failures.is_empty() {
        eprintln!("note: {} metric(s) could not be computed", failures.len());
    }
    Ok(())
}

fn cmd_power(args: PowerArgs) -> Result<(), CliError> {
    let sided = match args.sided.as_str() {
        "one" => Sided::One,
        "two" => Sided::Two,
        other => return Err(CliError::Usage(format!("--sided must be one or two, got {other}"))),
    };
    let n = required_n(args.d, args.alpha, args.power, sided).map_err(|e| match e {
        StatsError::ZeroEffect | StatsError::InvalidParams(_) | StatsError::Unattainable => {
            CliError::Usage(e.to_string())
        }
        other => data_err(other),
    })?;
    println!(
        "required n = {n:.4} (d = {}, alpha = {}, power = {}, {}-sided)",
        args.d,
        args.alpha,
        args.power,
        args.sided
    );
    if args.verify {
        let n_int = n.ceil() as usize;
        let p = mc_power(args.d, n_int, args.alpha, sided, 100_000, args.seed)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        println!(
            "monte carlo check: power at n = {n_int} is {p:.4} (target {})",
            args.power
        );
    }
    Ok(())
}

fn cmd_train_eval(args: TrainEvalArgs) -> Result<(), CliError> {
    if args.splits == 0 {
        return Err(CliError::Usage("--splits must be >= 1".into()));
    }
    let rows = load_features(&args.features)?;
    let reports: Vec<EvalReport> =
        evaluate_modes(&rows, args.splits, args.c, args.seed).map_err(data_err)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    for report in &reports {
        let json = serde_json::to_string_pretty(report).expect("report serializes");
        let path = args.out.join(format!("{}.json", report.mode.as_str()));
        write_atomic(&path, json.as_bytes()).map_err(data_err)?;
        println!(
            "{}: median AUC {:.3}, best AUC {:.3}, median accuracy {:.3} over {} splits",
            report.mode.as_str(),
            report.median_auc,
            report.best_auc,
            report.median_accuracy,
            report.n_splits
        );
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let runs = read_runs(&args.traces).map_err(data_err)?;
    let rows = load_features(&args.features)?;
    let files = write_report(&args.out, &runs, &rows, &args.subject).map_err(data_err)?;
    println!("wrote {} report files under {}", files.len(), args.out.display());
    Ok(())
}
