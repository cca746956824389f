//! Command-line front end: `stage`, `summarize`, `correlate`, `evaluate`,
//! `compare` and `synth`.
//!
//! Every command validates its arguments and inputs before writing anything,
//! writes only under `--out`, and records its resolved configuration in the
//! reports it produces.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::cohort::{
    merge_cohort, parse_assessment_csv, parse_biomarker_csv, undersample, LabeledDataset, PatientRecord, RowIssue,
    Scheme, Task,
};
use crate::eval::{default_roc_class, derive_seed, evaluate, kfold, ClassMetrics, Evaluation, FoldPlan};
use crate::learners::{ModelKind, ModelSpec, Overrides};
use crate::stats::{group_summary, mmse_correlations, stage_anova, SIGNIFICANCE_LEVEL};
use crate::synth::{generate_cohort_scaled, read_specs, table1, write_assessment_csv, write_biomarker_csv};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable supplying the default `--out` directory.
pub const OUT_ENV: &str = "CSFSTAGE_OUT";

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const GENERAL: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const UNKNOWN_MODEL: i32 = 3;
    pub const INVALID_COMBINATION: i32 = 4;
    pub const MISSING_FILE: i32 = 5;
    pub const DATA: i32 = 6;
}

/// `println!` that ignores a closed stdout (e.g. output piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(io::stdout(), $($arg)*);
    }};
}

const BALANCE_STREAM: u64 = 1 << 32;
const MODEL_STREAM: u64 = 1 << 33;

#[derive(Debug, Parser)]
#[command(name = "csfstage", version, about = "Alzheimer's staging from CSF biomarkers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Merge and stage the cohort; write staged.csv and class counts.
    Stage(StageArgs),
    /// Per-stage mean/SEM of every variable and one-way ANOVA across stages.
    Summarize(SummarizeArgs),
    /// Pearson correlation of each biomarker with MMSE, overall and per stage.
    Correlate(CorrelateArgs),
    /// Cross-validate one model: metrics.json, confusion.csv, ROC curves.
    Evaluate(EvaluateArgs),
    /// Cross-validate the model set for the task and tabulate the results.
    Compare(CompareArgs),
    /// Write a synthetic cohort in the two input formats.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Biomarker table: id,age,csf_abeta42,csf_ttau,csf_ptau.
    #[arg(long)]
    pub biomarkers: PathBuf,
    /// Assessment table: id,mmse,cdr_global.
    #[arg(long)]
    pub assessments: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = OUT_ENV, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TaskArgs {
    #[arg(long, default_value = "mmse")]
    pub scheme: Scheme,
    #[arg(long, default_value = "binary")]
    pub task: Task,
    /// Undersample every class to the smallest class count.
    #[arg(long)]
    pub balance: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct StageArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub task: TaskArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SummarizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "mmse")]
    pub scheme: Scheme,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OverrideArgs {
    /// Neighbour count (KNN).
    #[arg(long)]
    pub k: Option<usize>,
    /// Box constraint (SVM).
    #[arg(long)]
    pub c: Option<f64>,
    /// L2 penalty (logistic regression).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Ensemble size (tree ensembles).
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Maximum tree depth (tree ensembles).
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Minimum rows per leaf (tree ensembles).
    #[arg(long)]
    pub min_leaf: Option<usize>,
}

impl OverrideArgs {
    fn to_overrides(&self) -> Overrides {
        Overrides {
            k: self.k,
            c: self.c,
            lambda: self.lambda,
            rounds: self.rounds,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub task: TaskArgs,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    pub folds: u64,
    /// Plain rather than class-stratified folds.
    #[arg(long)]
    pub unstratified: bool,
    /// Run folds (and models, for compare) on the rayon thread pool.
    #[arg(long)]
    pub parallel: bool,
    #[command(flatten)]
    pub overrides: OverrideArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// One of: logistic, nb-gauss, nb-kernel, svm-linear, svm-quadratic,
    /// knn-coarse, knn-cosine, boosted, bagged, rusboost.
    #[arg(long)]
    pub model: String,
    /// Class whose one-vs-rest AUC is reported (default AD for binary, NC for multi).
    #[arg(long)]
    pub roc_class: Option<String>,
    #[command(flatten)]
    pub cv: CvArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub cv: CvArgs,
}

#[derive(Debug, Clone, Args)]
#[group(id = "source", required = true, multiple = false, args = ["preset", "spec"])]
pub struct SynthArgs {
    #[arg(long, value_parser = ["table1"])]
    pub preset: Option<String>,
    /// JSON array of group moment specifications.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Multiplies every group size.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Fully resolved configuration, embedded in every report. The output
/// directory and the parallelism flag are left out so that reports do not
/// depend on where or how a run was executed.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub biomarkers: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assessments: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stratified: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balance: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overrides: Option<Overrides>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roc_class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub parallel: bool,
}

/// A failed command: exit code plus a one-line diagnostic.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = exit_code(&e);
        CliError::new(code, e.to_string())
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => exit::MISSING_FILE,
        Error::Fold { source, .. } => exit_code(source),
        Error::Hyperparameter(_) => exit::INVALID_COMBINATION,
        Error::Csv(_)
        | Error::Json(_)
        | Error::Header { .. }
        | Error::DuplicateId { .. }
        | Error::InvalidInput(_)
        | Error::MmseOutOfRange(_)
        | Error::InvalidCdr(_)
        | Error::TooFewClasses { .. }
        | Error::ClassTooSmallForFolds { .. }
        | Error::ZeroVariance(_)
        | Error::ZeroNorm
        | Error::SingleClassLabels
        | Error::EmptyConfusion => exit::DATA,
        _ => exit::GENERAL,
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match run(&cli.command) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn run(command: &Command) -> CliResult<()> {
    match command {
        Command::Stage(a) => run_stage(a),
        Command::Summarize(a) => run_summarize(a),
        Command::Correlate(a) => run_correlate(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Compare(a) => run_compare(a),
        Command::Synth(a) => run_synth(a),
    }
}

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::new(
            exit::MISSING_FILE,
            format!("input file not found: {}", path.display()),
        ))
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn report_issues(source: &str, skipped: &[RowIssue], rejected: &[RowIssue]) {
    if !skipped.is_empty() {
        eprintln!(
            "{source}: skipped {} row(s) with missing or nonpositive values",
            skipped.len()
        );
    }
    for r in rejected {
        eprintln!("{source}: rejected line {}: {}", r.line, r.reason);
    }
}

/// Reads, validates and inner-joins the two input tables.
pub fn load_records(input: &InputArgs) -> Result<Vec<PatientRecord>> {
    let bio = parse_biomarker_csv(open(&input.biomarkers)?)?;
    let asm = parse_assessment_csv(open(&input.assessments)?)?;
    report_issues("biomarkers", &bio.skipped, &bio.rejected);
    report_issues("assessments", &asm.skipped, &asm.rejected);
    merge_cohort(&bio.rows, &asm.rows)
}

fn build_dataset(records: &[PatientRecord], t: &TaskArgs) -> Result<(LabeledDataset, usize)> {
    let (data, dropped) = crate::cohort::make_task(records, t.scheme, t.task)?;
    if t.balance {
        Ok((undersample(&data, derive_seed(t.seed, BALANCE_STREAM))?, dropped))
    } else {
        Ok((data, dropped))
    }
}

fn fold_plan(data: &LabeledDataset, folds: usize, seed: u64, stratified: bool) -> Result<FoldPlan> {
    kfold(&data.labels, folds, seed, stratified).map_err(|e| match e {
        Error::ClassTooSmallForFolds { class, count, folds } => Error::ClassTooSmallForFolds {
            class: class
                .parse::<usize>()
                .ok()
                .and_then(|i| data.class_names.get(i).cloned())
                .unwrap_or(class),
            count,
            folds,
        },
        other => other,
    })
}

/// Seed of model `kind` under the run seed; shared by `evaluate` and `compare`.
pub fn model_seed(seed: u64, kind: ModelKind) -> u64 {
    let index = ModelKind::ALL.iter().position(|&k| k == kind).unwrap_or(0) as u64;
    derive_seed(seed, MODEL_STREAM + index)
}

fn write_out(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let path = dir.join(name);
    let io_err = |source| Error::Io {
        path: path.clone(),
        source,
    };
    let file = File::create(&path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(io_err)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    write_out(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n").map_err(|source| Error::Io {
            path: dir.join(name),
            source,
        })
    })
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt_num)
}

fn fmt_num(v: f64) -> String {
    crate::fmt_f64(v)
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{:.1}%", 100.0 * x))
}

#[derive(Serialize)]
struct RunReport<'a, T: Serialize> {
    schema_version: u32,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn report<'a, T: Serialize>(config: &'a RunConfig, body: T) -> RunReport<'a, T> {
    RunReport {
        schema_version: SCHEMA_VERSION,
        config,
        body,
    }
}

fn input_config(command: &str, input: &InputArgs, out: &OutArgs) -> RunConfig {
    RunConfig {
        command: command.to_string(),
        biomarkers: Some(input.biomarkers.clone()),
        assessments: Some(input.assessments.clone()),
        out: out.out.clone(),
        ..RunConfig::default()
    }
}

fn run_stage(a: &StageArgs) -> CliResult<()> {
    require_file(&a.input.biomarkers)?;
    require_file(&a.input.assessments)?;
    let config = RunConfig {
        scheme: Some(a.task.scheme),
        task: Some(a.task.task),
        seed: Some(a.task.seed),
        balance: Some(a.task.balance),
        ..input_config("stage", &a.input, &a.out)
    };
    let records = load_records(&a.input)?;
    let (data, dropped) = build_dataset(&records, &a.task)?;
    let counts = data.class_counts();

    #[derive(Serialize)]
    struct Body<'a> {
        merged: usize,
        dropped: usize,
        n: usize,
        class_names: &'a [String],
        class_counts: &'a [usize],
    }
    create_out(&config.out)?;
    write_out(&config.out, "staged.csv", |w| data.write_staged_csv(w))?;
    write_out(&config.out, "class_counts.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["class", "count"])?;
        for (name, n) in data.class_names.iter().zip(&counts) {
            c.write_record([name.clone(), n.to_string()])?;
        }
        c.flush().map_err(csv::Error::from)?;
        Ok(())
    })?;
    let body = Body {
        merged: records.len(),
        dropped,
        n: data.len(),
        class_names: &data.class_names,
        class_counts: &counts,
    };
    write_json(&config.out, "run.json", &report(&config, body))?;
    for (name, n) in data.class_names.iter().zip(&counts) {
        say!("{name}\t{n}");
    }
    say!("total\t{}", data.len());
    Ok(())
}

fn run_summarize(a: &SummarizeArgs) -> CliResult<()> {
    require_file(&a.input.biomarkers)?;
    require_file(&a.input.assessments)?;
    let config = RunConfig {
        scheme: Some(a.scheme),
        ..input_config("summarize", &a.input, &a.out)
    };
    let records = load_records(&a.input)?;
    let summary = group_summary(&records, a.scheme);
    let anova = stage_anova(&records, a.scheme);

    create_out(&config.out)?;
    write_out(&config.out, "summary.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["group", "n", "variable", "n_values", "mean", "sem"])?;
        for g in &summary {
            for v in &g.variables {
                c.write_record([
                    g.group.to_string(),
                    g.n.to_string(),
                    v.variable.to_string(),
                    v.stats.n.to_string(),
                    opt(v.stats.mean),
                    opt(v.stats.sem),
                ])?;
            }
        }
        c.flush().map_err(csv::Error::from)?;
        Ok(())
    })?;
    write_out(&config.out, "anova.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["variable", "f_stat", "df_between", "df_within", "p", "significant"])?;
        for row in &anova {
            let rec = match &row.result {
                Some(r) => [
                    row.variable.to_string(),
                    fmt_num(r.f_stat),
                    r.df_between.to_string(),
                    r.df_within.to_string(),
                    fmt_num(r.p),
                    r.significant().to_string(),
                ],
                None => [
                    row.variable.to_string(),
                    "NA".into(),
                    "NA".into(),
                    "NA".into(),
                    "NA".into(),
                    "NA".into(),
                ],
            };
            c.write_record(rec)?;
        }
        c.flush().map_err(csv::Error::from)?;
        Ok(())
    })?;
    write_json(&config.out, "run.json", &report(&config, serde_json::json!({})))?;

    for g in &summary {
        let cells: Vec<String> = g
            .variables
            .iter()
            .map(|v| match (v.stats.mean, v.stats.sem) {
                (Some(m), Some(s)) => format!("{}={m:.2} ({s:.2})", v.variable),
                (Some(m), None) => format!("{}={m:.2}", v.variable),
                _ => format!("{}=NA", v.variable),
            })
            .collect();
        say!("{} (n={}): {}", g.group, g.n, cells.join(", "));
    }
    Ok(())
}

fn run_correlate(a: &CorrelateArgs) -> CliResult<()> {
    require_file(&a.input.biomarkers)?;
    require_file(&a.input.assessments)?;
    let config = input_config("correlate", &a.input, &a.out);
    let records = load_records(&a.input)?;
    let rows = mmse_correlations(&records);

    create_out(&config.out)?;
    write_out(&config.out, "correlations.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["variable", "group", "n", "r", "p", "significant"])?;
        for row in &rows {
            c.write_record([
                row.variable.to_string(),
                row.group.clone(),
                row.n.to_string(),
                opt(row.result.map(|r| r.r)),
                opt(row.result.map(|r| r.p)),
                row.result.map_or("NA".into(), |r| r.significant().to_string()),
            ])?;
        }
        c.flush().map_err(csv::Error::from)?;
        Ok(())
    })?;
    write_json(
        &config.out,
        "run.json",
        &report(&config, serde_json::json!({ "significance_level": SIGNIFICANCE_LEVEL })),
    )?;
    for row in &rows {
        match row.result {
            Some(r) => say!("{}\t{}\tr={:.3}\tp={:.4}", row.variable, row.group, r.r, r.p),
            None => say!("{}\t{}\tNA", row.variable, row.group),
        }
    }
    Ok(())
}

fn cv_config(command: &str, cv: &CvArgs) -> RunConfig {
    RunConfig {
        scheme: Some(cv.task.scheme),
        task: Some(cv.task.task),
        folds: Some(cv.folds as usize),
        stratified: Some(!cv.unstratified),
        seed: Some(cv.task.seed),
        balance: Some(cv.task.balance),
        overrides: Some(cv.overrides.to_overrides()),
        parallel: cv.parallel,
        ..input_config(command, &cv.input, &cv.out)
    }
}

/// Overrides that do not apply to `kind` are a usage error for `evaluate`.
fn check_override_fit(kind: ModelKind, o: &Overrides) -> CliResult<()> {
    let mut given = Vec::new();
    let applies = |flag: &str| match flag {
        "k" => matches!(kind, ModelKind::KnnCoarse | ModelKind::KnnCosine),
        "c" => matches!(kind, ModelKind::SvmLinear | ModelKind::SvmQuadratic),
        "lambda" => kind == ModelKind::LogisticRegression,
        _ => kind.is_tree_ensemble(),
    };
    for (flag, set) in [
        ("k", o.k.is_some()),
        ("c", o.c.is_some()),
        ("lambda", o.lambda.is_some()),
        ("rounds", o.rounds.is_some()),
        ("max-depth", o.max_depth.is_some()),
        ("min-leaf", o.min_leaf.is_some()),
    ] {
        if set && !applies(flag) {
            given.push(format!("--{flag}"));
        }
    }
    if given.is_empty() {
        Ok(())
    } else {
        Err(CliError::new(
            exit::INVALID_COMBINATION,
            format!("{} does not apply to model {}", given.join(", "), kind.token()),
        ))
    }
}

fn resolve_roc_class(task: Task, name: Option<&str>) -> CliResult<usize> {
    let names = task.class_names();
    match name {
        None => Ok(default_roc_class(names.len())),
        Some(n) => names.iter().position(|c| c.eq_ignore_ascii_case(n)).ok_or_else(|| {
            CliError::new(
                exit::INVALID_COMBINATION,
                format!("class `{n}` is not part of the {task} task ({})", names.join(", ")),
            )
        }),
    }
}

#[derive(Serialize)]
struct MetricsBody<'a> {
    task: Task,
    scheme: Scheme,
    model: &'a str,
    folds: usize,
    seed: u64,
    n: usize,
    class_counts: Vec<usize>,
    accuracy: f64,
    balanced_accuracy: Option<f64>,
    per_class: &'a [ClassMetrics],
    auc: Option<f64>,
    auc_class: &'a str,
    macro_auc: f64,
    confusion: &'a [Vec<u64>],
}

fn metrics_body<'a>(config: &RunConfig, kind: ModelKind, data: &LabeledDataset, ev: &'a Evaluation) -> MetricsBody<'a> {
    MetricsBody {
        task: data.task,
        scheme: data.scheme,
        model: kind.token(),
        folds: config.folds.unwrap_or_default(),
        seed: config.seed.unwrap_or_default(),
        n: data.len(),
        class_counts: data.class_counts(),
        accuracy: ev.report.accuracy,
        balanced_accuracy: ev.report.balanced_accuracy(),
        per_class: &ev.report.per_class,
        auc: ev.report.auc,
        auc_class: &ev.outcome.confusion.class_names[ev.roc_class],
        macro_auc: ev.macro_auc,
        confusion: &ev.outcome.confusion.counts,
    }
}

fn run_evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let kind: ModelKind = a
        .model
        .parse()
        .map_err(|_| CliError::new(exit::UNKNOWN_MODEL, format!("unknown model `{}`", a.model)))?;
    let overrides = a.cv.overrides.to_overrides();
    check_override_fit(kind, &overrides)?;
    let roc_class = resolve_roc_class(a.cv.task.task, a.roc_class.as_deref())?;
    let spec = ModelSpec::with_overrides(kind, model_seed(a.cv.task.seed, kind), &overrides)?;
    require_file(&a.cv.input.biomarkers)?;
    require_file(&a.cv.input.assessments)?;
    let config = RunConfig {
        model: Some(kind.token().to_string()),
        roc_class: Some(a.cv.task.task.class_names()[roc_class].clone()),
        ..cv_config("evaluate", &a.cv)
    };

    let records = load_records(&a.cv.input)?;
    let (data, _) = build_dataset(&records, &a.cv.task)?;
    let plan = fold_plan(&data, a.cv.folds as usize, a.cv.task.seed, !a.cv.unstratified)?;
    let ev = evaluate(&spec, &data, &plan, config.parallel, roc_class)?;

    create_out(&config.out)?;
    write_json(
        &config.out,
        "metrics.json",
        &report(&config, metrics_body(&config, kind, &data, &ev)),
    )?;
    write_out(&config.out, "confusion.csv", |w| ev.outcome.confusion.write_csv(w))?;
    if data.n_classes() == 2 {
        write_out(&config.out, "roc.csv", |w| ev.curves[roc_class].write_csv(w))?;
    } else {
        for (name, curve) in data.class_names.iter().zip(&ev.curves) {
            write_out(&config.out, &format!("roc_{name}.csv"), |w| curve.write_csv(w))?;
        }
    }
    write_out(&config.out, "predictions.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string(), "fold".into(), "label".into(), "predicted".into()];
        header.extend(data.class_names.iter().map(|n| format!("score_{n}")));
        c.write_record(&header)?;
        for i in 0..data.len() {
            let mut rec = vec![
                data.ids[i].clone(),
                plan.assignments[i].to_string(),
                data.class_names[data.labels[i]].clone(),
                data.class_names[ev.outcome.predictions[i]].clone(),
            ];
            rec.extend(ev.outcome.scores[i].iter().map(|s| fmt_num(*s)));
            c.write_record(&rec)?;
        }
        c.flush().map_err(csv::Error::from)?;
        Ok(())
    })?;

    say!(
        "{} ({} {}, {} rows, {}-fold)",
        kind.display_name(),
        data.scheme,
        data.task,
        data.len(),
        plan.k
    );
    say!("accuracy\t{}", pct(Some(ev.report.accuracy)));
    for c in &ev.report.per_class {
        say!(
            "{}\tTPR {}\tFNR {}\tPPV {}\tFDR {}",
            c.name,
            pct(c.tpr),
            pct(c.fnr),
            pct(c.ppv),
            pct(c.fdr)
        );
    }
    say!(
        "AUC ({})\t{:.3}",
        data.class_names[roc_class],
        ev.report.auc.unwrap_or(f64::NAN)
    );
    Ok(())
}

/// Models tabulated by `compare`: the nine binary classifiers, or the
/// multiclass ensembles (RUSBoost on imbalanced data, AdaBoost on balanced).
pub fn compare_models(task: Task, balance: bool) -> Vec<ModelKind> {
    match (task, balance) {
        (Task::Binary, _) => ModelKind::ALL
            .into_iter()
            .filter(|&k| k != ModelKind::RusBoostedTree)
            .collect(),
        (Task::Multi, false) => vec![ModelKind::RusBoostedTree, ModelKind::BaggedTree],
        (Task::Multi, true) => vec![ModelKind::BoostedTree, ModelKind::BaggedTree],
    }
}

fn run_compare(a: &CompareArgs) -> CliResult<()> {
    let cv = &a.cv;
    let overrides = cv.overrides.to_overrides();
    let models = compare_models(cv.task.task, cv.task.balance);
    let specs: Vec<ModelSpec> = models
        .iter()
        .map(|&k| ModelSpec::with_overrides(k, model_seed(cv.task.seed, k), &overrides))
        .collect::<Result<_>>()?;
    require_file(&cv.input.biomarkers)?;
    require_file(&cv.input.assessments)?;
    let config = RunConfig {
        model: Some(models.iter().map(|k| k.token()).collect::<Vec<_>>().join(",")),
        ..cv_config("compare", cv)
    };

    let records = load_records(&cv.input)?;
    let (data, _) = build_dataset(&records, &cv.task)?;
    let plan = fold_plan(&data, cv.folds as usize, cv.task.seed, !cv.unstratified)?;
    let roc_class = default_roc_class(data.n_classes());
    let run_one = |spec: &ModelSpec| {
        evaluate(spec, &data, &plan, config.parallel, roc_class)
            .map_err(|e| CliError::from(e).prefixed(spec.kind.token()))
    };
    let results: Vec<Evaluation> = if config.parallel {
        specs.par_iter().map(run_one).collect::<CliResult<_>>()?
    } else {
        specs.iter().map(run_one).collect::<CliResult<_>>()?
    };

    create_out(&config.out)?;
    let lower: Vec<String> = data.class_names.iter().map(|n| n.to_ascii_lowercase()).collect();
    write_out(&config.out, "compare.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        let mut header = vec!["model".to_string(), "accuracy".into()];
        header.extend(lower.iter().map(|n| format!("tpr_{n}")));
        c.write_record(&header)?;
        for (kind, ev) in models.iter().zip(&results) {
            let mut rec = vec![kind.token().to_string(), fmt_num(ev.report.accuracy)];
            rec.extend(ev.report.per_class.iter().map(|m| opt(m.tpr)));
            c.write_record(&rec)?;
        }
        c.flush().map_err(csv::Error::from)?;
        Ok(())
    })?;
    write_out(&config.out, "compare_detail.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["model", "class", "tpr", "fnr", "ppv", "fdr"])?;
        for (kind, ev) in models.iter().zip(&results) {
            for m in &ev.report.per_class {
                c.write_record([
                    kind.token().to_string(),
                    m.name.clone(),
                    opt(m.tpr),
                    opt(m.fnr),
                    opt(m.ppv),
                    opt(m.fdr),
                ])?;
            }
        }
        c.flush().map_err(csv::Error::from)?;
        Ok(())
    })?;
    let bodies: Vec<MetricsBody> = models
        .iter()
        .zip(&results)
        .map(|(&k, ev)| metrics_body(&config, k, &data, ev))
        .collect();
    write_json(
        &config.out,
        "compare.json",
        &report(&config, serde_json::json!({ "models": bodies })),
    )?;

    let width = models.iter().map(|k| k.display_name().len()).max().unwrap_or(0);
    let mut header = format!("{:width$}  Accuracy", "Model");
    for n in &data.class_names {
        header.push_str(&format!("  TPR {n:<4}"));
    }
    say!("{header}");
    for (kind, ev) in models.iter().zip(&results) {
        let mut line = format!("{:width$}  {:>8}", kind.display_name(), pct(Some(ev.report.accuracy)));
        for m in &ev.report.per_class {
            line.push_str(&format!("  {:>8}", pct(m.tpr)));
        }
        say!("{line}");
    }
    Ok(())
}

impl CliError {
    fn prefixed(self, context: &str) -> Self {
        CliError::new(self.code, format!("{context}: {}", self.message))
    }
}

fn run_synth(a: &SynthArgs) -> CliResult<()> {
    if !(a.scale > 0.0 && a.scale.is_finite()) {
        return Err(CliError::new(
            exit::USAGE,
            format!("--scale must be positive, got {}", a.scale),
        ));
    }
    let specs = match (&a.preset, &a.spec) {
        (Some(_), _) => table1(),
        (None, Some(path)) => {
            require_file(path)?;
            read_specs(open(path)?)?
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let config = RunConfig {
        command: "synth".into(),
        preset: a.preset.clone(),
        spec: a.spec.clone(),
        scale: Some(a.scale),
        seed: Some(a.seed),
        out: a.out.out.clone(),
        ..RunConfig::default()
    };
    let records = generate_cohort_scaled(&specs, a.seed, a.scale)?;

    create_out(&config.out)?;
    write_out(&config.out, "biomarkers.csv", |w| write_biomarker_csv(&records, w))?;
    write_out(&config.out, "assessments.csv", |w| write_assessment_csv(&records, w))?;
    write_json(
        &config.out,
        "run.json",
        &report(&config, serde_json::json!({ "records": records.len(), "specs": specs })),
    )?;
    say!("wrote {} records to {}", records.len(), config.out.display());
    Ok(())
}
