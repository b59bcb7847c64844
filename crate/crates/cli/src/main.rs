//! `cfa`: combinatorial fusion runs from score CSV files.
//!
//! Exit codes: 0 success, 2 input-format error, 3 configuration error.

mod svg;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfa_core::diversity::{diversity_matrix, diversity_strength};
use cfa_core::evaluate::{compute_metrics, predictions_csv};
use cfa_core::fusion::{report_csv, sweep_context, FusionContext, FusionOptions, RcWeighting, SweepConfig};
use cfa_core::ingest::{min_max_apply, min_max_fit, parse_score_file, write_score_file};
use cfa_core::ranking::{rsc_csv, rsc_plot_data, rsc_profiles, TiePolicy};
use cfa_core::synth::{generate, SynthConfig};
use cfa_core::{select_systems, CfaError, FusionSpec, Method, ScoreTable, SplitTag};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cfa", version, about = "Combinatorial fusion analysis for classifier score files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cognitive-diversity matrix and diversity strengths
    Diversity(DiversityArgs),
    /// Fuse one subset with one method and classify the test split
    Fuse(FuseArgs),
    /// Every subset under every method variant, plus single-system rows
    Sweep(SweepArgs),
    /// Rank-score characteristic curves as CSV and optional SVG
    Rsc(RscArgs),
    /// Per-system metrics of a score file, or metrics of a predictions file
    Eval(EvalArgs),
    /// Generate seeded synthetic train/test score files
    Synth(SynthArgs),
}

#[derive(Args)]
struct Selection {
    /// Comma-separated system ids (default: all, in file order)
    #[arg(long, value_delimiter = ',')]
    systems: Option<Vec<String>>,
}

#[derive(Args)]
struct Tuning {
    /// Decision threshold for score combinations
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value = "reciprocal")]
    rc_weighting: String,
    #[arg(long, default_value = "ordinal")]
    tie_policy: String,
    /// Positive fraction for the rank top-k cut (default: from training labels)
    #[arg(long)]
    prior: Option<f64>,
    /// Pick the SC threshold that maximizes training accuracy
    #[arg(long)]
    optimize_threshold: bool,
}

impl Tuning {
    fn options(&self) -> Result<FusionOptions, CfaError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(CfaError::config(format!("threshold {} outside [0,1]", self.threshold)));
        }
        Ok(FusionOptions {
            rc_weighting: self.rc_weighting.parse::<RcWeighting>()?,
            tie_policy: self.tie_policy.parse::<TiePolicy>()?,
            optimize_threshold: self.optimize_threshold,
        })
    }
}

#[derive(Args)]
struct DiversityArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Which split's RSC profiles to compare
    #[arg(long, default_value = "train")]
    split: String,
    #[command(flatten)]
    selection: Selection,
    #[arg(long, default_value = "ordinal")]
    tie_policy: String,
    /// Matrix CSV path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Diversity-strength CSV path (default: stdout after the matrix)
    #[arg(long)]
    ds_out: Option<PathBuf>,
}

#[derive(Args)]
struct FuseArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[command(flatten)]
    selection: Selection,
    #[arg(long)]
    method: String,
    #[arg(long, default_value = "train")]
    weight_split: String,
    #[command(flatten)]
    tuning: Tuning,
    /// Predictions CSV path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metrics JSON path (default: stdout)
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Skip evaluation; the test file may be unlabeled
    #[arg(long)]
    no_eval: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[command(flatten)]
    selection: Selection,
    #[command(flatten)]
    tuning: Tuning,
    /// Leave out the single-system baseline rows
    #[arg(long)]
    no_singles: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RscArgs {
    /// File whose ranges normalize the plotted file
    #[arg(long)]
    train: Option<PathBuf>,
    /// File to plot (default: the training file)
    #[arg(long)]
    test: Option<PathBuf>,
    #[command(flatten)]
    selection: Selection,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    /// Score file whose systems are evaluated one by one
    #[arg(long)]
    test: Option<PathBuf>,
    /// Predictions CSV written by `fuse`
    #[arg(long, conflicts_with_all = ["train", "test"])]
    predictions: Option<PathBuf>,
    #[command(flatten)]
    selection: Selection,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Flat key-value (TOML) config; flags given alongside override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of systems
    #[arg(long)]
    systems: Option<usize>,
    /// Items per split
    #[arg(long)]
    items: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    accuracy: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sharpness: Option<Vec<f64>>,
    #[arg(long)]
    positive_fraction: Option<f64>,
    /// Directory receiving train.csv and test.csv
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Config(String),
}

impl From<CfaError> for CliError {
    fn from(e: CfaError) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_table(path: &Path, split: SplitTag) -> CliResult<ScoreTable> {
    let bytes = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_score_file(&bytes, split).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn restrict(table: ScoreTable, selection: &Selection) -> CliResult<ScoreTable> {
    match &selection.systems {
        Some(ids) => Ok(select_systems(&table, ids)?),
        None => Ok(table),
    }
}

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Config(format!("stdout: {e}"))),
    }
}

fn cmd_diversity(args: DiversityArgs) -> CliResult<()> {
    let split: SplitTag = args.split.parse()?;
    let train = args.train.as_deref().map(|p| read_table(p, SplitTag::Train)).transpose()?;
    let test = args.test.as_deref().map(|p| read_table(p, SplitTag::Test)).transpose()?;
    let target = match split {
        SplitTag::Train => train.clone().ok_or_else(|| CliError::Config("--split train needs --train".into()))?,
        SplitTag::Test => test.ok_or_else(|| CliError::Config("--split test needs --test".into()))?,
    };
    let target = restrict(target, &args.selection)?;
    let fit_on = match train {
        Some(t) => select_systems(&t, target.system_ids())?,
        None => target.clone(),
    };
    // tie policy does not change profiles; parsed only to reject bad values
    let _: TiePolicy = args.tie_policy.parse()?;
    let normalized = min_max_apply(&target, &min_max_fit(&fit_on))?;
    let matrix = diversity_matrix(&rsc_profiles(&normalized), split)?;
    let ds = diversity_strength(&matrix)?;
    if ds.fallback {
        eprintln!("warning: all systems have identical RSC profiles; using equal weights");
    }

    let mut ds_csv = String::from("system,diversity_strength\n");
    for (id, w) in ds.system_ids.iter().zip(&ds.weights) {
        let _ = writeln!(ds_csv, "{id},{w:.6}");
    }
    emit(args.out.as_deref(), &matrix.to_csv())?;
    match args.ds_out.as_deref() {
        Some(p) => emit(Some(p), &ds_csv),
        None if args.out.is_none() => emit(None, &format!("\n{ds_csv}")),
        None => emit(None, &ds_csv),
    }
}

/// Prior for the top-k cut: explicit flag, else training labels.
fn resolve_prior(tuning: &Tuning, ctx: &FusionContext, needs_prior: bool) -> CliResult<f64> {
    if let Some(p) = tuning.prior {
        if !(p > 0.0 && p < 1.0) {
            return Err(CliError::Config(format!("prior {p} outside (0,1)")));
        }
        return Ok(p);
    }
    match ctx.train_prior() {
        Ok(p) if p > 0.0 && p < 1.0 => Ok(p),
        Ok(p) if needs_prior => Err(CliError::Config(format!("training labels give prior {p}; pass --prior"))),
        Err(_) if needs_prior => Err(CliError::Config("training file is unlabeled; pass --prior".into())),
        // score combinations never read the prior
        _ => Ok(0.5),
    }
}

fn cmd_fuse(args: FuseArgs) -> CliResult<()> {
    let method: Method = args.method.parse()?;
    let weight_split: SplitTag = args.weight_split.parse()?;
    let options = args.tuning.options()?;
    let train = read_table(&args.train, SplitTag::Train)?;
    let test = read_table(&args.test, SplitTag::Test)?;
    let subset = match &args.selection.systems {
        Some(ids) => ids.clone(),
        None => train.system_ids().to_vec(),
    };
    if subset.len() < 2 {
        return Err(CliError::Config(format!("fusion needs at least 2 systems, got {}", subset.len())));
    }
    if !args.no_eval && !test.has_labels() {
        return Err(CliError::Config("test file is unlabeled; pass --no-eval".into()));
    }
    let train = select_systems(&train, &subset)?;
    let test = select_systems(&test, &subset)?;
    let ctx = FusionContext::new(&train, &test, options)?;
    let prior = resolve_prior(&args.tuning, &ctx, !method.is_score())?;
    let spec = FusionSpec::new(subset, method, weight_split, prior).with_threshold(args.tuning.threshold);
    let outcome = ctx.fuse(&spec)?;
    if outcome.weights.fallback {
        eprintln!("warning: identical RSC profiles; diversity weights fell back to equal weights");
    }

    let labels = test.labels();
    let csv = predictions_csv(test.item_ids(), labels.as_deref(), &outcome.fused.values, &outcome.predictions);
    emit(args.out.as_deref(), &csv)?;
    if args.no_eval {
        return Ok(());
    }
    let report = outcome.report.ok_or_else(|| CliError::Config("test file is unlabeled".into()))?;
    let mut json = serde_json::to_string_pretty(&report.flat()).map_err(|e| CliError::Config(e.to_string()))?;
    json.push('\n');
    emit(args.metrics.as_deref(), &json)
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let options = args.tuning.options()?;
    let train = restrict(read_table(&args.train, SplitTag::Train)?, &args.selection)?;
    let test = read_table(&args.test, SplitTag::Test)?;
    let test = select_systems(&test, train.system_ids())?;
    if !test.has_labels() {
        return Err(CliError::Config("sweep needs a labeled test file".into()));
    }
    let ctx = FusionContext::new(&train, &test, options)?;
    let prior = resolve_prior(&args.tuning, &ctx, true)?;
    let config = SweepConfig {
        threshold: args.tuning.threshold,
        options,
        positive_prior: Some(prior),
        include_singles: !args.no_singles,
        ..SweepConfig::default()
    };
    let rows = sweep_context(&ctx, &config)?;
    emit(args.out.as_deref(), &report_csv(&rows))
}

fn cmd_rsc(args: RscArgs) -> CliResult<()> {
    let train = args.train.as_deref().map(|p| read_table(p, SplitTag::Train)).transpose()?;
    let test = args.test.as_deref().map(|p| read_table(p, SplitTag::Test)).transpose()?;
    let target = match (&test, &train) {
        (Some(t), _) | (None, Some(t)) => t.clone(),
        (None, None) => return Err(CliError::Config("rsc needs --train or --test".into())),
    };
    let target = restrict(target, &args.selection)?;
    let fit_on = match &train {
        Some(t) => select_systems(t, target.system_ids())?,
        None => target.clone(),
    };
    let normalized = min_max_apply(&target, &min_max_fit(&fit_on))?;
    let series = rsc_plot_data(&normalized);
    emit(args.out.as_deref(), &rsc_csv(&series))?;
    if let Some(path) = args.svg.as_deref() {
        let title = format!("Rank-score curves ({} split)", target.split());
        emit(Some(path), &svg::rsc_chart(&series, &title))?;
    }
    Ok(())
}

fn read_predictions(path: &Path) -> CliResult<(Vec<u8>, Vec<u8>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let bad = |line: usize, msg: &str| CliError::Input(format!("{}: line {line}: {msg}", path.display()));
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some("item_id,label,fused_value,prediction") {
        return Err(bad(1, "expected header item_id,label,fused_value,prediction"));
    }
    let (mut preds, mut labels) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.trim_end().split(',').collect();
        if cells.len() != 4 {
            return Err(bad(k + 2, "expected 4 fields"));
        }
        let bit = |s: &str| match s {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            _ => Err(bad(k + 2, "expected 0 or 1")),
        };
        labels.push(bit(cells[1])?);
        preds.push(bit(cells[3])?);
    }
    Ok((preds, labels))
}

fn cmd_eval(args: EvalArgs) -> CliResult<()> {
    if let Some(path) = args.predictions.as_deref() {
        let (preds, labels) = read_predictions(path)?;
        let metrics = compute_metrics(&preds, &labels)?;
        let mut json = serde_json::to_string_pretty(&metrics).map_err(|e| CliError::Config(e.to_string()))?;
        json.push('\n');
        return emit(args.out.as_deref(), &json);
    }
    let test_path = args.test.as_deref().ok_or_else(|| CliError::Config("eval needs --test or --predictions".into()))?;
    let test = restrict(read_table(test_path, SplitTag::Test)?, &args.selection)?;
    let labels = test.require_labels()?;
    let fit_on = match args.train.as_deref() {
        Some(p) => select_systems(&read_table(p, SplitTag::Train)?, test.system_ids())?,
        None => test.clone(),
    };
    let normalized = min_max_apply(&test, &min_max_fit(&fit_on))?;
    let mut out = String::from("system,accuracy,precision,recall,f1\n");
    for (j, id) in normalized.system_ids().iter().enumerate() {
        let preds: Vec<u8> = normalized.column(j).iter().map(|&s| u8::from(s >= args.threshold)).collect();
        let m = compute_metrics(&preds, &labels)?;
        let _ = writeln!(out, "{id},{:.6},{:.6},{:.6},{:.6}", m.accuracy, m.precision, m.recall, m.f1);
    }
    emit(args.out.as_deref(), &out)
}

fn cmd_synth(args: SynthArgs) -> CliResult<()> {
    let mut cfg = match args.config.as_deref() {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            SynthConfig::from_toml(&text)?
        }
        None => SynthConfig::new(args.systems.unwrap_or(4), args.items.unwrap_or(1000), args.seed.unwrap_or(42)),
    };
    if let Some(t) = args.systems {
        if t != cfg.systems {
            let resized = SynthConfig::new(t, cfg.items, cfg.seed);
            cfg.systems = t;
            cfg.accuracy = resized.accuracy;
            cfg.sharpness = resized.sharpness;
        }
    }
    if let Some(n) = args.items {
        cfg.items = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(a) = args.accuracy {
        cfg.accuracy = a;
    }
    if let Some(k) = args.sharpness {
        cfg.sharpness = k;
    }
    if let Some(p) = args.positive_fraction {
        cfg.positive_fraction = p;
    }
    let (train, test) = generate(&cfg)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::Config(format!("{}: {e}", args.out_dir.display())))?;
    emit(Some(&args.out_dir.join("train.csv")), &write_score_file(&train))?;
    emit(Some(&args.out_dir.join("test.csv")), &write_score_file(&test))?;
    emit(None, &cfg.to_toml()?)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Diversity(a) => cmd_diversity(a),
        Command::Fuse(a) => cmd_fuse(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Rsc(a) => cmd_rsc(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
