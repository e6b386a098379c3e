//! Command-line surface for the variable-wise quantile classifier: train
//! and persist models, predict, cross-validate, generate synthetic
//! scenario data, run benchmark grids, and fit the one-dimensional
//! asymmetric Laplace MLE.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error. All
//! randomness flows from the single --seed flag. Every file output gets a
//! `<path>.meta.json` sidecar echoing the flags that produced it.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use vwqc::baselines::OqcConfig;
use vwqc::data::{load_csv, CsvOptions, Dataset, LabelColumn};
use vwqc::eval::{
    cross_validate, run_benchmark, write_records_csv, write_summary_csv, ClassifierSpec, CvSpec,
};
use vwqc::model::{load_model, save_model};
use vwqc::simgen::{generate, ScenarioKind, ScenarioMetadata, ScenarioSpec};
use vwqc::vwqc::{fit_detailed, predict, FitConfig};

#[derive(Parser)]
#[command(
    name = "vwqc",
    about = "Variable-wise quantile classification",
    version
)]
struct Cli {
    /// Master RNG seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap worker-thread parallelism (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on a labelled CSV and write it as JSON.
    Train(TrainArgs),
    /// Classify rows of a CSV with a saved model.
    Predict(PredictArgs),
    /// K-fold cross-validation of one or more classifiers.
    Cv(CvArgs),
    /// Generate a synthetic scenario train/test pair.
    Simulate(SimulateArgs),
    /// Run a benchmark grid and write record/summary CSVs.
    Benchmark(BenchmarkArgs),
    /// Fit the asymmetric Laplace MLE to a single column of numbers.
    FitAl(FitAlArgs),
}

#[derive(Args, Serialize)]
struct CsvArgs {
    /// Label column: "last", a 0-based index, or a header name.
    #[arg(long, default_value = "last")]
    label_column: String,
    /// Treat the first row as data, not a header.
    #[arg(long)]
    no_header: bool,
    /// Field delimiter.
    #[arg(long, default_value = ",")]
    delimiter: char,
}

impl CsvArgs {
    fn to_options(&self) -> Result<CsvOptions> {
        if !self.delimiter.is_ascii() {
            usage("--delimiter must be a single ASCII character");
        }
        let label_column = match self.label_column.as_str() {
            "last" => LabelColumn::Last,
            other => match other.parse::<usize>() {
                Ok(idx) => LabelColumn::Index(idx),
                Err(_) => {
                    if self.no_header {
                        usage("--label-column by name requires a header row (drop --no-header or use an index)");
                    }
                    LabelColumn::Name(other.to_string())
                }
            },
        };
        Ok(CsvOptions {
            label_column,
            has_header: !self.no_header,
            delimiter: self.delimiter as u8,
        })
    }
}

#[derive(Args, Serialize)]
struct FitArgs {
    /// Number of random restarts (one scan-seeded restart is always added).
    #[arg(long, default_value_t = FitConfig::default().restarts)]
    restarts: usize,
    #[arg(long, default_value_t = FitConfig::default().max_sweeps)]
    max_sweeps: usize,
    /// Relative objective-change convergence threshold.
    #[arg(long, default_value_t = FitConfig::default().tol)]
    tol: f64,
    /// Upper bound on every per-variable scale weight.
    #[arg(long, default_value_t = FitConfig::default().lambda_cap)]
    lambda_cap: f64,
    /// Quantile levels are clamped into [floor, 1 - floor].
    #[arg(long, default_value_t = FitConfig::default().theta_floor)]
    theta_floor: f64,
}

impl FitArgs {
    fn to_config(&self, seed: u64) -> FitConfig {
        FitConfig {
            lambda_cap: self.lambda_cap,
            theta_floor: self.theta_floor,
            tol: self.tol,
            max_sweeps: self.max_sweeps,
            restarts: self.restarts,
            seed,
            parallel_restarts: true,
        }
    }
}

#[derive(Args, Serialize)]
struct TrainArgs {
    /// Labelled training CSV.
    #[arg(long)]
    data: PathBuf,
    /// Output model path (JSON).
    #[arg(long)]
    output: PathBuf,
    /// Divide variables by within-class pooled sd before fitting; the
    /// divisors are stored in the model and applied at prediction time.
    #[arg(long)]
    standardize: bool,
    #[command(flatten)]
    csv: CsvArgs,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args, Serialize)]
struct PredictArgs {
    /// Saved model (JSON).
    #[arg(long)]
    model: PathBuf,
    /// CSV of observations to classify.
    #[arg(long)]
    data: PathBuf,
    /// Output predictions CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// The input has no label column; every column is a feature.
    #[arg(long)]
    unlabeled: bool,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args, Serialize)]
struct CvArgs {
    /// Labelled CSV.
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated subset of vwqc,median,centroid,oqc.
    #[arg(long, default_value = "vwqc,median,centroid,oqc")]
    classifiers: String,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Plain folds instead of class-stratified ones.
    #[arg(long)]
    no_stratify: bool,
    /// Standardize by within-class pooled sd computed on the training
    /// folds only.
    #[arg(long)]
    standardize: bool,
    /// Optional results CSV (classifier,mean,sd,stderr).
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    csv: CsvArgs,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// Scenario kind: t3, logabst, exp or ddv.
    #[arg(long)]
    scenario: String,
    /// Total sample size (split evenly between two classes).
    #[arg(long)]
    n: usize,
    /// Number of variables.
    #[arg(long)]
    p: usize,
    /// Fraction of variables carrying the class shift.
    #[arg(long, default_value_t = 1.0)]
    relevant_fraction: f64,
    #[arg(long)]
    correlated: bool,
    /// Divide by within-class pooled sd from the training half (always on
    /// for ddv).
    #[arg(long)]
    standardize: bool,
    /// Apply the class shift after the scenario transformation.
    #[arg(long)]
    shift_after_transform: bool,
    /// Output prefix: writes <prefix>_train.csv, <prefix>_test.csv and
    /// <prefix>.meta.json.
    #[arg(long)]
    output_prefix: PathBuf,
}

#[derive(Args, Serialize)]
struct BenchmarkArgs {
    /// Grid file (JSON): either a list of scenario specs or a compact
    /// cross-product object; see the README.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, default_value_t = 20)]
    replications: usize,
    /// Comma-separated subset of vwqc,median,centroid,oqc.
    #[arg(long, default_value = "vwqc,median,centroid,oqc")]
    classifiers: String,
    /// Per-replication records CSV.
    #[arg(long)]
    output: PathBuf,
    /// Per-cell mean/sd summary CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args, Serialize)]
struct FitAlArgs {
    /// File with one number per line.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    fit: FitArgs,
}

/// Print a usage error and exit with code 2.
fn usage(message: &str) -> ! {
    eprintln!("error: {message}");
    std::process::exit(2);
}

fn write_meta(output: &Path, command: &str, seed: u64, flags: impl Serialize) -> Result<()> {
    let meta = serde_json::json!({
        "command": command,
        "seed": seed,
        "flags": flags,
    });
    let path = sidecar_path(output);
    std::fs::write(&path, serde_json::to_string_pretty(&meta)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    output.with_file_name(name)
}

fn parse_classifiers(list: &str, fit: FitConfig) -> Vec<ClassifierSpec> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| match name {
            "vwqc" => ClassifierSpec::Vwqc(fit.clone()),
            "median" => ClassifierSpec::Median,
            "centroid" => ClassifierSpec::Centroid,
            "oqc" => ClassifierSpec::Oqc(OqcConfig::default()),
            other => usage(&format!(
                "unknown classifier {other:?} (expected vwqc, median, centroid or oqc)"
            )),
        })
        .collect()
}

fn cmd_train(seed: u64, args: &TrainArgs) -> Result<()> {
    let options = args.csv.to_options()?;
    let dataset = load_csv(&args.data, &options)?;
    let (train, divisors) = if args.standardize {
        let d = dataset.pooled_within_class_sd();
        (dataset.scaled(&d)?, Some(d))
    } else {
        (dataset, None)
    };
    let config = args.fit.to_config(seed);
    let (mut model, report, _) = fit_detailed(&train, &config)?;
    model.standardization = divisors;
    save_model(&model, &args.output)?;
    write_meta(&args.output, "train", seed, args)?;
    println!(
        "trained on {} rows x {} variables, {} classes",
        train.n(),
        train.p(),
        train.class_count()
    );
    println!(
        "objective {:.6} after {} sweeps (restart {}, converged: {})",
        report.final_psi, report.sweeps_used, report.restart_index, report.converged
    );
    println!("model written to {}", args.output.display());
    Ok(())
}

/// Read a feature-only CSV: every column numeric, no label.
fn load_unlabeled(path: &Path, options: &CsvOptions) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .delimiter(options.delimiter)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row: Vec<f64> = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.trim()
                    .parse::<f64>()
                    .with_context(|| format!("row {}, column {}: bad number {cell:?}", i + 1, j))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn cmd_predict(seed: u64, args: &PredictArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let options = args.csv.to_options()?;
    let (rows, actual): (Vec<Vec<f64>>, Option<Vec<String>>) = if args.unlabeled {
        (load_unlabeled(&args.data, &options)?, None)
    } else {
        let dataset = load_csv(&args.data, &options)?;
        let rows = (0..dataset.n()).map(|i| dataset.row(i)).collect();
        let actual = dataset
            .labels()
            .iter()
            .map(|&c| dataset.label_name(c).to_string())
            .collect();
        (rows, Some(actual))
    };
    let predictions = predict(&model, &rows)?;

    let mut out: Box<dyn std::io::Write> = match &args.output {
        Some(path) => Box::new(
            std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        ),
        None => Box::new(std::io::stdout()),
    };
    match &actual {
        Some(_) => writeln!(out, "row,predicted,actual")?,
        None => writeln!(out, "row,predicted")?,
    }
    for (i, &class) in predictions.iter().enumerate() {
        let name = model
            .label_names
            .get(class)
            .cloned()
            .unwrap_or_else(|| class.to_string());
        match &actual {
            Some(a) => writeln!(out, "{i},{name},{}", a[i])?,
            None => writeln!(out, "{i},{name}")?,
        }
    }
    drop(out);
    if let Some(path) = &args.output {
        write_meta(path, "predict", seed, args)?;
    }
    Ok(())
}

fn cmd_cv(seed: u64, args: &CvArgs) -> Result<()> {
    let options = args.csv.to_options()?;
    let dataset = load_csv(&args.data, &options)?;
    let classifiers = parse_classifiers(&args.classifiers, args.fit.to_config(seed));
    if classifiers.is_empty() {
        usage("--classifiers must name at least one classifier");
    }
    let cv = CvSpec {
        folds: args.folds,
        stratified: !args.no_stratify,
        seed,
        standardize: args.standardize,
    };
    let mut lines = vec!["classifier,mean,sd,stderr".to_string()];
    println!("{:>10}  {:>8}  {:>8}  {:>8}", "classifier", "mean", "sd", "stderr");
    for spec in &classifiers {
        let result = cross_validate(&dataset, spec, &cv)?;
        println!(
            "{:>10}  {:>8.4}  {:>8.4}  {:>8.4}",
            spec.name(),
            result.mean,
            result.sd,
            result.stderr
        );
        lines.push(format!(
            "{},{},{},{}",
            spec.name(),
            result.mean,
            result.sd,
            result.stderr
        ));
    }
    if let Some(path) = &args.output {
        std::fs::write(path, lines.join("\n") + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        write_meta(path, "cv", seed, args)?;
    }
    Ok(())
}

fn write_dataset_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    let mut header: Vec<String> = (0..dataset.p()).map(|j| format!("v{j}")).collect();
    header.push("class".to_string());
    writer.write_record(&header)?;
    for i in 0..dataset.n() {
        let mut record: Vec<String> = dataset.row(i).iter().map(|v| v.to_string()).collect();
        record.push(dataset.label_name(dataset.labels()[i]).to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

fn cmd_simulate(seed: u64, args: &SimulateArgs) -> Result<()> {
    let spec = ScenarioSpec {
        kind: ScenarioKind::parse(&args.scenario)?,
        n: args.n,
        p: args.p,
        relevant_fraction: args.relevant_fraction,
        correlated: args.correlated,
        seed,
        standardize: args.standardize,
        shift_after_transform: args.shift_after_transform,
    };
    let (train, test) = generate(&spec)?;

    let prefix = args.output_prefix.as_os_str().to_string_lossy();
    let train_path = PathBuf::from(format!("{prefix}_train.csv"));
    let test_path = PathBuf::from(format!("{prefix}_test.csv"));
    let meta_path = PathBuf::from(format!("{prefix}.meta.json"));
    write_dataset_csv(&train_path, &train)?;
    write_dataset_csv(&test_path, &test)?;
    let meta = serde_json::json!({
        "command": "simulate",
        "seed": seed,
        "flags": args,
        "scenario": ScenarioMetadata::for_spec(&spec),
    });
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .with_context(|| format!("writing {}", meta_path.display()))?;
    println!(
        "wrote {}, {} and {}",
        train_path.display(),
        test_path.display(),
        meta_path.display()
    );
    Ok(())
}

/// Compact grid file: the cross product of the listed values.
#[derive(serde::Deserialize)]
struct GridFile {
    scenarios: Vec<String>,
    n: Vec<usize>,
    p: Vec<usize>,
    relevant_fractions: Vec<f64>,
    correlated: Vec<bool>,
    #[serde(default)]
    standardize: bool,
    #[serde(default)]
    shift_after_transform: bool,
}

fn load_grid(path: &Path) -> Result<Vec<ScenarioSpec>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(cells) = serde_json::from_str::<Vec<ScenarioSpec>>(&text) {
        return Ok(cells);
    }
    let grid: GridFile = serde_json::from_str(&text)
        .with_context(|| format!("{}: expected a scenario list or a grid object", path.display()))?;
    let mut cells = Vec::new();
    for scenario in &grid.scenarios {
        let kind = ScenarioKind::parse(scenario)?;
        for &n in &grid.n {
            for &p in &grid.p {
                for &relevant_fraction in &grid.relevant_fractions {
                    for &correlated in &grid.correlated {
                        cells.push(ScenarioSpec {
                            kind,
                            n,
                            p,
                            relevant_fraction,
                            correlated,
                            // Overridden per cell by the benchmark runner.
                            seed: 0,
                            standardize: grid.standardize,
                            shift_after_transform: grid.shift_after_transform,
                        });
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn cmd_benchmark(seed: u64, args: &BenchmarkArgs) -> Result<()> {
    let grid = load_grid(&args.grid)?;
    if grid.is_empty() {
        usage("the benchmark grid is empty");
    }
    let classifiers = parse_classifiers(&args.classifiers, args.fit.to_config(seed));
    if classifiers.is_empty() {
        usage("--classifiers must name at least one classifier");
    }
    println!(
        "running {} cells x {} replications x {} classifiers",
        grid.len(),
        args.replications,
        classifiers.len()
    );
    let run = run_benchmark(&grid, &classifiers, args.replications, seed)?;
    write_records_csv(&args.output, &run.records)?;
    write_meta(&args.output, "benchmark", seed, args)?;
    println!(
        "{} records written to {}",
        run.records.len(),
        args.output.display()
    );
    if let Some(path) = &args.summary {
        write_summary_csv(path, &run.records)?;
        write_meta(path, "benchmark", seed, args)?;
        println!("summary written to {}", path.display());
    }
    for failure in &run.failures {
        eprintln!(
            "warning: cell {} replication {} failed: {}",
            failure.cell_label, failure.replication, failure.message
        );
    }
    if !run.failures.is_empty() {
        bail!("{} cell replications failed", run.failures.len());
    }
    Ok(())
}

fn cmd_fit_al(seed: u64, args: &FitAlArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.data)
        .with_context(|| format!("reading {}", args.data.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(
            line.parse::<f64>()
                .with_context(|| format!("line {}: bad number {line:?}", i + 1))?,
        );
    }
    if values.is_empty() {
        bail!("{}: no values", args.data.display());
    }
    let labels = vec![0; values.len()];
    let dataset = Dataset::from_columns(vec![values], labels, 1)?;
    let (model, report, _) = fit_detailed(&dataset, &args.fit.to_config(seed))?;
    let out = serde_json::json!({
        "theta": model.theta[0],
        "lambda": model.lambda[0],
        "q": model.quantiles[0][0],
        "objective": report.final_psi,
        "converged": report.converged,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            usage("--jobs must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match &cli.command {
        Command::Train(args) => cmd_train(cli.seed, args),
        Command::Predict(args) => cmd_predict(cli.seed, args),
        Command::Cv(args) => cmd_cv(cli.seed, args),
        Command::Simulate(args) => cmd_simulate(cli.seed, args),
        Command::Benchmark(args) => cmd_benchmark(cli.seed, args),
        Command::FitAl(args) => cmd_fit_al(cli.seed, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
