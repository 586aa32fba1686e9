//! Command-line front end for the jamguard workbench.
//!
//! Every command writes its artifacts plus a manifest holding the resolved
//! configuration, the seed and SHA-256 fingerprints of inputs and outputs.
//! Floats are written with 12 significant digits and JSON keys are sorted, so
//! identical flags give byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use jamguard_core::canon::{fmt_f64, sha256_hex, to_canonical_json};
use jamguard_core::evalkit::{EvalReport, Metrics, ModelFile, RocCurve};
use jamguard_core::svm::{DEFAULT_C, DEFAULT_EPOCHS};
use jamguard_core::{
    confusion, cross_validate, csv_read, csv_write, generate_dataset, metrics, roc_curve, sweep, Dataset, KernelKind,
    KernelSpec, Learner, ModelSpec, NetArchitecture, NnHyperparams, ScenarioMix, SvmParams, Sweep, SweepRow,
    TreeParams,
};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] jamguard_core::Error),
}

impl CliError {
    /// 1 usage, 2 data error, 3 training failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_training_failure() => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "jamguard", version, about = "Jamming detection workbench")]
pub struct Cli {
    /// Base seed for every random draw.
    #[arg(long, global = true, env = "JAMGUARD_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Simulate a labelled dataset and write it as CSV.
    Generate(GenerateArgs),
    /// Fit one model on a dataset and save it.
    Train(TrainArgs),
    /// Score a saved model on a dataset.
    Evaluate(EvaluateArgs),
    /// Cross-validate one model configuration.
    Cv(CvArgs),
    /// Cross-validate every point of a hyperparameter grid.
    Sweep(SweepArgs),
    /// Export the out-of-fold ROC curve of one model.
    Roc(RocArgs),
    /// Cross-validate the seven reference configurations side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    /// Scenario-mix JSON; the canonical mix when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = jamguard_core::CANONICAL_N)]
    pub n: usize,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Forest,
    Svm,
    Nn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelArg {
    Linear,
    Poly2,
    Poly3,
    Rbf,
    Sigmoid,
}

impl From<KernelArg> for KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Linear => KernelKind::Linear,
            KernelArg::Poly2 => KernelKind::Poly2,
            KernelArg::Poly3 => KernelKind::Poly3,
            KernelArg::Rbf => KernelKind::Rbf,
            KernelArg::Sigmoid => KernelKind::Sigmoid,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Family::Forest)]
    pub model: Family,
    /// Trees in the forest.
    #[arg(long, default_value_t = 100)]
    pub estimators: usize,
    #[arg(long, value_enum, default_value_t = KernelArg::Rbf)]
    pub kernel: KernelArg,
    /// SVM regularization factor.
    #[arg(long = "C", default_value_t = DEFAULT_C)]
    pub c: f64,
    /// Hidden layer sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,2")]
    pub hidden: Vec<usize>,
    /// Network weight penalty.
    #[arg(long, default_value_t = NnHyperparams::default().lambda)]
    pub lambda: f64,
    /// Network learning rate.
    #[arg(long, default_value_t = NnHyperparams::default().learning_rate)]
    pub lr: f64,
    /// SVM passes or network epochs; family default when omitted.
    #[arg(long)]
    pub epochs: Option<usize>,
}

impl ModelArgs {
    pub fn spec(&self) -> CliResult<ModelSpec> {
        match self.model {
            Family::Forest => {
                if self.estimators == 0 {
                    return Err(CliError::Usage("--estimators must be at least 1".into()));
                }
                Ok(ModelSpec::forest(self.estimators))
            }
            Family::Svm => {
                if !(self.c.is_finite() && self.c > 0.0) {
                    return Err(CliError::Usage("--C must be positive".into()));
                }
                Ok(ModelSpec::Svm(SvmParams {
                    kernel: KernelSpec::new(self.kernel.into()),
                    c: self.c,
                    epochs: self.epochs.unwrap_or(DEFAULT_EPOCHS).max(1),
                }))
            }
            Family::Nn => {
                let architecture = NetArchitecture::with_hidden(&self.hidden);
                architecture.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                let hyperparams = NnHyperparams {
                    lambda: self.lambda,
                    learning_rate: self.lr,
                    max_epochs: self.epochs.unwrap_or(NnHyperparams::default().max_epochs),
                    ..NnHyperparams::default()
                };
                hyperparams.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                Ok(ModelSpec::Nn { architecture, hyperparams })
            }
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output model JSON path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model_file: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output report JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CvArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridArg {
    /// Forest size.
    Estimators,
    /// SVM kernel times regularization factor.
    SvmC,
    /// Neurons in a single hidden layer.
    Hidden,
    /// Fold count, for the model given by the model flags.
    Folds,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub grid: GridArg,
    /// Grid values, comma separated; a per-grid default when omitted.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    /// Kernels crossed with the C values of an `svm-c` grid.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "rbf")]
    pub kernels: Vec<KernelArg>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RocArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Resolved configuration of a run, written next to its artifacts.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub run: &'a Command,
    pub resolved: serde_json::Value,
    /// SHA-256 of every input file, by path.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of every output file, by file name.
    pub outputs: BTreeMap<String, String>,
}

/// Parse-free entry point: run a parsed command line inside a pool of `--jobs` workers.
pub fn run(cli: &Cli) -> CliResult<String> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> CliResult<String> {
    let seed = cli.seed;
    let (summary, resolved, inputs, outputs, manifest_path) = match &cli.command {
        Command::Generate(a) => {
            let (summary, resolved) = cmd_generate(a.config.as_deref(), &a.out, a.n, seed)?;
            let inputs = a.config.iter().map(|p| p.as_path()).collect::<Vec<_>>();
            (summary, resolved, inputs, vec![a.out.clone()], sidecar(&a.out))
        }
        Command::Train(a) => {
            let spec = a.model.spec()?;
            let summary = cmd_train(&spec, &a.data, &a.out, seed)?;
            (summary, serde_json::to_value(&spec)?, vec![a.data.as_path()], vec![a.out.clone()], sidecar(&a.out))
        }
        Command::Evaluate(a) => {
            let report = cmd_evaluate(&a.model_file, &a.data)?;
            let summary = format!("{}\n", metric_line(&report.model, &report.metrics));
            let outputs = match &a.out {
                Some(p) => {
                    fs::write(p, to_canonical_json(&report)?)?;
                    vec![p.clone()]
                }
                None => vec![],
            };
            let manifest = a.out.as_deref().map(sidecar);
            let inputs = vec![a.model_file.as_path(), a.data.as_path()];
            match manifest {
                Some(m) => (summary, serde_json::Value::Null, inputs, outputs, m),
                None => return Ok(summary),
            }
        }
        Command::Cv(a) => {
            let spec = a.model.spec()?;
            let d = csv_read(&a.data)?;
            let written = cmd_cv(&spec, &d, a.folds, seed, &a.out)?;
            let report: EvalReport = serde_json::from_str(&fs::read_to_string(a.out.join("report.json"))?)?;
            let summary = format!("{}\n", metric_line(&report.model, &report.metrics));
            (summary, serde_json::to_value(&spec)?, vec![a.data.as_path()], written, a.out.join("manifest.json"))
        }
        Command::Sweep(a) => {
            let grid = sweep_grid(a)?;
            let d = csv_read(&a.data)?;
            let rows = sweep(&grid, &d, a.folds, seed)?;
            let written = write_sweep(&rows, &a.out)?;
            let summary = sweep_table(&rows);
            (summary, serde_json::to_value(&grid)?, vec![a.data.as_path()], written, a.out.join("manifest.json"))
        }
        Command::Roc(a) => {
            let spec = a.model.spec()?;
            let d = csv_read(&a.data)?;
            let roc = cmd_roc(&spec, &d, a.folds, seed)?;
            write_file(&a.out, &roc.to_csv())?;
            let summary = format!("{} auc={}\n", spec.describe(), fmt_f64(roc.auc));
            (summary, serde_json::to_value(&spec)?, vec![a.data.as_path()], vec![a.out.clone()], sidecar(&a.out))
        }
        Command::Compare(a) => {
            let d = csv_read(&a.data)?;
            let comparison = cmd_compare(&d, a.folds, seed)?;
            let written = write_comparison(&comparison, &a.out)?;
            let specs: Vec<ModelSpec> = comparison.rows.iter().map(|r| r.spec.clone()).collect();
            (comparison.table(), serde_json::to_value(specs)?, vec![a.data.as_path()], written, a.out.join("manifest.json"))
        }
    };
    let manifest = Manifest {
        tool: "jamguard",
        version: env!("CARGO_PKG_VERSION"),
        seed,
        jobs: cli.jobs,
        run: &cli.command,
        resolved,
        inputs: fingerprints(inputs.iter().map(|p| (p.display().to_string(), p.to_path_buf())))?,
        outputs: fingerprints(outputs.iter().map(|p| (file_name(p), p.clone())))?,
    };
    write_file(&manifest_path, &to_canonical_json(&manifest)?)?;
    Ok(summary)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn fingerprints(paths: impl Iterator<Item = (String, PathBuf)>) -> CliResult<BTreeMap<String, String>> {
    paths.map(|(key, p)| Ok((key, sha256_hex(&fs::read(&p)?)))).collect()
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn metric_line(model: &str, m: &Metrics) -> String {
    format!(
        "{model} pd={} pfa={} pmd={} accuracy={}",
        opt(m.pd),
        opt(m.pfa),
        opt(m.pmd),
        opt(m.accuracy)
    )
}

/// Simulate `n` windows from the mix at `config` (canonical when `None`) and write CSV.
pub fn cmd_generate(config: Option<&Path>, out: &Path, n: usize, seed: u64) -> CliResult<(String, serde_json::Value)> {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let mix = match config {
        Some(p) => ScenarioMix::from_json(&fs::read_to_string(p)?)?,
        None => ScenarioMix::canonical(),
    };
    let d = generate_dataset(&mix, n, seed)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    csv_write(&d, out)?;
    let summary = format!("wrote {n} samples ({} jammed) to {}\n", d.positives(), out.display());
    let resolved = serde_json::json!({ "mix": mix, "meta": d.meta });
    Ok((summary, resolved))
}

/// Fit `spec` on the whole dataset at `data` and save it to `out`.
pub fn cmd_train(spec: &ModelSpec, data: &Path, out: &Path, seed: u64) -> CliResult<String> {
    let d = csv_read(data)?;
    let model = spec.fit(&d, seed)?;
    let report = metrics(&confusion(&model, &d));
    write_file(out, &ModelFile::new(spec.clone(), model).to_json()?)?;
    Ok(format!("{} (training set)\n", metric_line(&spec.describe(), &report.metrics)))
}

/// Score a saved model on a dataset.
pub fn cmd_evaluate(model_file: &Path, data: &Path) -> CliResult<EvalReport> {
    let file = ModelFile::from_json(&fs::read_to_string(model_file)?)?;
    let d = csv_read(data)?;
    let mut report = metrics(&confusion(&file.model, &d));
    report.model = file.spec.describe();
    Ok(report)
}

/// Cross-validate and write `report.json`, `report.csv` and `roc.csv` under `out`.
pub fn cmd_cv(spec: &ModelSpec, d: &Dataset, k: usize, seed: u64, out: &Path) -> CliResult<Vec<PathBuf>> {
    let outcome = cross_validate(spec, d, k, seed)?;
    let roc = roc_curve(&outcome.scores, &d.labels())?;
    let mut csv = String::from("fold,pd,pfa,pmd,accuracy\n");
    for f in &outcome.report.folds {
        csv.push_str(&format!("{},{}\n", f.fold, metric_cells(&f.metrics)));
    }
    csv.push_str(&format!("pooled,{}\n", metric_cells(&outcome.report.metrics)));
    let files = [
        ("report.json", to_canonical_json(&outcome.report)?),
        ("report.csv", csv),
        ("roc.csv", roc.to_csv()),
    ];
    write_all(out, &files)
}

fn write_all(dir: &Path, files: &[(&str, String)]) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|(name, text)| {
            let p = dir.join(name);
            fs::write(&p, text)?;
            Ok(p)
        })
        .collect()
}

fn metric_cells(m: &Metrics) -> String {
    format!("{},{},{},{}", opt(m.pd), opt(m.pfa), opt(m.pmd), opt(m.accuracy))
}

fn sweep_grid(a: &SweepArgs) -> CliResult<Sweep> {
    let ints = |default: &[usize]| -> CliResult<Vec<usize>> {
        if a.values.is_empty() {
            return Ok(default.to_vec());
        }
        a.values
            .iter()
            .map(|&v| {
                if v >= 1.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(CliError::Usage(format!("grid value {v} must be a positive integer")))
                }
            })
            .collect()
    };
    Ok(match a.grid {
        GridArg::Estimators => Sweep::ForestEstimators {
            params: TreeParams::default(),
            estimators: ints(&[1, 5, 10, 20, 40, 60, 80, 100])?,
        },
        GridArg::SvmC => {
            let cs = if a.values.is_empty() { vec![0.1, 1.0, 3.0, 10.0] } else { a.values.clone() };
            if cs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                return Err(CliError::Usage("C values must be positive".into()));
            }
            Sweep::SvmKernelC {
                epochs: a.model.epochs.unwrap_or(DEFAULT_EPOCHS).max(1),
                kernels: a.kernels.iter().map(|&k| k.into()).collect(),
                cs,
            }
        }
        GridArg::Hidden => {
            let ModelSpec::Nn { hyperparams, .. } = ModelArgs { model: Family::Nn, ..a.model.clone() }.spec()? else {
                unreachable!("nn family yields an nn spec")
            };
            Sweep::NnHidden { hyperparams, hidden: ints(&[1, 2, 10, 100])? }
        }
        GridArg::Folds => Sweep::Folds { model: a.model.spec()?, folds: ints(&[2, 5, 10, 20])? },
    })
}

fn write_sweep(rows: &[SweepRow], out: &Path) -> CliResult<Vec<PathBuf>> {
    let keys: Vec<&str> = rows.first().map(|r| r.point.iter().map(|(k, _)| k.as_str()).collect()).unwrap_or_default();
    let mut csv = keys.join(",");
    csv.push_str(",folds,pd,pfa,pmd,accuracy,error\n");
    for r in rows {
        let vals: Vec<&str> = r.point.iter().map(|(_, v)| v.as_str()).collect();
        let cells = r.report.as_ref().map_or_else(|| ",,,".to_string(), |rep| metric_cells(&rep.metrics));
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        csv.push_str(&format!("{},{},{cells},{err}\n", vals.join(","), r.folds));
    }
    write_all(out, &[("sweep.json", to_canonical_json(&rows)?), ("sweep.csv", csv)])
}

fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let point: Vec<String> = r.point.iter().map(|(k, v)| format!("{k}={v}")).collect();
        match &r.report {
            Some(rep) => s.push_str(&format!("{} {}\n", point.join(" "), metric_line(&rep.model, &rep.metrics))),
            None => s.push_str(&format!("{} failed: {}\n", point.join(" "), r.error.as_deref().unwrap_or(""))),
        }
    }
    s
}

/// Out-of-fold ROC curve of `spec`.
pub fn cmd_roc(spec: &ModelSpec, d: &Dataset, k: usize, seed: u64) -> CliResult<RocCurve> {
    let outcome = cross_validate(spec, d, k, seed)?;
    Ok(roc_curve(&outcome.scores, &d.labels())?)
}

/// The seven reference configurations, in table order.
pub fn reference_models() -> Vec<(&'static str, ModelSpec)> {
    let svm = |k| ModelSpec::Svm(SvmParams::new(k));
    vec![
        ("svm-linear", svm(KernelKind::Linear)),
        ("svm-quadratic", svm(KernelKind::Poly2)),
        ("svm-cubic", svm(KernelKind::Poly3)),
        ("svm-rbf", svm(KernelKind::Rbf)),
        ("svm-sigmoid", svm(KernelKind::Sigmoid)),
        ("nn", ModelSpec::nn(&[2, 2])),
        ("forest", ModelSpec::forest(100)),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub name: String,
    pub spec: ModelSpec,
    pub report: Option<EvalReport>,
    pub roc: Option<RocCurve>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub folds: usize,
    pub seed: u64,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn row(&self, name: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("model,pd,pfa,pmd,accuracy,auc,status\n");
        for r in &self.rows {
            let cells = r.report.as_ref().map_or_else(|| ",,,".to_string(), |rep| metric_cells(&rep.metrics));
            let auc = r.roc.as_ref().map(|c| fmt_f64(c.auc)).unwrap_or_default();
            let status = r.error.as_deref().map_or("ok".to_string(), |e| format!("failed: {}", e.replace([',', '\n'], ";")));
            s.push_str(&format!("{},{cells},{auc},{status}\n", r.name));
        }
        s
    }

    pub fn table(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{:.2}", 100.0 * x));
        let mut s = format!("{:<14} {:>7} {:>7} {:>7} {:>9} {:>7}\n", "model", "pd%", "pfa%", "pmd%", "accuracy%", "auc");
        for r in &self.rows {
            match &r.report {
                Some(rep) => s.push_str(&format!(
                    "{:<14} {:>7} {:>7} {:>7} {:>9} {:>7}\n",
                    r.name,
                    pct(rep.pd()),
                    pct(rep.pfa()),
                    pct(rep.pmd()),
                    pct(rep.accuracy()),
                    r.roc.as_ref().map_or("-".into(), |c| format!("{:.4}", c.auc)),
                )),
                None => s.push_str(&format!("{:<14} failed: {}\n", r.name, r.error.as_deref().unwrap_or(""))),
            }
        }
        s
    }
}

/// Cross-validate every reference configuration on `d`. A failing model
/// marks its row failed and the others still run.
pub fn cmd_compare(d: &Dataset, k: usize, seed: u64) -> CliResult<Comparison> {
    d.ensure_non_empty()?;
    let rows = reference_models()
        .into_par_iter()
        .map(|(name, spec)| {
            let outcome = cross_validate(&spec, d, k, seed)
                .and_then(|o| roc_curve(&o.scores, &d.labels()).map(|roc| (o.report, roc)));
            let (report, roc, error) = match outcome {
                Ok((rep, roc)) => (Some(rep), Some(roc), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            ComparisonRow { name: name.to_string(), spec, report, roc, error }
        })
        .collect();
    Ok(Comparison { folds: k, seed, rows })
}

/// `compare.json`, `compare.csv` and one `roc-<model>.csv` per successful row.
pub fn write_comparison(c: &Comparison, out: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files = vec![("compare.json".to_string(), to_canonical_json(c)?), ("compare.csv".to_string(), c.csv())];
    for r in &c.rows {
        if let Some(roc) = &r.roc {
            files.push((format!("roc-{}.csv", r.name), roc.to_csv()));
        }
    }
    let named: Vec<(&str, String)> = files.iter().map(|(n, t)| (n.as_str(), t.clone())).collect();
    write_all(out, &named)
}
