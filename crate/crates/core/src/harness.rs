//! Experiment orchestration: single runs, seeded grids, R² and report emission.

use std::fmt;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, Scaler, TrainFraction};
use crate::error::{Error, Result};
use crate::mlp::{self, AdamConfig, L2Selection, MlpModel};
use crate::optim::{self, PowellOptions};
use crate::qnn::{QnnCost, QnnModel};

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r_squared(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() || y_true.len() < 2 {
        return Err(Error::argument(
            "r_squared needs two equal-length arrays of at least 2 values",
        ));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedMetric(
            "R² is undefined when the targets have zero variance",
        ));
    }
    let ss_res: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(y, p)| (y - p) * (y - p))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

fn rmse(y_true: &[f64], y_pred: &[f64]) -> f64 {
    mlp::mse(y_pred, y_true).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelKind {
    Qnn { depth: usize, width: usize },
    MlpRegularized,
    MlpUnregularized,
}

impl ModelKind {
    /// `qnn`, `mlp-regularized` or `mlp-unregularized`.
    pub fn family(&self) -> &'static str {
        match self {
            ModelKind::Qnn { .. } => "qnn",
            ModelKind::MlpRegularized => "mlp-regularized",
            ModelKind::MlpUnregularized => "mlp-unregularized",
        }
    }

    pub fn depth(&self) -> Option<usize> {
        match *self {
            ModelKind::Qnn { depth, .. } => Some(depth),
            _ => None,
        }
    }

    pub fn width(&self) -> Option<usize> {
        match *self {
            ModelKind::Qnn { width, .. } => Some(width),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ModelKind::Qnn { depth, width } = *self {
            if depth == 0 {
                return Err(Error::argument("QNN depth must be at least 1"));
            }
            if !(1..=2).contains(&width) {
                return Err(Error::argument(format!("QNN width {width} is not 1 or 2")));
            }
        }
        Ok(())
    }
}

/// `qnn-d6-w2`, `mlp-regularized`, `mlp-unregularized`.
impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Qnn { depth, width } => write!(f, "qnn-d{depth}-w{width}"),
            other => f.write_str(other.family()),
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp-regularized" => return Ok(ModelKind::MlpRegularized),
            "mlp-unregularized" => return Ok(ModelKind::MlpUnregularized),
            _ => {}
        }
        let bad = || Error::argument(format!("unrecognized model `{s}`"));
        let rest = s.strip_prefix("qnn-d").ok_or_else(bad)?;
        let (d, w) = rest.split_once("-w").ok_or_else(bad)?;
        let kind = ModelKind::Qnn {
            depth: d.parse().map_err(|_| bad())?,
            width: w.parse().map_err(|_| bad())?,
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Optimizer and training settings shared by every run of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingOptions {
    pub powell: PowellOptions,
    pub adam: AdamConfig,
    pub l2_grid: Vec<f64>,
    pub layer_sizes: Vec<usize>,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        Self {
            powell: PowellOptions::default(),
            adam: AdamConfig::default(),
            l2_grid: mlp::DEFAULT_L2_GRID.to_vec(),
            layer_sizes: mlp::DEFAULT_LAYER_SIZES.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelKind,
    pub train_fraction: TrainFraction,
    /// Drives the train/test split; model initialization and the validation split use
    /// seeds derived from it, so every model kind sees the same split for a given seed.
    pub seed: u64,
    pub options: TrainingOptions,
}

impl RunConfig {
    pub fn new(model: ModelKind, train_fraction: TrainFraction, seed: u64) -> Self {
        Self {
            model,
            train_fraction,
            seed,
            options: TrainingOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        match self.model {
            ModelKind::Qnn { .. } => self.options.powell.validate(),
            ModelKind::MlpRegularized => {
                if self.options.l2_grid.is_empty() {
                    return Err(Error::argument("L2 grid is empty"));
                }
                self.options.adam.validate()
            }
            ModelKind::MlpUnregularized => self.options.adam.validate(),
        }
    }

    pub fn init_seed(&self) -> u64 {
        derive_seed(self.seed, 1)
    }

    pub fn validation_seed(&self) -> u64 {
        derive_seed(self.seed, 2)
    }

    fn label(&self) -> String {
        format!(
            "{} at fraction {} seed {}",
            self.model, self.train_fraction, self.seed
        )
    }
}

/// SplitMix64 of `seed` offset by `stream`.
fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub n_train: usize,
    pub n_test: usize,
    pub n_params: usize,
    /// R² in scaled target space.
    pub train_r2: f64,
    pub test_r2: f64,
    /// Root-mean-square error in the original target units.
    pub train_rmse: f64,
    pub test_rmse: f64,
    /// Training objective at the returned parameters: MSE for the QNN, MSE plus the L2
    /// penalty for the MLP.
    pub final_cost: f64,
    pub wall_seconds: f64,
    /// Powell outer iterations, or Adam epochs of the final fit.
    pub iterations: usize,
    /// Powell cost evaluations, or Adam epochs summed over every fit of the run.
    pub cost_evaluations: usize,
    pub axis_restrictions: usize,
    /// Powell only: whether the relative-decrease test stopped the run.
    pub converged: Option<bool>,
    /// Powell: cost after each outer iteration. Adam: loss every 100 epochs.
    pub cost_history: Vec<f64>,
    pub lambda: Option<f64>,
    pub l2_selection: Option<L2Selection>,
    pub feature_scaler: Scaler,
    pub target_scaler: Scaler,
}

pub enum TrainedModel {
    Qnn(QnnModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            TrainedModel::Qnn(m) => m.save(path),
            TrainedModel::Mlp(m) => m.save(path),
        }
    }
}

/// Split, fit the scalers on the train rows, train, and score in scaled space.
pub fn run_single(config: &RunConfig, dataset: &Dataset) -> Result<RunReport> {
    run_single_with_model(config, dataset).map(|(report, _)| report)
}

/// [`run_single`], also returning the trained model.
pub fn run_single_with_model(
    config: &RunConfig,
    dataset: &Dataset,
) -> Result<(RunReport, TrainedModel)> {
    run_inner(config, dataset).map_err(|e| e.context(config.label()))
}

struct Fit {
    train_pred: Vec<f64>,
    test_pred: Vec<f64>,
    n_params: usize,
    final_cost: f64,
    iterations: usize,
    cost_evaluations: usize,
    axis_restrictions: usize,
    converged: Option<bool>,
    cost_history: Vec<f64>,
    l2_selection: Option<L2Selection>,
    model: TrainedModel,
}

fn run_inner(config: &RunConfig, dataset: &Dataset) -> Result<(RunReport, TrainedModel)> {
    config.validate()?;
    let started = Instant::now();
    let (train, test) = data::split_train_test(dataset, config.train_fraction, config.seed)?;
    let feature_scaler = Scaler::fit(&train.features)?;
    if feature_scaler.has_degenerate_columns() {
        log::warn!(
            "{}: constant feature column in the train rows maps to 0",
            config.label()
        );
    }
    let target_scaler = Scaler::fit_column(&train.targets)?;
    let x_train = feature_scaler.apply(&train.features)?;
    let x_test = feature_scaler.apply(&test.features)?;
    let y_train = target_scaler.apply_column(&train.targets)?;
    let y_test = target_scaler.apply_column(&test.targets)?;

    let fit = match config.model {
        ModelKind::Qnn { depth, width } => fit_qnn(
            config,
            dataset.n_attributes(),
            depth,
            width,
            (&x_train, &y_train),
            &x_test,
        )?,
        ModelKind::MlpRegularized | ModelKind::MlpUnregularized => {
            fit_mlp(config, (&x_train, &y_train), &x_test)?
        }
    };

    let train_r2 = r_squared(&y_train, &fit.train_pred)?;
    let test_r2 = r_squared(&y_test, &fit.test_pred)?;
    let train_rmse = rmse(
        &train.targets,
        &target_scaler.invert_target(&fit.train_pred)?,
    );
    let test_rmse = rmse(&test.targets, &target_scaler.invert_target(&fit.test_pred)?);
    let report = RunReport {
        config: config.clone(),
        n_train: train.len(),
        n_test: test.len(),
        n_params: fit.n_params,
        train_r2,
        test_r2,
        train_rmse,
        test_rmse,
        final_cost: fit.final_cost,
        wall_seconds: started.elapsed().as_secs_f64(),
        iterations: fit.iterations,
        cost_evaluations: fit.cost_evaluations,
        axis_restrictions: fit.axis_restrictions,
        converged: fit.converged,
        cost_history: fit.cost_history,
        lambda: fit.l2_selection.as_ref().map(|s| s.best),
        l2_selection: fit.l2_selection,
        feature_scaler,
        target_scaler,
    };
    Ok((report, fit.model))
}

fn fit_qnn(
    config: &RunConfig,
    n_attributes: usize,
    depth: usize,
    width: usize,
    (x_train, y_train): (&[Vec<f64>], &[f64]),
    x_test: &[Vec<f64>],
) -> Result<Fit> {
    let mut model = QnnModel::build(n_attributes, width, depth, config.init_seed())?;
    let mut cost = QnnCost::new(&model, x_train, y_train)?;
    let result = optim::powell_minimize(&mut cost, model.params(), &config.options.powell)?;
    model.set_params(result.best_params)?;
    Ok(Fit {
        train_pred: model.predict_batch(x_train)?,
        test_pred: model.predict_batch(x_test)?,
        n_params: model.n_params(),
        final_cost: result.best_cost,
        iterations: result.iterations,
        cost_evaluations: result.cost_evaluations,
        axis_restrictions: result.axis_restrictions,
        converged: Some(result.converged),
        cost_history: result.history,
        l2_selection: None,
        model: TrainedModel::Qnn(model),
    })
}

fn fit_mlp(
    config: &RunConfig,
    (x_train, y_train): (&[Vec<f64>], &[f64]),
    x_test: &[Vec<f64>],
) -> Result<Fit> {
    let options = &config.options;
    if options.layer_sizes.first() != x_train.first().map(Vec::len).as_ref() {
        return Err(Error::argument(format!(
            "MLP input width {:?} does not match {} features",
            options.layer_sizes.first(),
            x_train.first().map_or(0, Vec::len)
        )));
    }
    let start = mlp::init_mlp(&options.layer_sizes, config.init_seed())?;
    let mut fits = 1;
    let l2_selection = match config.model {
        ModelKind::MlpRegularized => {
            fits += options.l2_grid.len();
            Some(mlp::select_l2_weight(
                x_train,
                y_train,
                &options.l2_grid,
                config.validation_seed(),
                config.init_seed(),
                &options.layer_sizes,
                &options.adam,
            )?)
        }
        _ => None,
    };
    let adam = AdamConfig {
        l2_weight: l2_selection.as_ref().map_or(0.0, |s| s.best),
        ..options.adam.clone()
    };
    let inputs = mlp::rows_to_matrix(x_train)?;
    let targets = Array1::from(y_train.to_vec());
    let (model, history) = mlp::train_mlp(&start, &inputs, &targets, &adam)?;
    let (final_cost, _) = model.loss_and_gradients(&inputs, targets.view(), adam.l2_weight)?;
    let mut cost_history: Vec<f64> = history.losses.iter().step_by(100).copied().collect();
    cost_history.push(final_cost);
    Ok(Fit {
        train_pred: model.predict_rows(x_train)?,
        test_pred: model.predict_rows(x_test)?,
        n_params: model.n_params(),
        final_cost,
        iterations: adam.epochs,
        cost_evaluations: fits * adam.epochs,
        axis_restrictions: 0,
        converged: None,
        cost_history,
        l2_selection,
        model: TrainedModel::Mlp(model),
    })
}

/// Fractions × models × seeds, all sharing one set of training options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub fractions: Vec<TrainFraction>,
    pub models: Vec<ModelKind>,
    pub seeds: Vec<u64>,
    pub options: TrainingOptions,
}

impl Default for GridSpec {
    /// Fractions 1/5, 2/5, 4/5; QNN d ∈ {3, 6, 12} × w ∈ {1, 2} plus both MLP variants;
    /// seeds 0..5.
    fn default() -> Self {
        let mut models = Vec::new();
        for width in [1, 2] {
            for depth in [3, 6, 12] {
                models.push(ModelKind::Qnn { depth, width });
            }
        }
        models.push(ModelKind::MlpRegularized);
        models.push(ModelKind::MlpUnregularized);
        Self {
            fractions: vec![
                TrainFraction::ONE_FIFTH,
                TrainFraction::TWO_FIFTHS,
                TrainFraction::FOUR_FIFTHS,
            ],
            models,
            seeds: (0..5).collect(),
            options: TrainingOptions::default(),
        }
    }
}

impl GridSpec {
    /// Every cell, fraction-major, then model, then seed.
    pub fn configs(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &train_fraction in &self.fractions {
            for &model in &self.models {
                for &seed in &self.seeds {
                    out.push(RunConfig {
                        model,
                        train_fraction,
                        seed,
                        options: self.options.clone(),
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub config: RunConfig,
    pub report: Option<RunReport>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Some(Stats {
            mean: sorted.iter().sum::<f64>() / n as f64,
            median,
            min: sorted[0],
            max: sorted[n - 1],
        })
    }
}

/// Aggregates over the seeds of one (fraction, model) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model: ModelKind,
    pub train_fraction: TrainFraction,
    pub n_train: Option<usize>,
    pub completed: usize,
    pub failed: usize,
    pub train_r2: Option<Stats>,
    pub test_r2: Option<Stats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub runs: Vec<CellOutcome>,
    pub summaries: Vec<CellSummary>,
}

impl ExperimentTable {
    pub fn from_runs(runs: Vec<CellOutcome>) -> Self {
        let summaries = summarize(&runs);
        Self { runs, summaries }
    }

    pub fn reports(&self) -> impl Iterator<Item = &RunReport> {
        self.runs.iter().filter_map(|r| r.report.as_ref())
    }

    pub fn summary(&self, model: ModelKind, fraction: TrainFraction) -> Option<&CellSummary> {
        self.summaries
            .iter()
            .find(|s| s.model == model && s.train_fraction == fraction)
    }

    /// Reports of one cell in seed order.
    pub fn cell_reports(&self, model: ModelKind, fraction: TrainFraction) -> Vec<&RunReport> {
        self.reports()
            .filter(|r| r.config.model == model && r.config.train_fraction == fraction)
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn summarize(runs: &[CellOutcome]) -> Vec<CellSummary> {
    let mut keys: Vec<(TrainFraction, ModelKind)> = Vec::new();
    for run in runs {
        let key = (run.config.train_fraction, run.config.model);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(fraction, model)| {
            let cell: Vec<&CellOutcome> = runs
                .iter()
                .filter(|r| r.config.train_fraction == fraction && r.config.model == model)
                .collect();
            let reports: Vec<&RunReport> = cell.iter().filter_map(|r| r.report.as_ref()).collect();
            let train: Vec<f64> = reports.iter().map(|r| r.train_r2).collect();
            let test: Vec<f64> = reports.iter().map(|r| r.test_r2).collect();
            CellSummary {
                model,
                train_fraction: fraction,
                n_train: reports.first().map(|r| r.n_train),
                completed: reports.len(),
                failed: cell.len() - reports.len(),
                train_r2: Stats::of(&train),
                test_r2: Stats::of(&test),
            }
        })
        .collect()
}

/// Rough relative cost of a run, used to start the slowest cells first.
fn cost_estimate(config: &RunConfig, n_rows: usize, n_attributes: usize) -> f64 {
    let n_train = config.train_fraction.train_size(n_rows) as f64;
    match config.model {
        ModelKind::Qnn { depth, width } => {
            let qubits = (n_attributes * width) as f64;
            let n_params = qubits * depth as f64;
            n_params * n_train * depth as f64 * qubits * 2f64.powf(qubits)
        }
        ModelKind::MlpRegularized => 6.0 * n_train * 1e7,
        ModelKind::MlpUnregularized => n_train * 1e7,
    }
}

/// Runs every cell of `spec`, in parallel on `workers` threads (all cores when `None`).
///
/// A cell that errors or panics is recorded as failed; the grid fails only when no cell
/// succeeds. Results are ordered as [`GridSpec::configs`].
pub fn run_grid(
    spec: &GridSpec,
    dataset: &Dataset,
    workers: Option<usize>,
) -> Result<ExperimentTable> {
    let configs = spec.configs();
    if configs.is_empty() {
        return Err(Error::Grid("the grid has no cells".into()));
    }
    let mut order: Vec<usize> = (0..configs.len()).collect();
    let estimates: Vec<f64> = configs
        .iter()
        .map(|c| cost_estimate(c, dataset.len(), dataset.n_attributes()))
        .collect();
    order.sort_by(|&a, &b| estimates[b].total_cmp(&estimates[a]).then(a.cmp(&b)));

    let run_all = || -> Vec<(usize, CellOutcome)> {
        order
            .par_iter()
            .with_max_len(1)
            .map(|&i| {
                let config = &configs[i];
                let outcome = panic::catch_unwind(AssertUnwindSafe(|| run_single(config, dataset)));
                let (report, error) = match outcome {
                    Ok(Ok(report)) => {
                        log::info!(
                            "{} fraction {} seed {}: train R² {:.4}, test R² {:.4} in {:.1}s",
                            config.model,
                            config.train_fraction,
                            config.seed,
                            report.train_r2,
                            report.test_r2,
                            report.wall_seconds
                        );
                        (Some(report), None)
                    }
                    Ok(Err(e)) => (None, Some(e.to_string())),
                    Err(payload) => (None, Some(panic_message(payload.as_ref()))),
                };
                if let Some(e) = &error {
                    log::warn!("cell failed: {e}");
                }
                (
                    i,
                    CellOutcome {
                        config: config.clone(),
                        report,
                        error,
                    },
                )
            })
            .collect()
    };
    let mut finished = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::argument(format!("cannot start {n} workers: {e}")))?
            .install(run_all),
        None => run_all(),
    };
    finished.sort_by_key(|(i, _)| *i);
    let runs: Vec<CellOutcome> = finished.into_iter().map(|(_, o)| o).collect();
    if runs.iter().all(|r| r.report.is_none()) {
        let first = runs[0].error.clone().unwrap_or_default();
        return Err(Error::Grid(format!(
            "all {} cells failed; first error: {first}",
            runs.len()
        )));
    }
    Ok(ExperimentTable::from_runs(runs))
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::argument(format!("unknown report format `{other}`"))),
        }
    }
}

pub const CSV_HEADER: &str = "model,d,w,fraction,seed,train_r2,test_r2,wall_seconds,lambda";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One line per cell; metric fields are empty for failed cells.
pub fn to_csv(table: &ExperimentTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for run in &table.runs {
        let c = &run.config;
        let r = run.report.as_ref();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c.model.family(),
            opt(c.model.depth()),
            opt(c.model.width()),
            c.train_fraction,
            c.seed,
            opt(r.map(|r| r.train_r2)),
            opt(r.map(|r| r.test_r2)),
            opt(r.map(|r| r.wall_seconds)),
            opt(r.and_then(|r| r.lambda)),
        ));
    }
    out
}

pub fn render_report(table: &ExperimentTable, format: ReportFormat) -> Result<String> {
    if table.runs.is_empty() {
        return Err(Error::argument("cannot emit an empty table"));
    }
    match format {
        ReportFormat::Json => table.to_json(),
        ReportFormat::Csv => Ok(to_csv(table)),
    }
}

pub fn emit_report(table: &ExperimentTable, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(table, format)?;
    fs::write(path, text).map_err(|e| Error::from(e).context(format!("writing {}", path.display())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    TrainR2,
    TestR2,
}

/// R² against training size, one block of rows per model: the data behind a
/// metric-versus-data-size plot.
pub fn plot_data_csv(table: &ExperimentTable, metric: Metric) -> String {
    let mut out = String::from("model,fraction,n_train,median,mean,min,max,seeds\n");
    let mut models: Vec<ModelKind> = Vec::new();
    for s in &table.summaries {
        if !models.contains(&s.model) {
            models.push(s.model);
        }
    }
    for model in models {
        let mut cells: Vec<&CellSummary> = table
            .summaries
            .iter()
            .filter(|s| s.model == model)
            .collect();
        cells.sort_by(|a, b| {
            a.train_fraction
                .value()
                .total_cmp(&b.train_fraction.value())
        });
        for s in cells {
            let stats = match metric {
                Metric::TrainR2 => s.train_r2,
                Metric::TestR2 => s.test_r2,
            };
            let Some(st) = stats else { continue };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                model,
                s.train_fraction,
                opt(s.n_train),
                st.median,
                st.mean,
                st.min,
                st.max,
                s.completed
            ));
        }
    }
    out
}

/// Writes `train_r2_vs_fraction.csv` and `test_r2_vs_fraction.csv` into `dir`.
pub fn emit_plot_data(table: &ExperimentTable, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, metric) in [
        ("train_r2_vs_fraction.csv", Metric::TrainR2),
        ("test_r2_vs_fraction.csv", Metric::TestR2),
    ] {
        let path = dir.join(name);
        fs::write(&path, plot_data_csv(table, metric))
            .map_err(|e| Error::from(e).context(format!("writing {}", path.display())))?;
    }
    Ok(())
}

/// Fixed-width text table of median R² per cell, with per-seed values.
pub fn summary_text(table: &ExperimentTable) -> String {
    let mut out = format!(
        "{:<20} {:>8} {:>7} {:>10} {:>10}  per-seed test R²\n",
        "model", "fraction", "n_train", "train R²", "test R²"
    );
    for s in &table.summaries {
        let med = |st: Option<Stats>| st.map_or("-".to_string(), |st| format!("{:.4}", st.median));
        let seeds: Vec<String> = table
            .cell_reports(s.model, s.train_fraction)
            .iter()
            .map(|r| format!("{}:{:.4}", r.config.seed, r.test_r2))
            .collect();
        out.push_str(&format!(
            "{:<20} {:>8} {:>7} {:>10} {:>10}  {}{}\n",
            s.model.to_string(),
            s.train_fraction.to_string(),
            opt(s.n_train),
            med(s.train_r2),
            med(s.test_r2),
            seeds.join(" "),
            if s.failed > 0 {
                format!(" ({} failed)", s.failed)
            } else {
                String::new()
            }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_squared_examples() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        assert!(r_squared(&y, &[2.0, 2.0, 2.0]).unwrap().abs() < 1e-15);
        assert!((r_squared(&y, &[1.0, 2.0, 4.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            r_squared(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(r_squared(&[1.0], &[1.0]).is_err());
        assert!(r_squared(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn model_kind_labels_round_trip() {
        for kind in GridSpec::default().models {
            assert_eq!(kind.to_string().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("qnn-d0-w1".parse::<ModelKind>().is_err());
        assert!("qnn-d3-w3".parse::<ModelKind>().is_err());
        assert!("svm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn default_grid_shape() {
        let spec = GridSpec::default();
        assert_eq!(spec.models.len(), 8);
        assert_eq!(spec.configs().len(), 3 * 8 * 5);
    }

    #[test]
    fn stats_median() {
        let s = Stats::of(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((s.median, s.min, s.max, s.mean), (2.0, 1.0, 3.0, 2.0));
        assert_eq!(Stats::of(&[1.0, 2.0, 4.0, 3.0]).unwrap().median, 2.5);
        assert!(Stats::of(&[]).is_none());
    }

    #[test]
    fn derived_seeds_differ_by_stream() {
        let c = RunConfig::new(ModelKind::MlpRegularized, TrainFraction::ONE_FIFTH, 7);
        assert_ne!(c.init_seed(), c.validation_seed());
        assert_ne!(c.init_seed(), c.seed);
    }
}
