use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qnn_regress::data::{self, Dataset, TrainFraction};
use qnn_regress::harness::{
    self, ExperimentTable, GridSpec, ModelKind, ReportFormat, RunConfig, TrainingOptions,
};
use qnn_regress::mlp;
use qnn_regress::Result;

/// Quantum-circuit and MLP regression experiments on Auto-MPG.
#[derive(Parser)]
#[command(name = "qnn-regress", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a dataset and print row counts, column ranges and split sizes.
    DataInspect {
        #[command(flatten)]
        data: DataArg,
    },
    /// Train one QNN and report train/test R².
    TrainQnn {
        #[command(flatten)]
        data: DataArg,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        width: usize,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        powell: PowellArgs,
    },
    /// Train one MLP (L2 weight chosen on a validation split unless --no-l2).
    TrainMlp {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        no_l2: bool,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        adam: AdamArgs,
    },
    /// Run a grid of fractions × models × seeds.
    Experiment {
        #[command(flatten)]
        data: DataArg,
        /// Comma-separated training fractions.
        #[arg(long, value_delimiter = ',', default_values_t = [TrainFraction::ONE_FIFTH, TrainFraction::TWO_FIFTHS, TrainFraction::FOUR_FIFTHS])]
        train_frac: Vec<TrainFraction>,
        /// Comma-separated models such as qnn-d3-w1, mlp-regularized, mlp-unregularized.
        /// Defaults to QNN d ∈ {3, 6, 12} × w ∈ {1, 2} plus both MLPs.
        #[arg(long, value_delimiter = ',')]
        models: Vec<ModelKind>,
        #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
        seeds: Vec<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        /// Directory for the R²-versus-fraction plot data.
        #[arg(long)]
        plot_dir: Option<PathBuf>,
        #[command(flatten)]
        powell: PowellArgs,
        #[command(flatten)]
        adam: AdamArgs,
    },
    /// Re-emit a saved JSON experiment table.
    Report {
        /// JSON table written by `experiment`.
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// json, csv, or omit for a text summary.
        #[arg(long)]
        format: Option<ReportFormat>,
        #[arg(long)]
        plot_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DataArg {
    /// UCI auto-mpg.data file, or a numeric CSV whose last column is the target.
    /// Defaults to the bundled Auto-MPG copy.
    #[arg(long)]
    data: Option<PathBuf>,
}

impl DataArg {
    fn load(&self) -> Result<Dataset> {
        match &self.data {
            Some(path) => data::load_path(path),
            None => data::load_auto_mpg(data::BUNDLED_AUTO_MPG),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = TrainFraction::ONE_FIFTH)]
    train_frac: TrainFraction,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Save the trained model as JSON.
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Write the run report as JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PowellArgs {
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    cost_tolerance: f64,
    #[arg(long, default_value_t = 1e-6)]
    line_tolerance: f64,
    #[arg(long, default_value_t = 5_000)]
    max_evaluations: usize,
}

#[derive(Args)]
struct AdamArgs {
    #[arg(long, default_value_t = 10_000)]
    epochs: usize,
    #[arg(long, default_value_t = 0.02)]
    learning_rate: f64,
    /// Candidate L2 weights for the validation search.
    #[arg(long, value_delimiter = ',', default_values_t = mlp::DEFAULT_L2_GRID)]
    l2_grid: Vec<f64>,
}

impl PowellArgs {
    fn apply(&self, options: &mut TrainingOptions) {
        options.powell.max_iterations = self.max_iterations;
        options.powell.cost_tolerance = self.cost_tolerance;
        options.powell.line_tolerance = self.line_tolerance;
        options.powell.max_cost_evaluations = self.max_evaluations;
    }
}

impl AdamArgs {
    fn apply(&self, options: &mut TrainingOptions) {
        options.adam.epochs = self.epochs;
        options.adam.learning_rate = self.learning_rate;
        options.l2_grid = self.l2_grid.clone();
    }
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            qnn_regress::Error::from(e).context(format!("writing {}", path.display()))
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn inspect(dataset: &Dataset) {
    println!("rows: {}", dataset.len());
    println!(
        "{:<14} {:>10} {:>10} {:>10}",
        "column", "min", "mean", "max"
    );
    let columns = dataset.feature_names.iter().enumerate().map(|(j, name)| {
        let values: Vec<f64> = dataset.features.iter().map(|r| r[j]).collect();
        (name.clone(), values)
    });
    let target = std::iter::once(("target".to_string(), dataset.targets.clone()));
    for (name, values) in columns.chain(target) {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        println!("{name:<14} {min:>10.3} {mean:>10.3} {max:>10.3}");
    }
    for f in [
        TrainFraction::ONE_FIFTH,
        TrainFraction::TWO_FIFTHS,
        TrainFraction::FOUR_FIFTHS,
    ] {
        let n = f.train_size(dataset.len());
        println!("fraction {f}: {n} train / {} test", dataset.len() - n);
    }
}

fn train_one(config: RunConfig, dataset: &Dataset, run: &RunArgs) -> Result<()> {
    let (report, model) = harness::run_single_with_model(&config, dataset)?;
    eprintln!(
        "{} fraction {} seed {}: {} train / {} test rows, train R² {:.4}, test R² {:.4}, {:.1}s",
        config.model,
        config.train_fraction,
        config.seed,
        report.n_train,
        report.n_test,
        report.train_r2,
        report.test_r2,
        report.wall_seconds
    );
    if let Some(path) = &run.model_out {
        model.save(path)?;
    }
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_or_print(&text, run.out.as_deref())
}

fn emit(
    table: &ExperimentTable,
    format: Option<ReportFormat>,
    out: Option<&Path>,
    plot_dir: Option<&Path>,
) -> Result<()> {
    if let Some(dir) = plot_dir {
        harness::emit_plot_data(table, dir)?;
    }
    match (format, out) {
        (Some(format), Some(path)) => harness::emit_report(table, format, path)?,
        (Some(format), None) => print!("{}", harness::render_report(table, format)?),
        (None, out) => write_or_print(&harness::summary_text(table), out)?,
    }
    if out.is_some() {
        eprint!("{}", harness::summary_text(table));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::DataInspect { data } => inspect(&data.load()?),
        Command::TrainQnn {
            data,
            depth,
            width,
            run,
            powell,
        } => {
            let mut config =
                RunConfig::new(ModelKind::Qnn { depth, width }, run.train_frac, run.seed);
            powell.apply(&mut config.options);
            train_one(config, &data.load()?, &run)?;
        }
        Command::TrainMlp {
            data,
            no_l2,
            run,
            adam,
        } => {
            let kind = if no_l2 {
                ModelKind::MlpUnregularized
            } else {
                ModelKind::MlpRegularized
            };
            let mut config = RunConfig::new(kind, run.train_frac, run.seed);
            adam.apply(&mut config.options);
            train_one(config, &data.load()?, &run)?;
        }
        Command::Experiment {
            data,
            train_frac,
            models,
            seeds,
            workers,
            out,
            format,
            plot_dir,
            powell,
            adam,
        } => {
            let mut spec = GridSpec {
                fractions: train_frac,
                seeds,
                ..GridSpec::default()
            };
            if !models.is_empty() {
                spec.models = models;
            }
            powell.apply(&mut spec.options);
            adam.apply(&mut spec.options);
            let table = harness::run_grid(&spec, &data.load()?, workers)?;
            emit(&table, Some(format), out.as_deref(), plot_dir.as_deref())?;
        }
        Command::Report {
            input,
            out,
            format,
            plot_dir,
        } => {
            let text = std::fs::read_to_string(&input).map_err(|e| {
                qnn_regress::Error::from(e).context(format!("reading {}", input.display()))
            })?;
            let table = ExperimentTable::from_json(&text)?;
            emit(&table, format, out.as_deref(), plot_dir.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
