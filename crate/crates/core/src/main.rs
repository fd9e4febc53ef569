use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use obliquebart::bench::{run_bench, BenchMode, BenchSpec};
use obliquebart::data::{load_csv, read_headers, standardize, CsvSchema, Task};
use obliquebart::ensemble::RuleMode;
use obliquebart::model::{fit, FitSpec, PosteriorSamples};
use obliquebart::synthetic::{generate, SyntheticFn, SyntheticSpec};

#[derive(Parser)]
#[command(name = "obliquebart", version, about = "Oblique Bayesian additive regression trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-predictor dataset as CSV.
    Simulate(SimulateArgs),
    /// Fit a model to a CSV file.
    Fit(FitArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Compare rule modes over repeated train/test splits.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// rotated-axes or sinusoid
    #[arg(long = "fn")]
    function: SyntheticFn,
    /// Rotation angle (rotated-axes) or amplitude (sinusoid).
    #[arg(long)]
    theta: f64,
    #[arg(long, default_value_t = 4.0)]
    delta: f64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ColumnArgs {
    #[arg(long, default_value = "y")]
    outcome: String,
    /// Comma-separated categorical columns.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// Comma-separated columns to skip.
    #[arg(long, value_delimiter = ',')]
    ignore: Vec<String>,
}

impl ColumnArgs {
    fn schema(&self) -> CsvSchema {
        CsvSchema {
            outcome: Some(self.outcome.clone()),
            categorical: self.categorical.clone(),
            ignore: self.ignore.clone(),
        }
    }
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value = "regression")]
    task: Task,
    /// Number of trees.
    #[arg(long)]
    trees: Option<usize>,
    /// Burn-in sweeps.
    #[arg(long)]
    burn: Option<usize>,
    /// Kept sweeps per chain.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 50 trees, 500 burn-in and 500 kept sweeps unless overridden.
    #[arg(long)]
    fast: bool,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    a_theta: Option<f64>,
    #[arg(long)]
    b_theta: Option<f64>,
    #[arg(long)]
    prob_categorical: Option<f64>,
}

impl BudgetArgs {
    fn spec(&self, mode: RuleMode) -> FitSpec {
        let base = if self.fast {
            FitSpec::fast(self.task, mode, self.seed)
        } else {
            FitSpec {
                task: self.task,
                mode,
                seed: self.seed,
                ..FitSpec::default()
            }
        };
        FitSpec {
            num_trees: self.trees.unwrap_or(base.num_trees),
            burn: self.burn.unwrap_or(base.burn),
            kept: self.iters.unwrap_or(base.kept),
            chains: self.chains,
            alpha: self.alpha.unwrap_or(base.alpha),
            beta: self.beta.unwrap_or(base.beta),
            nu: self.nu.unwrap_or(base.nu),
            q: self.q.unwrap_or(base.q),
            k: self.k.unwrap_or(base.k),
            a_theta: self.a_theta,
            b_theta: self.b_theta,
            prob_categorical: self.prob_categorical,
            ..base
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "oblique")]
    mode: RuleMode,
    #[command(flatten)]
    columns: ColumnArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Diagnostics CSV; defaults to `<out>.diagnostics.csv`.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Predictions CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    columns: ColumnArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    #[arg(long, default_value_t = 20)]
    splits: usize,
    #[arg(long, default_value_t = 0.75)]
    fraction: f64,
    /// Comma-separated: oblique, axis, rotation:R
    #[arg(long, value_delimiter = ',', default_value = "oblique,axis")]
    modes: Vec<BenchMode>,
    /// Maximum concurrent fits.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Results table; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let data = generate(&SyntheticSpec {
        function: args.function,
        theta_param: args.theta,
        delta: args.delta,
        n: args.n,
        seed: args.seed,
    })?;
    emit(args.out.as_deref(), &data.table.to_csv()?)
}

fn fit_cmd(args: &FitArgs) -> Result<()> {
    let raw = load_csv(&args.data, &args.columns.schema())?;
    let spec = args.budget.spec(args.mode);
    let (data, scaler) = standardize::<f64>(&raw, spec.task)?;
    let post = fit(&data, &scaler, &spec)?;
    post.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let diag_path = args.diagnostics.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".diagnostics.csv");
        p.into()
    });
    std::fs::write(&diag_path, post.diagnostics_csv()).with_context(|| format!("writing {}", diag_path.display()))?;
    Ok(())
}

fn predict_cmd(args: &PredictArgs) -> Result<()> {
    let post = PosteriorSamples::<f64>::load(&args.model)
        .with_context(|| format!("reading model {}", args.model.display()))?;
    let scaler = &post.scaler;
    // Columns the model was not trained on (including the outcome) are skipped.
    let headers = read_headers(&args.data)?;
    let known = |h: &String| scaler.cont_names.contains(h) || scaler.cat_names.contains(h);
    let schema = CsvSchema {
        outcome: None,
        categorical: scaler.cat_names.clone(),
        ignore: headers.iter().filter(|h| !known(h)).cloned().collect(),
    };
    let raw = load_csv(&args.data, &schema)?;
    let design = scaler.transform::<f64>(&raw)?.design;
    let preds = post.predict(&design)?;
    let classification = post.task() == Task::Classification;
    let mut out = String::from("row,mean,lo2.5,hi97.5");
    out.push_str(if classification { ",prob,label\n" } else { "\n" });
    for (i, p) in preds.iter().enumerate() {
        let _ = write!(out, "{i},{},{},{}", p.mean, p.lo, p.hi);
        if let (Some(prob), Some(label)) = (p.prob, p.label) {
            let _ = write!(out, ",{prob},{label}");
        }
        out.push('\n');
    }
    emit(args.out.as_deref(), &out)
}

fn bench_cmd(args: &BenchArgs) -> Result<()> {
    if args.modes.is_empty() {
        bail!("at least one mode is required");
    }
    let raw = load_csv(&args.data, &args.columns.schema())?;
    let spec = BenchSpec {
        splits: args.splits,
        fraction: args.fraction,
        seed: args.budget.seed,
        modes: args.modes.clone(),
        fit: args.budget.spec(RuleMode::Oblique),
        jobs: args.jobs,
    };
    let report = run_bench(&raw, &spec)?;
    emit(args.out.as_deref(), &report.to_table())
}

fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Bench(a) => bench_cmd(a),
    };
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
