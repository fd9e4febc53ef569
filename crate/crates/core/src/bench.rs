//! Repeated train/test comparison of rule modes on one dataset.

use std::fmt;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::data::{Dataset, RawTable, Standardizer, Task};
use crate::ensemble::RuleMode;
use crate::error::{Error, Result};
use crate::metrics::{accuracy, paired_one_sided_t, smse};
use crate::model::{fit, FitSpec};
use crate::rotation::{RandomRotation, RotationSpec};
use crate::sampler::mix_seed;

pub const BENCH_HEADER: &str = "split,mode,metric,value,seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    Oblique,
    Axis,
    /// Axis-aligned fit on `R` randomly rotated copies of the continuous predictors.
    Rotation(usize),
}

impl fmt::Display for BenchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Oblique => f.write_str("oblique"),
            Self::Axis => f.write_str("axis"),
            Self::Rotation(r) => write!(f, "rotation:{r}"),
        }
    }
}

impl std::str::FromStr for BenchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oblique" => Ok(Self::Oblique),
            "axis" => Ok(Self::Axis),
            _ => s
                .strip_prefix("rotation:")
                .and_then(|r| r.parse().ok())
                .filter(|&r| r > 0)
                .map(Self::Rotation)
                .ok_or_else(|| Error::Config(format!("unknown bench mode '{s}' (oblique, axis, rotation:R)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub splits: usize,
    pub fraction: f64,
    pub seed: u64,
    pub modes: Vec<BenchMode>,
    /// Task, budget and priors; its seed and mode are set per job.
    pub fit: FitSpec,
    /// Maximum number of fits running at once.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub split: usize,
    pub mode: BenchMode,
    pub metric: &'static str,
    pub value: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub metric: &'static str,
}

impl BenchReport {
    fn values(&self, mode: BenchMode) -> Vec<f64> {
        self.rows.iter().filter(|r| r.mode == mode).map(|r| r.value).collect()
    }

    fn modes(&self) -> Vec<BenchMode> {
        let mut modes: Vec<BenchMode> = Vec::new();
        for r in &self.rows {
            if !modes.contains(&r.mode) {
                modes.push(r.mode);
            }
        }
        modes
    }

    /// Per-split rows, then `mean` rows per mode and, when oblique was run
    /// over at least two splits, `p_value` rows for the one-sided paired test
    /// that oblique's error is lower than each other mode's.
    pub fn to_table(&self) -> String {
        let mut out = format!("{BENCH_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{:.3}", r.split, r.mode, r.metric, r.value, r.seconds);
        }
        for mode in self.modes() {
            let vals = self.values(mode);
            let secs: f64 = self.rows.iter().filter(|r| r.mode == mode).map(|r| r.seconds).sum();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let _ = writeln!(out, "mean,{mode},{},{mean},{secs:.3}", self.metric);
        }
        let oblique = self.values(BenchMode::Oblique);
        if oblique.len() >= 2 {
            // Accuracy is turned into an error rate so that lower is better.
            let to_error = |v: Vec<f64>| -> Vec<f64> {
                if self.metric == "accuracy" {
                    v.into_iter().map(|a| 1.0 - a).collect()
                } else {
                    v
                }
            };
            let ob = to_error(oblique);
            for mode in self.modes().into_iter().filter(|&m| m != BenchMode::Oblique) {
                let other = to_error(self.values(mode));
                if let Ok(test) = paired_one_sided_t(&ob, &other) {
                    let tag = if test.degenerate { "p_value_degenerate" } else { "p_value" };
                    let _ = writeln!(out, "{tag},{mode},{},{},", self.metric, test.p_value);
                }
            }
        }
        out
    }
}

struct PreparedSplit {
    train: Dataset<f64>,
    test: Dataset<f64>,
    scaler: Standardizer,
    y_test: Vec<f64>,
    y_train_mean: f64,
    seed: u64,
}

fn prepare(raw: &RawTable, spec: &BenchSpec, split: usize) -> Result<PreparedSplit> {
    let seed = mix_seed(spec.seed, split as u64);
    let (train_raw, test_raw) = raw.split(spec.fraction, seed)?;
    let scaler = Standardizer::fit(&train_raw, spec.fit.task)?;
    let train = scaler.transform(&train_raw)?;
    let test = scaler.transform(&test_raw)?;
    let y_train = train_raw.outcome.as_ref().ok_or_else(|| Error::Data("bench data needs an outcome column".into()))?;
    Ok(PreparedSplit {
        y_train_mean: y_train.iter().sum::<f64>() / y_train.len() as f64,
        y_test: test_raw.outcome.clone().unwrap_or_default(),
        train,
        test,
        scaler,
        seed,
    })
}

fn run_job(split: &PreparedSplit, mode: BenchMode, base: &FitSpec) -> Result<f64> {
    let mut spec = base.clone();
    spec.seed = split.seed;
    spec.mode = match mode {
        BenchMode::Oblique => RuleMode::Oblique,
        BenchMode::Axis | BenchMode::Rotation(_) => RuleMode::AxisAligned,
    };
    let (train, test, scaler) = match mode {
        BenchMode::Rotation(r) => {
            let rot = RandomRotation::fit(&RotationSpec { r, seed: split.seed }, &split.train.design)?;
            let mut scaler = split.scaler.clone();
            let width = r * scaler.cont_names.len();
            scaler.cont_names = (0..width).map(|j| format!("rot{j}")).collect();
            scaler.ranges = vec![(-1.0, 1.0); width];
            let train = Dataset {
                design: rot.transform(&split.train.design)?,
                outcome: split.train.outcome.clone(),
            };
            let test = Dataset {
                design: rot.transform(&split.test.design)?,
                outcome: split.test.outcome.clone(),
            };
            (train, test, scaler)
        }
        _ => (split.train.clone(), split.test.clone(), split.scaler.clone()),
    };
    let post = fit(&train, &scaler, &spec)?;
    let preds = post.predict(&test.design)?;
    match spec.task {
        Task::Regression => {
            let means: Vec<f64> = preds.iter().map(|p| p.mean).collect();
            smse(&split.y_test, &means, split.y_train_mean)
        }
        Task::Classification => {
            let y: Vec<u8> = split.y_test.iter().map(|&v| u8::from(v > 0.5)).collect();
            let labels: Vec<u8> = preds.iter().map(|p| p.label.unwrap_or(0)).collect();
            accuracy(&y, &labels)
        }
    }
}

pub fn run_bench(raw: &RawTable, spec: &BenchSpec) -> Result<BenchReport> {
    if spec.splits == 0 || spec.modes.is_empty() {
        return Err(Error::Config("bench needs at least one split and one mode".into()));
    }
    if raw.cont_names.is_empty() && spec.modes.iter().any(|m| matches!(m, BenchMode::Rotation(_))) {
        return Err(Error::Config("rotation mode needs continuous predictors".into()));
    }
    spec.fit.validate()?;
    let prepared = (0..spec.splits).map(|s| prepare(raw, spec, s)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, BenchMode)> = (0..spec.splits)
        .flat_map(|s| spec.modes.iter().map(move |&m| (s, m)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, mode)| {
                let start = Instant::now();
                let value = run_job(&prepared[s], mode, &spec.fit)?;
                Ok(BenchRow {
                    split: s,
                    mode,
                    metric: metric_name(spec.fit.task),
                    value,
                    seconds: start.elapsed().as_secs_f64(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(BenchReport {
        rows: results,
        metric: metric_name(spec.fit.task),
    })
}

fn metric_name(task: Task) -> &'static str {
    match task {
        Task::Regression => "smse",
        Task::Classification => "accuracy",
    }
}
