//! Two-dimensional synthetic regression problems with a jump of height
//! `2 * delta` across a decision boundary.
//!
//! Predictors are uniform on `[-1, 1]^2` and the noise sd is 1.

use std::f64::consts::FRAC_PI_4;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::RawTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticFn {
    /// Quadrant sign pattern after rotating the inputs counter-clockwise.
    RotatedAxes,
    /// Boundary `x2 = amplitude * sin(10 x1)`.
    Sinusoid,
}

impl std::str::FromStr for SyntheticFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rotated-axes" | "rotated_axes" => Ok(Self::RotatedAxes),
            "sinusoid" => Ok(Self::Sinusoid),
            other => Err(Error::Config(format!("unknown synthetic function '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub function: SyntheticFn,
    /// Rotation angle in `[0, pi/4]` or sinusoid amplitude in `[0, 1]`.
    pub theta_param: f64,
    pub delta: f64,
    pub n: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        const SLACK: f64 = 1e-9;
        let upper = match self.function {
            SyntheticFn::RotatedAxes => FRAC_PI_4,
            SyntheticFn::Sinusoid => 1.0,
        };
        if !(self.theta_param >= -SLACK && self.theta_param <= upper + SLACK) {
            return Err(Error::Config(format!(
                "theta must lie in [0, {upper}] for {:?}, got {}",
                self.function, self.theta_param
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        Ok(())
    }

    pub fn mean_function(&self, x: [f64; 2]) -> f64 {
        match self.function {
            SyntheticFn::RotatedAxes => rotated_axes(x, self.theta_param, self.delta),
            SyntheticFn::Sinusoid => sinusoid(x, self.theta_param, self.delta),
        }
    }
}

/// `delta * (2 * 1{u1 u2 > 0} - 1)` with `u` the input rotated by `theta`.
pub fn rotated_axes(x: [f64; 2], theta: f64, delta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let u1 = c * x[0] - s * x[1];
    let u2 = s * x[0] + c * x[1];
    if u1 * u2 > 0.0 {
        delta
    } else {
        -delta
    }
}

/// `delta * (2 * 1{x2 > amplitude * sin(10 x1)} - 1)`.
pub fn sinusoid(x: [f64; 2], amplitude: f64, delta: f64) -> f64 {
    if x[1] > amplitude * (10.0 * x[0]).sin() {
        delta
    } else {
        -delta
    }
}

/// A generated table together with the noise-free mean at each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub table: RawTable,
    pub truth: Vec<f64>,
}

/// Columns `x1, x2, y`.
pub fn generate(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x1 = Vec::with_capacity(spec.n);
    let mut x2 = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    let mut truth = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let x = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        let f = spec.mean_function(x);
        let noise: f64 = rng.sample(StandardNormal);
        x1.push(x[0]);
        x2.push(x[1]);
        truth.push(f);
        y.push(f + noise);
    }
    Ok(Synthetic {
        table: RawTable {
            cont_names: vec!["x1".into(), "x2".into()],
            cont: vec![x1, x2],
            outcome_name: Some("y".into()),
            outcome: Some(y),
            n: spec.n,
            ..RawTable::default()
        },
        truth,
    })
}
