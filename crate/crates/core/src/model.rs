//! Fitting, prediction and model files.
//!
//! `fit` calibrates the priors on the standardized outcome, runs the chains
//! and keeps every post-burn ensemble. `predict` summarizes those draws on
//! the original outcome scale.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::data::{Dataset, DesignMatrix, Standardizer, Task};
use crate::ensemble::{default_theta_prior, Ensemble, EnsembleConfig, RuleMode};
use crate::error::{Error, Result};
use crate::format::{parse_ensemble, write_ensemble, Lines};
use crate::real::Real;
use crate::sampler::{chain_seed, diagnostics_csv, run_chain, ChainDiagnostics, Response};

pub const MODEL_HEADER: &str = "obliquebart-model v1";

/// Sampler budget and prior settings. `None` fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub task: Task,
    pub num_trees: usize,
    pub burn: usize,
    pub kept: usize,
    pub chains: usize,
    pub seed: u64,
    #[serde(with = "mode_serde")]
    pub mode: RuleMode,
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    /// Prior probability that sigma2 is below the reference variance.
    pub q: f64,
    /// Number of prior sds spanning half the outcome range.
    pub k: f64,
    /// Reference variance for the sigma2 prior; defaults to the sample
    /// variance of the standardized outcome.
    pub sigma2_reference: Option<f64>,
    pub a_theta: Option<f64>,
    pub b_theta: Option<f64>,
    pub prob_categorical: Option<f64>,
}

mod mode_serde {
    use super::RuleMode;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(mode: &RuleMode, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(mode.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RuleMode, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Default for FitSpec {
    fn default() -> Self {
        Self {
            task: Task::Regression,
            num_trees: 200,
            burn: 1000,
            kept: 1000,
            chains: 1,
            seed: 0,
            mode: RuleMode::Oblique,
            alpha: 0.95,
            beta: 2.0,
            nu: 3.0,
            q: 0.9,
            k: 2.0,
            sigma2_reference: None,
            a_theta: None,
            b_theta: None,
            prob_categorical: None,
        }
    }
}

impl FitSpec {
    /// 50 trees, 500 burn-in and 500 kept sweeps.
    pub fn fast(task: Task, mode: RuleMode, seed: u64) -> Self {
        Self {
            task,
            mode,
            seed,
            num_trees: 50,
            burn: 500,
            kept: 500,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kept == 0 {
            return Err(Error::Config("at least one kept iteration is required".into()));
        }
        if self.chains == 0 {
            return Err(Error::Config("at least one chain is required".into()));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::Config(format!("q must lie in (0, 1), got {}", self.q)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Config(format!("k must be positive, got {}", self.k)));
        }
        Ok(())
    }
}

/// `(max - min) / (2k)`: the marginal prior sd of f(x) that puts the observed
/// range at plus/minus k sds around the midrange.
pub fn calibrate_tau(min: f64, max: f64, k: f64) -> Result<f64> {
    if max.is_nan() || min.is_nan() || max <= min {
        return Err(Error::Config("outcome is constant; nothing to fit".into()));
    }
    Ok((max - min) / (2.0 * k))
}

/// Probit scale: k prior sds cover the latent span (-3, 3).
pub fn classification_tau(k: f64) -> f64 {
    3.0 / k
}

/// `s2 * chi2_nu^-1(1 - q) / nu`, so `P(sigma2 < s2) = q` under
/// `sigma2 ~ IG(nu / 2, nu * lambda / 2)`.
pub fn calibrate_lambda(s2: f64, nu: f64, q: f64) -> Result<f64> {
    if s2.is_nan() || s2 <= 0.0 {
        return Err(Error::Config(format!("reference variance must be positive, got {s2}")));
    }
    let chi = ChiSquared::new(nu).map_err(|e| Error::Config(e.to_string()))?;
    Ok(s2 * chi.inverse_cdf(1.0 - q) / nu)
}

fn sample_variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0)
}

/// Prior configuration for `spec` on standardized data.
pub fn build_config<T: Real>(data: &Dataset<T>, spec: &FitSpec) -> Result<EnsembleConfig<T>> {
    spec.validate()?;
    let schema = data.design.schema().clone();
    let mut config = EnsembleConfig::<T>::with_defaults(spec.num_trees, schema.clone(), spec.mode);
    let (a, b) = default_theta_prior::<T>(spec.num_trees, schema.p_cont);
    config.alpha = T::lit(spec.alpha);
    config.beta = T::lit(spec.beta);
    config.nu = T::lit(spec.nu);
    config.a_theta = spec.a_theta.map_or(a, T::lit);
    config.b_theta = spec.b_theta.map_or(b, T::lit);
    config.prob_categorical = spec.prob_categorical.map(T::lit);
    let y: Vec<f64> = data
        .outcome
        .as_ref()
        .ok_or_else(|| Error::Data("training data needs an outcome".into()))?
        .iter()
        .map(|v| v.as_f64())
        .collect();
    if y.is_empty() {
        return Err(Error::Data("training data has no rows".into()));
    }
    match spec.task {
        Task::Regression => {
            let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            config.tau = T::lit(calibrate_tau(lo, hi, spec.k)?);
            let s2 = spec.sigma2_reference.unwrap_or_else(|| sample_variance(&y));
            config.lambda = T::lit(calibrate_lambda(s2, spec.nu, spec.q)?);
        }
        Task::Classification => {
            config.tau = T::lit(classification_tau(spec.k));
        }
    }
    config.validate()?;
    Ok(config)
}

/// Kept ensembles of every chain plus what is needed to predict with them.
#[derive(Debug, Clone)]
pub struct PosteriorSamples<T> {
    /// Chain-major: all kept draws of chain 0, then chain 1, ...
    pub draws: Vec<Ensemble<T>>,
    pub scaler: Standardizer,
    pub spec: FitSpec,
    pub diagnostics: Vec<ChainDiagnostics>,
}

pub fn fit<T: Real>(data: &Dataset<T>, scaler: &Standardizer, spec: &FitSpec) -> Result<PosteriorSamples<T>> {
    let config = build_config(data, spec)?;
    if scaler.task != spec.task {
        return Err(Error::Config("standardizer and fit spec disagree on the task".into()));
    }
    let y = data.outcome.as_ref().expect("checked by build_config");
    let response = match spec.task {
        Task::Regression => Response::Regression(y.clone()),
        Task::Classification => Response::Classification(y.iter().map(|&v| v > T::lit(0.5)).collect()),
    };
    let outputs = (0..spec.chains)
        .into_par_iter()
        .map(|k| {
            run_chain(
                config.clone(),
                &data.design,
                response.clone(),
                spec.burn,
                spec.kept,
                chain_seed(spec.seed, k as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut draws = Vec::with_capacity(spec.chains * spec.kept);
    let mut diagnostics = Vec::with_capacity(spec.chains);
    for out in outputs {
        draws.extend(out.draws);
        diagnostics.push(out.diagnostics);
    }
    Ok(PosteriorSamples {
        draws,
        scaler: scaler.clone(),
        spec: spec.clone(),
        diagnostics,
    })
}

/// Posterior summary at one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Posterior mean of f(x), on the original outcome scale for regression
    /// and the probit scale for classification.
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    /// Posterior mean of `Phi(f(x))` (classification only).
    pub prob: Option<f64>,
    /// `prob > 0.5`; a tie goes to 0.
    pub label: Option<u8>,
}

/// Type-7 empirical quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl<T: Real> PosteriorSamples<T> {
    pub fn task(&self) -> Task {
        self.spec.task
    }

    /// Draws of f at every row, `out[row][draw]`, on the standardized scale.
    pub fn draws_at(&self, design: &DesignMatrix<T>) -> Result<Vec<Vec<f64>>> {
        let expected = self.scaler.schema();
        if *design.schema() != expected {
            return Err(Error::Input(format!(
                "predictor layout {:?} does not match the training layout {:?}",
                design.schema(),
                expected
            )));
        }
        (0..design.n())
            .into_par_iter()
            .map(|i| {
                self.draws
                    .iter()
                    .map(|ens| ens.predict(design.row(i)).map(Real::as_f64))
                    .collect()
            })
            .collect()
    }

    pub fn predict(&self, design: &DesignMatrix<T>) -> Result<Vec<Prediction>> {
        let phi = Normal::standard();
        let scaling = self.scaler.outcome;
        let task = self.task();
        Ok(self
            .draws_at(design)?
            .into_iter()
            .map(|mut f| {
                let prob = (task == Task::Classification)
                    .then(|| f.iter().map(|&v| phi.cdf(v)).sum::<f64>() / f.len() as f64);
                if task == Task::Regression {
                    for v in &mut f {
                        *v = scaling.from_std(*v);
                    }
                }
                let mean = f.iter().sum::<f64>() / f.len() as f64;
                f.sort_by(f64::total_cmp);
                Prediction {
                    mean,
                    lo: quantile_sorted(&f, 0.025),
                    hi: quantile_sorted(&f, 0.975),
                    prob,
                    label: prob.map(|p| u8::from(p > 0.5)),
                }
            })
            .collect())
    }

    /// Kept-iteration diagnostics of every chain as CSV.
    pub fn diagnostics_csv(&self) -> String {
        diagnostics_csv(&self.diagnostics)
    }

    /// Model file text: header, JSON metadata line, draw count, then every
    /// kept ensemble.
    pub fn to_model_string(&self) -> Result<String> {
        let meta = serde_json::to_string(&ModelMeta {
            spec: self.spec.clone(),
            scaler: self.scaler.clone(),
        })
        .map_err(|e| Error::Data(e.to_string()))?;
        let mut out = format!("{MODEL_HEADER}\nmeta {meta}\ndraws {}\n", self.draws.len());
        for ens in &self.draws {
            write_ensemble(&mut out, ens);
        }
        Ok(out)
    }

    /// Parses a model file. Diagnostics are not stored in it and come back empty.
    pub fn from_model_str(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let (n, header) = lines.next_line("model header")?;
        if header != MODEL_HEADER {
            return Err(Error::Parse {
                line: n,
                reason: format!("expected '{MODEL_HEADER}'"),
            });
        }
        let (n, meta) = lines.next_line("meta line")?;
        let meta: ModelMeta = meta
            .strip_prefix("meta ")
            .ok_or_else(|| "missing 'meta' tag".to_string())
            .and_then(|m| serde_json::from_str(m).map_err(|e| e.to_string()))
            .map_err(|reason| Error::Parse { line: n, reason })?;
        let (n, count) = lines.next_line("draw count")?;
        let count: usize = count
            .strip_prefix("draws ")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: n,
                reason: "expected 'draws <count>'".into(),
            })?;
        let draws = (0..count)
            .map(|_| parse_ensemble(&mut lines))
            .collect::<Result<Vec<_>>>()?;
        if !lines.is_done() {
            let (line, _) = lines.next_line("")?;
            return Err(Error::Parse {
                line,
                reason: "trailing content after the last draw".into(),
            });
        }
        if draws.is_empty() {
            return Err(Error::Parse {
                line: n,
                reason: "model holds no draws".into(),
            });
        }
        Ok(Self {
            draws,
            scaler: meta.scaler,
            spec: meta.spec,
            diagnostics: Vec::new(),
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_model_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_model_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    spec: FitSpec,
    scaler: Standardizer,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{read_csv, standardize, CsvSchema};

    #[test]
    fn tau_examples() {
        assert_eq!(calibrate_tau(0.0, 4.0, 2.0).unwrap(), 1.0);
        assert_eq!(calibrate_tau(-1.0, 1.0, 2.0).unwrap(), 0.5);
        assert_eq!(classification_tau(2.0), 1.5);
        assert!(calibrate_tau(1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn lambda_scales_linearly() {
        let a = calibrate_lambda(1.0, 3.0, 0.9).unwrap();
        let b = calibrate_lambda(2.5, 3.0, 0.9).unwrap();
        assert!((b - 2.5 * a).abs() < 1e-12);
        assert!((a - 0.584_374 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.025), 1.1);
        assert_eq!(quantile_sorted(&[7.0], 0.975), 7.0);
    }

    fn toy() -> (Dataset<f64>, Standardizer) {
        let mut csv = String::from("x,y\n");
        for i in 0..40 {
            let x = i as f64 / 39.0;
            csv.push_str(&format!("{x},{}\n", if x < 0.5 { 10.0 } else { 20.0 }));
        }
        let schema = CsvSchema {
            outcome: Some("y".into()),
            ..CsvSchema::default()
        };
        standardize(&read_csv(csv.as_bytes(), &schema).unwrap(), Task::Regression).unwrap()
    }

    #[test]
    fn fit_predict_and_round_trip() {
        let (data, scaler) = toy();
        let spec = FitSpec {
            num_trees: 5,
            burn: 20,
            kept: 10,
            chains: 2,
            seed: 3,
            ..FitSpec::default()
        };
        let post = fit(&data, &scaler, &spec).unwrap();
        assert_eq!(post.draws.len(), 20);
        let preds = post.predict(&data.design).unwrap();
        assert!(preds[0].mean < 15.0 && preds[39].mean > 15.0);
        assert!(preds.iter().all(|p| p.lo <= p.mean && p.mean <= p.hi));

        let text = post.to_model_string().unwrap();
        let back = PosteriorSamples::<f64>::from_model_str(&text).unwrap();
        assert_eq!(back.to_model_string().unwrap(), text);
        assert_eq!(back.predict(&data.design).unwrap(), preds);
    }

    #[test]
    fn identical_draws_give_zero_width() {
        let (data, scaler) = toy();
        let spec = FitSpec {
            num_trees: 3,
            burn: 5,
            kept: 1,
            ..FitSpec::default()
        };
        let mut post = fit(&data, &scaler, &spec).unwrap();
        let one = post.draws[0].clone();
        post.draws = vec![one; 4];
        for p in post.predict(&data.design).unwrap() {
            assert!((p.hi - p.lo).abs() < 1e-12);
            assert!((p.mean - p.lo).abs() < 1e-9);
        }
    }
}
