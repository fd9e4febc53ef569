//! Sum-of-trees model state.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tree::{DecisionTree, Observation, Schema};

/// How continuous split directions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleMode {
    /// Spike-and-slab random hyperplanes.
    Oblique,
    /// One coordinate axis chosen uniformly (classic BART rules).
    AxisAligned,
}

impl RuleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Oblique => "oblique",
            Self::AxisAligned => "axis",
        }
    }
}

impl std::str::FromStr for RuleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oblique" => Ok(Self::Oblique),
            "axis" | "axis-aligned" | "axis_aligned" => Ok(Self::AxisAligned),
            other => Err(Error::Config(format!("unknown rule mode '{other}'"))),
        }
    }
}

/// Prior hyperparameters and predictor layout shared by every tree.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig<T> {
    pub num_trees: usize,
    /// Branching-process base probability.
    pub alpha: T,
    /// Branching-process depth penalty.
    pub beta: T,
    /// Marginal prior sd of the sum of trees. Each leaf gets `tau / sqrt(M)`.
    pub tau: T,
    pub nu: T,
    pub lambda: T,
    pub a_theta: T,
    pub b_theta: T,
    pub schema: Schema,
    pub mode: RuleMode,
    /// Probability of drawing a categorical rule; defaults to `p_cat / p`.
    pub prob_categorical: Option<T>,
}

impl<T: Real> EnsembleConfig<T> {
    /// Default branching prior (0.95, 2), nu = 3, lambda = 1, tau = 0.5 and the
    /// sparsity prior with `a_theta = M` and mean `1 / p_cont`.
    pub fn with_defaults(num_trees: usize, schema: Schema, mode: RuleMode) -> Self {
        let (a_theta, b_theta) = default_theta_prior::<T>(num_trees, schema.p_cont);
        Self {
            num_trees,
            alpha: T::lit(0.95),
            beta: T::lit(2.0),
            tau: T::lit(0.5),
            nu: T::lit(3.0),
            lambda: T::one(),
            a_theta,
            b_theta,
            schema,
            mode,
            prob_categorical: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if self.num_trees == 0 {
            return bad("number of trees must be at least 1");
        }
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.beta.is_nan() || self.beta < T::zero() {
            return bad("beta must be non-negative");
        }
        for (name, v) in [
            ("tau", self.tau),
            ("nu", self.nu),
            ("lambda", self.lambda),
            ("a_theta", self.a_theta),
            ("b_theta", self.b_theta),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.schema.p() == 0 {
            return bad("at least one predictor is required");
        }
        if let Some(p) = self.prob_categorical {
            if !(p >= T::zero() && p <= T::one()) {
                return bad("categorical rule probability must lie in [0, 1]");
            }
            if (p > T::zero() && self.schema.p_cat() == 0) || (p < T::one() && self.schema.p_cont == 0) {
                return bad("categorical rule probability is incompatible with the predictor layout");
            }
        }
        if self.schema.level_counts.contains(&0) {
            return bad("every categorical predictor needs at least one level");
        }
        Ok(())
    }

    /// Prior sd of a single leaf output.
    #[inline]
    pub fn leaf_scale(&self) -> T {
        self.tau / T::from_usize_lossy(self.num_trees).sqrt()
    }

    /// Probability that a freshly drawn rule is categorical.
    pub fn categorical_probability(&self) -> T {
        self.prob_categorical.unwrap_or_else(|| {
            T::from_usize_lossy(self.schema.p_cat()) / T::from_usize_lossy(self.schema.p())
        })
    }

    /// Prior probability that a node at `depth` is split.
    #[inline]
    pub fn split_probability(&self, depth: u32) -> T {
        self.alpha * (T::one() + T::from_usize_lossy(depth as usize)).powf(-self.beta)
    }
}

/// `a_theta = M` and `b_theta` chosen so that the prior mean of theta is
/// `1 / p_cont`. With a single continuous predictor that would force
/// `b_theta = 0`, so it falls back to 1.
pub fn default_theta_prior<T: Real>(num_trees: usize, p_cont: usize) -> (T, T) {
    let a = T::from_usize_lossy(num_trees.max(1));
    let b = if p_cont > 1 {
        a * T::from_usize_lossy(p_cont - 1)
    } else {
        T::one()
    };
    (a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<T> {
    pub trees: Vec<DecisionTree<T>>,
    pub sigma2: T,
    pub theta: T,
    pub config: EnsembleConfig<T>,
}

impl<T: Real> Ensemble<T> {
    /// Root-only trees with zero output, unit noise variance and theta at its
    /// prior mean.
    pub fn initial(config: EnsembleConfig<T>) -> Result<Self> {
        config.validate()?;
        let theta = config.a_theta / (config.a_theta + config.b_theta);
        Ok(Self {
            trees: (0..config.num_trees).map(|_| DecisionTree::constant(T::zero())).collect(),
            sigma2: T::one(),
            theta,
            config,
        })
    }

    pub fn predict(&self, x: Observation<'_, T>) -> Result<T> {
        self.trees
            .iter()
            .try_fold(T::zero(), |acc, tree| Ok(acc + tree.evaluate(x, &self.config.schema)?))
    }

    /// (nonzero, zero) direction-entry counts over every continuous rule.
    pub fn phi_census(&self) -> (usize, usize) {
        let p = self.config.schema.p_cont;
        self.trees
            .iter()
            .flat_map(|t| t.rules())
            .filter_map(|r| r.nonzero_count())
            .fold((0, 0), |(nz, z), k| (nz + k, z + (p - k)))
    }

    /// Fraction of continuous rules with exactly one nonzero direction entry;
    /// `None` when the ensemble holds no continuous rules.
    pub fn axis_aligned_fraction(&self) -> Option<f64> {
        let (mut total, mut aligned) = (0usize, 0usize);
        for rule in self.trees.iter().flat_map(|t| t.rules()) {
            if rule.is_continuous() {
                total += 1;
                aligned += usize::from(rule.is_axis_aligned());
            }
        }
        (total > 0).then(|| aligned as f64 / total as f64)
    }
}
