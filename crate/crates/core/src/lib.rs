//! Bayesian additive regression trees whose continuous decision rules split
//! along random hyperplanes.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod bench;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod format;
pub mod metrics;
pub mod model;
pub mod polytope;
pub mod real;
pub mod rotation;
pub mod rule_prior;
pub mod sampler;
mod simplex;
pub mod synthetic;
pub mod tree;

pub use data::{CsvSchema, Dataset, DesignMatrix, RawTable, Standardizer, Task};
pub use ensemble::{Ensemble, EnsembleConfig, RuleMode};
pub use error::{Error, Result};
pub use model::{FitSpec, PosteriorSamples, Prediction};
pub use real::Real;
pub use tree::{DecisionRule, DecisionTree, NodeId, Observation, Schema};

pub type Tree64 = DecisionTree<f64>;
pub type Tree32 = DecisionTree<f32>;
pub type Rule64 = DecisionRule<f64>;
pub type Rule32 = DecisionRule<f32>;
pub type Ensemble64 = Ensemble<f64>;
pub type Ensemble32 = Ensemble<f32>;
pub type Config64 = EnsembleConfig<f64>;
pub type Config32 = EnsembleConfig<f32>;
pub type Design64 = DesignMatrix<f64>;
pub type Design32 = DesignMatrix<f32>;
pub type Posterior64 = PosteriorSamples<f64>;
pub type Posterior32 = PosteriorSamples<f32>;
