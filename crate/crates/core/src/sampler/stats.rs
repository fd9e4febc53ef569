//! Per-node sufficient statistics and grow/prune acceptance ratios.
//!
//! Every quantity is kept in natural-log space. The rule prior/proposal ratio
//! is identically one (rules are proposed from the prior) and does not appear.

use crate::ensemble::EnsembleConfig;
use crate::real::Real;

/// Count, precision `P = n / sigma2 + 1 / s^2` and precision-weighted
/// residual sum `Theta = sum(r) / sigma2` for the observations at a node,
/// where `s` is the leaf prior sd.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuffStats<T> {
    pub n: usize,
    pub precision: T,
    pub weighted_sum: T,
}

impl<T: Real> SuffStats<T> {
    pub fn from_sum(n: usize, residual_sum: T, sigma2: T, leaf_scale: T) -> Self {
        Self {
            n,
            precision: T::from_usize_lossy(n) / sigma2 + (leaf_scale * leaf_scale).recip(),
            weighted_sum: residual_sum / sigma2,
        }
    }

    /// Stats of a node holding no observations (the leaf prior alone).
    pub fn empty(sigma2: T, leaf_scale: T) -> Self {
        Self::from_sum(0, T::zero(), sigma2, leaf_scale)
    }

    pub fn posterior_mean(&self) -> T {
        self.weighted_sum / self.precision
    }

    pub fn posterior_variance(&self) -> T {
        self.precision.recip()
    }

    /// `Theta^2 / (2 P) - log(P) / 2`: the node's contribution to the
    /// integrated likelihood, up to terms that cancel between trees.
    #[inline]
    fn log_evidence(&self) -> T {
        let two = T::lit(2.0);
        self.weighted_sum * self.weighted_sum / (two * self.precision) - self.precision.ln() / two
    }
}

/// Sufficient statistics of the residuals at `indices`.
pub fn node_suffstats<T: Real>(indices: &[usize], residuals: &[T], sigma2: T, leaf_scale: T) -> SuffStats<T> {
    let sum = indices.iter().map(|&i| residuals[i]).fold(T::zero(), |a, b| a + b);
    SuffStats::from_sum(indices.len(), sum, sigma2, leaf_scale)
}

/// Hyperparameters entering the acceptance ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovePrior<T> {
    pub alpha: T,
    pub beta: T,
    /// Prior sd of one leaf output.
    pub leaf_scale: T,
}

impl<T: Real> MovePrior<T> {
    pub fn from_config(config: &EnsembleConfig<T>) -> Self {
        Self {
            alpha: config.alpha,
            beta: config.beta,
            leaf_scale: config.leaf_scale(),
        }
    }

    #[inline]
    fn split_probability(&self, depth: u32) -> T {
        self.alpha * (T::one() + T::from_usize_lossy(depth as usize)).powf(-self.beta)
    }

    /// Log of the tree-prior ratio for splitting a leaf at `depth` into two
    /// leaves: `a(1+d)^-b (1 - a(2+d)^-b)^2 / (1 - a(1+d)^-b)`.
    pub fn log_split_prior_ratio(&self, depth: u32) -> T {
        let split = self.split_probability(depth);
        let child = self.split_probability(depth + 1);
        debug_assert!(split < T::one(), "split probability must be below one");
        split.ln() + T::lit(2.0) * (-child).ln_1p() - (-split).ln_1p()
    }
}

/// The three nodes touched by a grow or prune move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveStats<T> {
    pub parent: SuffStats<T>,
    pub left: SuffStats<T>,
    pub right: SuffStats<T>,
    /// Depth of the parent node.
    pub depth: u32,
}

impl<T: Real> MoveStats<T> {
    /// Log of the likelihood term for splitting parent into left and right:
    /// `-log s - (log P_l + log P_r - log P) / 2 + Theta_l^2/(2P_l) + Theta_r^2/(2P_r) - Theta^2/(2P)`.
    pub fn log_fit_ratio(&self, leaf_scale: T) -> T {
        -leaf_scale.ln() + self.left.log_evidence() + self.right.log_evidence() - self.parent.log_evidence()
    }
}

/// Log acceptance ratio (before the min with one) of growing the parent leaf.
/// `nleaf_current` counts leaves before the move, `nnog_proposed` nog nodes
/// after it.
pub fn log_grow_ratio<T: Real>(stats: &MoveStats<T>, nleaf_current: usize, nnog_proposed: usize, prior: &MovePrior<T>) -> T {
    prior.log_split_prior_ratio(stats.depth) + T::from_usize_lossy(nleaf_current).ln()
        - T::from_usize_lossy(nnog_proposed).ln()
        + stats.log_fit_ratio(prior.leaf_scale)
}

/// Log acceptance ratio (before the min with one) of pruning the parent's two
/// leaf children. `nnog_current` counts nog nodes before the move,
/// `nleaf_proposed` leaves after it.
pub fn log_prune_ratio<T: Real>(stats: &MoveStats<T>, nnog_current: usize, nleaf_proposed: usize, prior: &MovePrior<T>) -> T {
    -prior.log_split_prior_ratio(stats.depth) + T::from_usize_lossy(nnog_current).ln()
        - T::from_usize_lossy(nleaf_proposed).ln()
        - stats.log_fit_ratio(prior.leaf_scale)
}

pub fn grow_acceptance<T: Real>(stats: &MoveStats<T>, nleaf_current: usize, nnog_proposed: usize, prior: &MovePrior<T>) -> T {
    log_grow_ratio(stats, nleaf_current, nnog_proposed, prior).exp().min(T::one())
}

pub fn prune_acceptance<T: Real>(stats: &MoveStats<T>, nnog_current: usize, nleaf_proposed: usize, prior: &MovePrior<T>) -> T {
    log_prune_ratio(stats, nnog_current, nleaf_proposed, prior).exp().min(T::one())
}
