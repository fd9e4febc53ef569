//! Metropolis-within-Gibbs sampler over the sum-of-trees posterior.
//!
//! One sweep updates each tree in turn against its partial residuals (a
//! grow or prune Metropolis-Hastings step followed by a conjugate draw of all
//! leaf outputs), then the noise variance and the sparsity parameter. For
//! classification the sweep starts by refreshing the probit latents.

pub mod diagnostics;
pub mod stats;
pub mod truncnorm;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::DesignMatrix;
use crate::ensemble::{Ensemble, EnsembleConfig};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rule_prior::draw_rule;
use crate::tree::{DecisionTree, NodeId};

pub use diagnostics::{diagnostics_csv, ChainDiagnostics, IterationRecord, MoveCounts, DIAGNOSTICS_HEADER};
pub use stats::{
    grow_acceptance, log_grow_ratio, log_prune_ratio, node_suffstats, prune_acceptance, MovePrior, MoveStats,
    SuffStats,
};

/// Observation indices reaching each leaf of one tree.
pub type LeafGroups = BTreeMap<NodeId, Vec<usize>>;

/// What the trees are fitted to.
#[derive(Debug, Clone, PartialEq)]
pub enum Response<T> {
    /// Standardized outcome.
    Regression(Vec<T>),
    /// Binary labels, fitted through probit latents.
    Classification(Vec<bool>),
}

impl<T> Response<T> {
    pub fn len(&self) -> usize {
        match self {
            Self::Regression(y) => y.len(),
            Self::Classification(y) => y.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Derives an independent seed for `stream` from `master`: the two are
/// combined and pushed through the SplitMix64 finalizer so nearby masters and
/// stream indices give unrelated values.
pub fn mix_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of chain `k` under master seed `master`.
pub fn chain_seed(master: u64, chain: u64) -> u64 {
    mix_seed(master, chain)
}

/// Leaf membership of every row of `design` in `tree`.
pub fn leaf_groups<T: Real>(tree: &DecisionTree<T>, design: &DesignMatrix<T>) -> LeafGroups {
    let mut groups: LeafGroups = tree.leaf_ids().into_iter().map(|id| (id, Vec::new())).collect();
    for i in 0..design.n() {
        groups.entry(tree.leaf_of(design.row(i))).or_default().push(i);
    }
    groups
}

/// Draws every leaf output from `N(Theta / P, 1 / P)` given the residuals of
/// the observations in `groups`.
pub fn draw_leaf_outputs<T: Real, R: Rng + ?Sized>(
    tree: &mut DecisionTree<T>,
    groups: &LeafGroups,
    residuals: &[T],
    sigma2: T,
    leaf_scale: T,
    rng: &mut R,
) -> Result<()> {
    for (&leaf, idx) in groups {
        let s = node_suffstats(idx, residuals, sigma2, leaf_scale);
        let mu = s.posterior_mean() + s.posterior_variance().sqrt() * T::sample_standard_normal(rng);
        tree.set_output(leaf, mu)?;
    }
    Ok(())
}

/// `IG((nu + n) / 2, (nu * lambda + sse) / 2)`.
pub fn draw_sigma2<T: Real, R: Rng + ?Sized>(nu: T, lambda: T, n: usize, sse: T, rng: &mut R) -> T {
    let two = T::lit(2.0);
    T::sample_inv_gamma((nu + T::from_usize_lossy(n)) / two, (nu * lambda + sse) / two, rng)
}

/// `Beta(a + nonzero, b + zero)` from the direction-entry census.
pub fn draw_theta<T: Real, R: Rng + ?Sized>(a: T, b: T, census: (usize, usize), rng: &mut R) -> T {
    T::sample_beta(a + T::from_usize_lossy(census.0), b + T::from_usize_lossy(census.1), rng)
}

/// Which move a tree update proposed and whether it was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOutcome {
    Grow { accepted: bool },
    Prune { accepted: bool },
}

/// Mutable state of one chain.
#[derive(Debug, Clone)]
pub struct FitState<'a, T> {
    pub ensemble: Ensemble<T>,
    design: &'a DesignMatrix<T>,
    labels: Option<Vec<bool>>,
    /// Outcome (regression) or current latents (classification).
    target: Vec<T>,
    /// Per-tree cached fits, `fits[m][i]`.
    fits: Vec<Vec<T>>,
    total: Vec<T>,
    groups: Vec<LeafGroups>,
    prior: MovePrior<T>,
    iteration: usize,
}

impl<'a, T: Real> FitState<'a, T> {
    /// Root-only start. Classification pins `sigma2` at one.
    pub fn new(config: EnsembleConfig<T>, design: &'a DesignMatrix<T>, response: Response<T>) -> Result<Self> {
        if response.len() != design.n() {
            return Err(Error::Input(format!(
                "{} outcomes for {} rows",
                response.len(),
                design.n()
            )));
        }
        if config.schema != *design.schema() {
            return Err(Error::Input("design matrix does not match the ensemble schema".into()));
        }
        let ensemble = Ensemble::initial(config)?;
        let n = design.n();
        let (labels, target) = match response {
            Response::Regression(y) => (None, y),
            Response::Classification(y) => (Some(y), vec![T::zero(); n]),
        };
        let m = ensemble.trees.len();
        let groups = ensemble.trees.iter().map(|t| leaf_groups(t, design)).collect();
        let prior = MovePrior::from_config(&ensemble.config);
        Ok(Self {
            ensemble,
            design,
            labels,
            target,
            fits: vec![vec![T::zero(); n]; m],
            total: vec![T::zero(); n],
            groups,
            prior,
            iteration: 0,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn is_classification(&self) -> bool {
        self.labels.is_some()
    }

    pub fn target(&self) -> &[T] {
        &self.target
    }

    /// Current sum-of-trees fit at each training row.
    pub fn total_fit(&self) -> &[T] {
        &self.total
    }

    /// Residuals of tree `m`: target minus the fits of every other tree.
    pub fn partial_residuals(&self, m: usize) -> Vec<T> {
        self.target
            .iter()
            .zip(&self.total)
            .zip(&self.fits[m])
            .map(|((&y, &f), &g)| y - f + g)
            .collect()
    }

    /// Redraws the probit latents given the current fit.
    pub fn update_latents<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if let Some(labels) = &self.labels {
            for ((z, &f), &y) in self.target.iter_mut().zip(&self.total).zip(labels) {
                *z = T::lit(truncnorm::draw_latent(f.as_f64(), y, rng));
            }
        }
    }

    /// One grow-or-prune step on tree `m` followed by fresh leaf outputs.
    pub fn update_tree<R: Rng + ?Sized>(&mut self, m: usize, rng: &mut R) -> Result<MoveOutcome> {
        let residuals = self.partial_residuals(m);
        let sigma2 = self.ensemble.sigma2;
        let leaf_scale = self.prior.leaf_scale;
        let outcome = if rng.random::<bool>() {
            MoveOutcome::Grow {
                accepted: self.propose_grow(m, &residuals, rng)?,
            }
        } else {
            MoveOutcome::Prune {
                accepted: self.propose_prune(m, &residuals, rng)?,
            }
        };

        let tree = &mut self.ensemble.trees[m];
        let groups = &self.groups[m];
        draw_leaf_outputs(tree, groups, &residuals, sigma2, leaf_scale, rng)?;
        let fit = &mut self.fits[m];
        for (&leaf, idx) in groups {
            let mu = tree.output(leaf).ok_or(Error::UnsetLeaf(leaf))?;
            for &i in idx {
                self.total[i] = self.total[i] - fit[i] + mu;
                fit[i] = mu;
            }
        }
        Ok(outcome)
    }

    fn propose_grow<R: Rng + ?Sized>(&mut self, m: usize, residuals: &[T], rng: &mut R) -> Result<bool> {
        let tree = &self.ensemble.trees[m];
        let leaves = tree.leaf_ids();
        let leaf = leaves[rng.random_range(0..leaves.len())];
        let draw = draw_rule(tree, leaf, &self.ensemble.config, self.ensemble.theta, rng)?;

        let members = &self.groups[m][&leaf];
        let (left, right): (Vec<usize>, Vec<usize>) =
            members.iter().partition(|&&i| draw.rule.goes_left(self.design.row(i)));
        let sigma2 = self.ensemble.sigma2;
        let scale = self.prior.leaf_scale;
        let stats = MoveStats {
            parent: node_suffstats(members, residuals, sigma2, scale),
            left: node_suffstats(&left, residuals, sigma2, scale),
            right: node_suffstats(&right, residuals, sigma2, scale),
            depth: tree.depth(leaf).ok_or(Error::UnsetLeaf(leaf))?,
        };
        // Growing a leaf whose sibling is a leaf turns its parent from a nog
        // node into a plain decision node.
        let parent_was_nog = tree
            .node(leaf)
            .and_then(|n| n.parent)
            .is_some_and(|p| tree.is_nog(p));
        let nnog_proposed = tree.nnog() + 1 - usize::from(parent_was_nog);
        let log_ratio = log_grow_ratio(&stats, tree.nleaf(), nnog_proposed, &self.prior);
        if T::sample_open01(rng).ln() >= log_ratio {
            return Ok(false);
        }

        let (l, r) = self.ensemble.trees[m].grow(leaf, draw.rule)?;
        let groups = &mut self.groups[m];
        groups.remove(&leaf);
        groups.insert(l, left);
        groups.insert(r, right);
        Ok(true)
    }

    fn propose_prune<R: Rng + ?Sized>(&mut self, m: usize, residuals: &[T], rng: &mut R) -> Result<bool> {
        let tree = &self.ensemble.trees[m];
        let nogs = tree.nog_ids();
        if nogs.is_empty() {
            return Ok(false);
        }
        let nog = nogs[rng.random_range(0..nogs.len())];
        let (l, r) = tree.children(nog).ok_or(Error::UnsetLeaf(nog))?;
        let groups = &self.groups[m];
        let mut merged: Vec<usize> = groups[&l].iter().chain(&groups[&r]).copied().collect();
        merged.sort_unstable();
        let sigma2 = self.ensemble.sigma2;
        let scale = self.prior.leaf_scale;
        let stats = MoveStats {
            parent: node_suffstats(&merged, residuals, sigma2, scale),
            left: node_suffstats(&groups[&l], residuals, sigma2, scale),
            right: node_suffstats(&groups[&r], residuals, sigma2, scale),
            depth: tree.depth(nog).ok_or(Error::UnsetLeaf(nog))?,
        };
        let log_ratio = log_prune_ratio(&stats, tree.nnog(), tree.nleaf() - 1, &self.prior);
        if T::sample_open01(rng).ln() >= log_ratio {
            return Ok(false);
        }

        self.ensemble.trees[m].prune(nog)?;
        let groups = &mut self.groups[m];
        groups.remove(&l);
        groups.remove(&r);
        groups.insert(nog, merged);
        Ok(true)
    }

    /// Draws the noise variance from its full conditional (regression only).
    pub fn update_sigma2<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if self.is_classification() {
            return;
        }
        let sse = self
            .target
            .iter()
            .zip(&self.total)
            .map(|(&y, &f)| (y - f) * (y - f))
            .fold(T::zero(), |a, b| a + b);
        let c = &self.ensemble.config;
        self.ensemble.sigma2 = draw_sigma2(c.nu, c.lambda, self.target.len(), sse, rng);
    }

    pub fn update_theta<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let c = &self.ensemble.config;
        self.ensemble.theta = draw_theta(c.a_theta, c.b_theta, self.ensemble.phi_census(), rng);
    }

    /// One full sweep.
    pub fn gibbs_iteration<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<IterationRecord> {
        self.resum_total();
        self.update_latents(rng);
        let mut moves = MoveCounts::default();
        for m in 0..self.ensemble.trees.len() {
            match self.update_tree(m, rng)? {
                MoveOutcome::Grow { accepted } => {
                    moves.grow_proposed += 1;
                    moves.grow_accepted += usize::from(accepted);
                }
                MoveOutcome::Prune { accepted } => {
                    moves.prune_proposed += 1;
                    moves.prune_accepted += usize::from(accepted);
                }
            }
        }
        self.update_sigma2(rng);
        self.update_theta(rng);
        self.iteration += 1;
        debug_assert!(
            self.cache_error(16) < T::epsilon() * T::lit(1e3 * self.ensemble.trees.len() as f64),
            "cached fits drifted"
        );
        Ok(IterationRecord::snapshot(self.iteration, &self.ensemble, moves))
    }

    /// Rebuilds the summed fit from the per-tree fits so incremental updates
    /// cannot accumulate rounding error across sweeps.
    fn resum_total(&mut self) {
        for (i, t) in self.total.iter_mut().enumerate() {
            *t = self.fits.iter().fold(T::zero(), |acc, fit| acc + fit[i]);
        }
    }

    /// Largest gap between cached and freshly evaluated fits over the first
    /// `rows` training rows (per tree and summed).
    pub fn cache_error(&self, rows: usize) -> T {
        let mut worst = T::zero();
        for i in 0..rows.min(self.design.n()) {
            let x = self.design.row(i);
            let mut sum = T::zero();
            for (tree, fit) in self.ensemble.trees.iter().zip(&self.fits) {
                let fresh = tree.leaf_of(x);
                let g = tree.output(fresh).unwrap_or_else(T::nan);
                worst = worst.max((g - fit[i]).abs());
                sum = sum + g;
            }
            worst = worst.max((sum - self.total[i]).abs());
        }
        worst
    }
}

/// Draws and per-iteration trace of one chain.
#[derive(Debug, Clone)]
pub struct ChainOutput<T> {
    pub draws: Vec<Ensemble<T>>,
    pub diagnostics: ChainDiagnostics,
}

/// Runs `burn + kept` sweeps from a root-only start, keeping the ensemble
/// after each post-burn sweep.
pub fn run_chain<T: Real>(
    config: EnsembleConfig<T>,
    design: &DesignMatrix<T>,
    response: Response<T>,
    burn: usize,
    kept: usize,
    seed: u64,
) -> Result<ChainOutput<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = FitState::new(config, design, response)?;
    let mut draws = Vec::with_capacity(kept);
    let mut diagnostics = ChainDiagnostics {
        records: Vec::with_capacity(burn + kept),
        burn,
    };
    for it in 0..burn + kept {
        diagnostics.records.push(state.gibbs_iteration(&mut rng)?);
        if it >= burn {
            draws.push(state.ensemble.clone());
        }
    }
    Ok(ChainOutput { draws, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::RuleMode;
    use crate::tree::Schema;

    fn line_design(n: usize) -> DesignMatrix<f64> {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![-1.0 + 2.0 * i as f64 / (n - 1) as f64]).collect();
        DesignMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn partial_residuals_example() {
        let design = line_design(2);
        let config = EnsembleConfig::with_defaults(2, Schema::continuous(1), RuleMode::Oblique);
        let mut state = FitState::new(config, &design, Response::Regression(vec![2.0, 2.0])).unwrap();
        assert_eq!(state.partial_residuals(0), vec![2.0, 2.0]);
        state.fits[1] = vec![0.5, 0.5];
        state.total = vec![0.5, 0.5];
        assert_eq!(state.partial_residuals(0), vec![1.5, 1.5]);
    }

    #[test]
    fn root_only_prune_is_rejected() {
        let design = line_design(5);
        let config = EnsembleConfig::with_defaults(1, Schema::continuous(1), RuleMode::Oblique);
        let mut state = FitState::new(config, &design, Response::Regression(vec![0.0; 5])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let residuals = state.partial_residuals(0);
        assert!(!state.propose_prune(0, &residuals, &mut rng).unwrap());
        assert_eq!(state.ensemble.trees[0].node_count(), 1);
    }

    #[test]
    fn caches_stay_coherent() {
        let design = line_design(60);
        let y: Vec<f64> = (0..60).map(|i| if i < 30 { -1.0 } else { 1.0 }).collect();
        let config = EnsembleConfig::with_defaults(5, Schema::continuous(1), RuleMode::Oblique);
        let mut state = FitState::new(config, &design, Response::Regression(y)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for it in 1..=50 {
            let rec = state.gibbs_iteration(&mut rng).unwrap();
            assert_eq!(rec.iter, it);
            assert!(state.cache_error(60) < 1e-10);
            for (tree, groups) in state.ensemble.trees.iter().zip(&state.groups) {
                assert_eq!(&leaf_groups(tree, &design), groups);
            }
        }
    }

    #[test]
    fn chain_seeds_differ() {
        assert_ne!(chain_seed(1, 0), chain_seed(1, 1));
        assert_ne!(chain_seed(1, 0), chain_seed(2, 0));
        assert_eq!(chain_seed(5, 3), chain_seed(5, 3));
    }
}
