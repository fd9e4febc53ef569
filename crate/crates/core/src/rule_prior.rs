//! Draws from the decision-rule prior.
//!
//! Grow proposals use the prior itself as the proposal distribution, so
//! nothing here evaluates a density: the prior/proposal ratio in the
//! acceptance probability is identically one.

use rand::Rng;

use crate::ensemble::{EnsembleConfig, RuleMode};
use crate::error::{Error, Result};
use crate::polytope::{available_levels, leaf_polytope, phi_range, PhiRange};
use crate::real::{norm2, Real};
use crate::tree::{DecisionRule, DecisionTree, LevelSet, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Continuous,
    Categorical,
}

/// Categorical with probability `p_cat / (p_cont + p_cat)`.
pub fn draw_rule_kind<R: Rng + ?Sized>(p_cont: usize, p_cat: usize, rng: &mut R) -> Result<RuleKind> {
    let p = p_cont + p_cat;
    if p == 0 {
        return Err(Error::Config("cannot draw a rule without predictors".into()));
    }
    Ok(draw_rule_kind_with(p_cat as f64 / p as f64, rng))
}

pub fn draw_rule_kind_with<R: Rng + ?Sized>(prob_categorical: f64, rng: &mut R) -> RuleKind {
    if prob_categorical >= 1.0 || (prob_categorical > 0.0 && rng.random::<f64>() < prob_categorical) {
        RuleKind::Categorical
    } else {
        RuleKind::Continuous
    }
}

/// Spike-and-slab direction draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiProposal<T> {
    /// Inclusion indicators.
    pub gamma: Vec<bool>,
    /// Unit-norm direction, or all zeros when no coordinate was included.
    pub phi: Vec<T>,
}

impl<T: Real> PhiProposal<T> {
    pub fn is_all_zero(&self) -> bool {
        !self.gamma.iter().any(|&g| g)
    }

    pub fn support_size(&self) -> usize {
        self.gamma.iter().filter(|&&g| g).count()
    }
}

/// Includes each coordinate with probability `theta`, fills included ones
/// with standard normals and rescales to unit norm.
pub fn draw_phi<T: Real, R: Rng + ?Sized>(theta: T, p_cont: usize, rng: &mut R) -> PhiProposal<T> {
    let mut gamma = Vec::with_capacity(p_cont);
    let mut phi = Vec::with_capacity(p_cont);
    for _ in 0..p_cont {
        let included = T::sample_open01(rng) < theta;
        gamma.push(included);
        phi.push(if included { T::sample_standard_normal(rng) } else { T::zero() });
    }
    let norm = norm2(&phi);
    if norm > T::zero() {
        for v in &mut phi {
            *v = *v / norm;
        }
    }
    PhiProposal { gamma, phi }
}

/// A coordinate axis chosen uniformly.
pub fn axis_aligned_phi<T: Real, R: Rng + ?Sized>(p_cont: usize, rng: &mut R) -> PhiProposal<T> {
    let axis = rng.random_range(0..p_cont);
    let mut gamma = vec![false; p_cont];
    let mut phi = vec![T::zero(); p_cont];
    gamma[axis] = true;
    phi[axis] = T::one();
    PhiProposal { gamma, phi }
}

/// Subset of `available` with each level kept independently with probability
/// one half. The boolean flags an empty `available` set, in which case the
/// rule sends every observation right.
pub fn draw_categorical_rule<T: Real, R: Rng + ?Sized>(
    available: &LevelSet,
    predictor: usize,
    rng: &mut R,
) -> (DecisionRule<T>, bool) {
    let subset: LevelSet = available.iter().copied().filter(|_| rng.random::<bool>()).collect();
    (DecisionRule::categorical(predictor, subset), available.is_empty())
}

/// Uniform on [lo, hi]; returns `lo` for a (numerically) point interval.
pub fn draw_cutpoint<T: Real, R: Rng + ?Sized>(lo: T, hi: T, rng: &mut R) -> Result<T> {
    if lo > hi + T::feasibility_tol() {
        return Err(Error::InvertedInterval {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    if hi - lo < T::norm_tol() {
        return Ok(lo);
    }
    Ok(T::sample_uniform(lo, hi, rng))
}

/// A rule drawn at a node, with a flag for rules that cannot split the
/// node's region (all-zero direction, empty polytope, or no levels left).
#[derive(Debug, Clone, PartialEq)]
pub struct RuleDraw<T> {
    pub rule: DecisionRule<T>,
    pub degenerate: bool,
}

/// Draws a rule for `node` of `tree` from the prior, conditional on the
/// node's ancestors.
pub fn draw_rule<T: Real, R: Rng + ?Sized>(
    tree: &DecisionTree<T>,
    node: NodeId,
    config: &EnsembleConfig<T>,
    theta: T,
    rng: &mut R,
) -> Result<RuleDraw<T>> {
    let schema = &config.schema;
    let kind = draw_rule_kind_with(config.categorical_probability().as_f64(), rng);
    if kind == RuleKind::Categorical {
        let j = rng.random_range(0..schema.p_cat());
        let available = available_levels(tree, node, j, schema)?;
        let (rule, degenerate) = draw_categorical_rule(&available, j, rng);
        return Ok(RuleDraw { rule, degenerate });
    }

    let p = schema.p_cont;
    let proposal = match config.mode {
        RuleMode::Oblique => draw_phi(theta, p, rng),
        RuleMode::AxisAligned => axis_aligned_phi(p, rng),
    };
    if proposal.is_all_zero() {
        return Ok(RuleDraw {
            rule: DecisionRule::all_zero(p),
            degenerate: true,
        });
    }
    let poly = leaf_polytope(tree, node, p)?;
    match phi_range(&poly, &proposal.phi)? {
        PhiRange::Interval { lo, hi } => {
            let cutpoint = draw_cutpoint(lo, hi, rng)?;
            Ok(RuleDraw {
                degenerate: hi - lo < T::norm_tol(),
                rule: DecisionRule::Continuous {
                    phi: proposal.phi,
                    cutpoint,
                },
            })
        }
        // Nothing reaches this node; any cutpoint describes the same split.
        PhiRange::Empty => Ok(RuleDraw {
            rule: DecisionRule::Continuous {
                phi: proposal.phi,
                cutpoint: T::zero(),
            },
            degenerate: true,
        }),
    }
}
