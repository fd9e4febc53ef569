//! Leaf polytopes and the cutpoint interval of a direction over them.
//!
//! The region of continuous predictor space that reaches a node is the box
//! `[-1, 1]^p` intersected with one halfspace per continuous ancestor rule.
//! The valid cutpoints for a new direction `phi` at that node are the values
//! of `phi . x` over the region, found with two linear programs. The LPs work
//! on the closure of the region, so strict and weak ancestor inequalities
//! give the same interval.

use crate::error::{Error, Result};
use crate::real::{dot, Real};
use crate::simplex::{maximize, SimplexOutcome};
use crate::tree::{DecisionRule, DecisionTree, LevelSet, NodeId, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Less,
    LessEq,
    GreaterEq,
    Greater,
}

impl Sense {
    fn is_upper(self) -> bool {
        matches!(self, Self::Less | Self::LessEq)
    }
}

/// `normal . x <sense> offset`
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace<T> {
    pub normal: Vec<T>,
    pub offset: T,
    pub sense: Sense,
}

impl<T: Real> Halfspace<T> {
    pub fn new(normal: Vec<T>, offset: T, sense: Sense) -> Self {
        Self { normal, offset, sense }
    }

    /// Membership in the closed halfspace, up to `tol`.
    pub fn contains(&self, x: &[T], tol: T) -> bool {
        let v = dot(&self.normal, x);
        if self.sense.is_upper() {
            v <= self.offset + tol
        } else {
            v >= self.offset - tol
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafPolytope<T> {
    pub dim: usize,
    pub halfspaces: Vec<Halfspace<T>>,
}

impl<T: Real> LeafPolytope<T> {
    pub fn unit_box(dim: usize) -> Self {
        Self {
            dim,
            halfspaces: Vec::new(),
        }
    }

    pub fn push(&mut self, h: Halfspace<T>) {
        debug_assert_eq!(h.normal.len(), self.dim);
        self.halfspaces.push(h);
    }

    pub fn with(mut self, h: Halfspace<T>) -> Self {
        self.push(h);
        self
    }

    /// Membership in the closed polytope, up to `tol`.
    pub fn contains(&self, x: &[T], tol: T) -> bool {
        x.iter().all(|&v| v >= -T::one() - tol && v <= T::one() + tol) && self.halfspaces.iter().all(|h| h.contains(x, tol))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { value: T, point: Vec<T> },
    Empty,
}

/// Optimizes `objective . x` over the closure of the polytope.
pub fn lp_solve<T: Real>(poly: &LeafPolytope<T>, objective: &[T], direction: Direction) -> Result<LpOutcome<T>> {
    let p = poly.dim;
    if objective.len() != p {
        return Err(Error::Input(format!(
            "objective has {} entries for a {p}-dimensional polytope",
            objective.len()
        )));
    }
    if objective.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("objective must be finite".into()));
    }
    // Shift to y = x + 1 so the box becomes 0 <= y <= 2.
    let two = T::lit(2.0);
    let mut a = Vec::with_capacity(p + poly.halfspaces.len());
    let mut b = Vec::with_capacity(a.capacity());
    for i in 0..p {
        let mut row = vec![T::zero(); p];
        row[i] = T::one();
        a.push(row);
        b.push(two);
    }
    for h in &poly.halfspaces {
        let shift: T = h.normal.iter().copied().sum();
        if h.sense.is_upper() {
            a.push(h.normal.clone());
            b.push(h.offset + shift);
        } else {
            a.push(h.normal.iter().map(|&v| -v).collect());
            b.push(-(h.offset + shift));
        }
    }
    let c: Vec<T> = match direction {
        Direction::Maximize => objective.to_vec(),
        Direction::Minimize => objective.iter().map(|&v| -v).collect(),
    };
    match maximize(&a, &b, &c)? {
        SimplexOutcome::Infeasible => Ok(LpOutcome::Empty),
        SimplexOutcome::Optimal(y) => {
            let tol = T::feasibility_tol();
            let point: Vec<T> = y
                .into_iter()
                .map(|v| {
                    let x = v - T::one();
                    if x > T::one() && x <= T::one() + tol {
                        T::one()
                    } else if x < -T::one() && x >= -T::one() - tol {
                        -T::one()
                    } else {
                        x
                    }
                })
                .collect();
            Ok(LpOutcome::Optimal {
                value: dot(objective, &point),
                point,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiRange<T> {
    Interval { lo: T, hi: T },
    Empty,
}

/// Range of `phi . x` over the polytope.
pub fn phi_range<T: Real>(poly: &LeafPolytope<T>, phi: &[T]) -> Result<PhiRange<T>> {
    if phi.iter().all(|v| v.is_zero()) {
        return Err(Error::Input("phi_range needs a nonzero direction".into()));
    }
    let lo = match lp_solve(poly, phi, Direction::Minimize)? {
        LpOutcome::Empty => return Ok(PhiRange::Empty),
        LpOutcome::Optimal { value, .. } => value,
    };
    let hi = match lp_solve(poly, phi, Direction::Maximize)? {
        LpOutcome::Empty => return Ok(PhiRange::Empty),
        LpOutcome::Optimal { value, .. } => value,
    };
    if lo > hi {
        if lo - hi > T::feasibility_tol() {
            return Err(Error::InvertedInterval {
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        return Ok(PhiRange::Interval { lo, hi: lo });
    }
    Ok(PhiRange::Interval { lo, hi })
}

/// Box plus one halfspace per continuous ancestor of `node`: left branches
/// contribute `phi . x < c`, right branches `phi . x >= c`.
pub fn leaf_polytope<T: Real>(tree: &DecisionTree<T>, node: NodeId, p_cont: usize) -> Result<LeafPolytope<T>> {
    let mut poly = LeafPolytope::unit_box(p_cont);
    for step in tree.path_to(node)? {
        if let Some(DecisionRule::Continuous { phi, cutpoint }) = tree.rule(step.ancestor) {
            let sense = if step.went_left { Sense::Less } else { Sense::GreaterEq };
            poly.push(Halfspace::new(phi.clone(), *cutpoint, sense));
        }
    }
    Ok(poly)
}

/// Levels of categorical predictor `j` that can still reach `node`.
pub fn available_levels<T: Real>(tree: &DecisionTree<T>, node: NodeId, j: usize, schema: &Schema) -> Result<LevelSet> {
    if j >= schema.p_cat() {
        return Err(Error::Input(format!(
            "categorical predictor {j} out of range ({} declared)",
            schema.p_cat()
        )));
    }
    let mut available = schema.levels(j);
    for step in tree.path_to(node)? {
        if let Some(DecisionRule::Categorical { predictor, levels }) = tree.rule(step.ancestor) {
            if *predictor == j {
                if step.went_left {
                    available.retain(|l| levels.contains(l));
                } else {
                    available.retain(|l| !levels.contains(l));
                }
            }
        }
    }
    Ok(available)
}
