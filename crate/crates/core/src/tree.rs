//! Decision trees with oblique and categorical-subset rules.
//!
//! A tree is an arena of nodes keyed by [`NodeId`]. Ids are handed out from a
//! monotone counter and never reused, so a proposal can refer to a node by id
//! across edits without worrying about aliasing.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::real::{dot, norm2, Real};

pub type NodeId = u32;

/// A set of categorical level codes.
pub type LevelSet = BTreeSet<u32>;

/// Level code used for categorical values never seen in training. It is never
/// a member of any rule's level subset, so it always routes right.
pub const UNSEEN_LEVEL: u32 = u32::MAX;

/// Shape of a predictor vector: the number of continuous coordinates and the
/// declared level count of each categorical predictor.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    pub p_cont: usize,
    pub level_counts: Vec<u32>,
}

impl Schema {
    pub fn new(p_cont: usize, level_counts: Vec<u32>) -> Self {
        Self { p_cont, level_counts }
    }

    pub fn continuous(p_cont: usize) -> Self {
        Self::new(p_cont, Vec::new())
    }

    #[inline]
    pub fn p_cat(&self) -> usize {
        self.level_counts.len()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p_cont + self.p_cat()
    }

    /// Full declared level set of categorical predictor `j`.
    pub fn levels(&self, j: usize) -> LevelSet {
        (0..self.level_counts[j]).collect()
    }

    pub fn validate<T: Real>(&self, x: Observation<'_, T>) -> Result<()> {
        if x.cont.len() != self.p_cont {
            return Err(Error::Input(format!(
                "expected {} continuous predictors, got {}",
                self.p_cont,
                x.cont.len()
            )));
        }
        if x.cat.len() != self.p_cat() {
            return Err(Error::Input(format!(
                "expected {} categorical predictors, got {}",
                self.p_cat(),
                x.cat.len()
            )));
        }
        for (j, (&code, &count)) in x.cat.iter().zip(&self.level_counts).enumerate() {
            if code != UNSEEN_LEVEL && code >= count {
                return Err(Error::Input(format!(
                    "level code {code} of categorical predictor {j} is outside its {count} declared levels"
                )));
            }
        }
        Ok(())
    }
}

/// Borrowed predictor vector: continuous block then categorical level codes.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a, T> {
    pub cont: &'a [T],
    pub cat: &'a [u32],
}

impl<'a, T> Observation<'a, T> {
    pub fn new(cont: &'a [T], cat: &'a [u32]) -> Self {
        Self { cont, cat }
    }

    pub fn continuous(cont: &'a [T]) -> Self {
        Self { cont, cat: &[] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecisionRule<T> {
    /// `phi . x_cont < cutpoint` goes left.
    Continuous { phi: Vec<T>, cutpoint: T },
    /// `x_cat[predictor] in levels` goes left.
    Categorical { predictor: usize, levels: LevelSet },
}

impl<T: Real> DecisionRule<T> {
    /// Builds a continuous rule, checking that `phi` is unit-norm or all-zero
    /// and that an all-zero `phi` carries the cutpoint 1.
    pub fn continuous(phi: Vec<T>, cutpoint: T) -> Result<Self> {
        if phi.iter().all(|v| v.is_zero()) {
            if cutpoint != T::one() {
                return Err(Error::Config("all-zero direction requires cutpoint 1".into()));
            }
        } else if (norm2(&phi) - T::one()).abs() > T::norm_tol() {
            return Err(Error::Config(format!(
                "direction must have unit norm, got {}",
                norm2(&phi)
            )));
        }
        if !cutpoint.is_finite() {
            return Err(Error::Config("cutpoint must be finite".into()));
        }
        Ok(Self::Continuous { phi, cutpoint })
    }

    /// The rule `0 . x < 1` that sends every observation left.
    pub fn all_zero(p_cont: usize) -> Self {
        Self::Continuous {
            phi: vec![T::zero(); p_cont],
            cutpoint: T::one(),
        }
    }

    pub fn categorical(predictor: usize, levels: LevelSet) -> Self {
        Self::Categorical { predictor, levels }
    }

    #[inline]
    pub fn goes_left(&self, x: Observation<'_, T>) -> bool {
        match self {
            Self::Continuous { phi, cutpoint } => dot(phi, x.cont) < *cutpoint,
            Self::Categorical { predictor, levels } => levels.contains(&x.cat[*predictor]),
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Self::Continuous { .. })
    }

    /// Number of nonzero direction entries; `None` for categorical rules.
    pub fn nonzero_count(&self) -> Option<usize> {
        match self {
            Self::Continuous { phi, .. } => Some(phi.iter().filter(|v| !v.is_zero()).count()),
            Self::Categorical { .. } => None,
        }
    }

    /// Continuous rule whose direction has exactly one nonzero entry.
    pub fn is_axis_aligned(&self) -> bool {
        self.nonzero_count() == Some(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind<T> {
    /// `output` is `None` between a structural edit and the next leaf draw.
    Leaf { output: Option<T> },
    Decision {
        rule: DecisionRule<T>,
        left: NodeId,
        right: NodeId,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode<T> {
    pub depth: u32,
    pub parent: Option<NodeId>,
    pub kind: NodeKind<T>,
}

impl<T> TreeNode<T> {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }
}

/// One step of a root-to-node path: the ancestor and the branch taken out of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStep {
    pub ancestor: NodeId,
    pub went_left: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree<T> {
    nodes: BTreeMap<NodeId, TreeNode<T>>,
    root: NodeId,
    next_id: NodeId,
}

impl<T: Real> Default for DecisionTree<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> DecisionTree<T> {
    /// Root-only tree whose single leaf has no output yet.
    pub fn new() -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(
            0,
            TreeNode {
                depth: 0,
                parent: None,
                kind: NodeKind::Leaf { output: None },
            },
        );
        Self {
            nodes,
            root: 0,
            next_id: 1,
        }
    }

    /// Root-only tree with output `mu`.
    pub fn constant(mu: T) -> Self {
        let mut tree = Self::new();
        tree.set_output(0, mu).expect("root is a leaf");
        tree
    }

    #[inline]
    pub fn root(&self) -> NodeId {
        self.root
    }

    #[inline]
    pub fn node(&self, id: NodeId) -> Option<&TreeNode<T>> {
        self.nodes.get(&id)
    }

    fn node_or_err(&self, id: NodeId) -> Result<&TreeNode<T>> {
        self.nodes.get(&id).ok_or_else(|| Error::Structure {
            node: id,
            reason: "no such node".into(),
        })
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes.get(&id).is_some_and(TreeNode::is_leaf)
    }

    /// Decision node whose children are both leaves.
    pub fn is_nog(&self, id: NodeId) -> bool {
        match self.nodes.get(&id).map(|n| &n.kind) {
            Some(NodeKind::Decision { left, right, .. }) => self.is_leaf(*left) && self.is_leaf(*right),
            _ => false,
        }
    }

    pub fn depth(&self, id: NodeId) -> Option<u32> {
        self.nodes.get(&id).map(|n| n.depth)
    }

    pub fn rule(&self, id: NodeId) -> Option<&DecisionRule<T>> {
        match &self.nodes.get(&id)?.kind {
            NodeKind::Decision { rule, .. } => Some(rule),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn children(&self, id: NodeId) -> Option<(NodeId, NodeId)> {
        match &self.nodes.get(&id)?.kind {
            NodeKind::Decision { left, right, .. } => Some((*left, *right)),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Leaf ids in ascending order.
    pub fn leaf_ids(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|(_, n)| n.is_leaf())
            .map(|(&id, _)| id)
            .collect()
    }

    /// Nog ids (decision nodes without grandchildren) in ascending order.
    pub fn nog_ids(&self) -> Vec<NodeId> {
        self.nodes.keys().copied().filter(|&id| self.is_nog(id)).collect()
    }

    pub fn nleaf(&self) -> usize {
        self.nodes.values().filter(|n| n.is_leaf()).count()
    }

    pub fn nnog(&self) -> usize {
        self.nodes.keys().filter(|&&id| self.is_nog(id)).count()
    }

    pub fn num_decisions(&self) -> usize {
        self.nodes.len() - self.nleaf()
    }

    /// Largest leaf depth; 0 for a root-only tree.
    pub fn height(&self) -> u32 {
        self.nodes
            .values()
            .filter(|n| n.is_leaf())
            .map(|n| n.depth)
            .max()
            .unwrap_or(0)
    }

    pub fn rules(&self) -> impl Iterator<Item = &DecisionRule<T>> {
        self.nodes.values().filter_map(|n| match &n.kind {
            NodeKind::Decision { rule, .. } => Some(rule),
            NodeKind::Leaf { .. } => None,
        })
    }

    pub fn output(&self, leaf: NodeId) -> Option<T> {
        match self.nodes.get(&leaf)?.kind {
            NodeKind::Leaf { output } => output,
            NodeKind::Decision { .. } => None,
        }
    }

    pub fn set_output(&mut self, leaf: NodeId, mu: T) -> Result<()> {
        match self.nodes.get_mut(&leaf).map(|n| &mut n.kind) {
            Some(NodeKind::Leaf { output }) => {
                *output = Some(mu);
                Ok(())
            }
            _ => Err(Error::Structure {
                node: leaf,
                reason: "not a leaf".into(),
            }),
        }
    }

    /// Root-to-node path, listing each ancestor and the branch taken out of it.
    pub fn path_to(&self, id: NodeId) -> Result<Vec<PathStep>> {
        self.node_or_err(id)?;
        let mut steps = Vec::new();
        let mut current = id;
        while let Some(parent) = self.nodes[&current].parent {
            let (left, _) = self.children(parent).expect("parent is a decision node");
            steps.push(PathStep {
                ancestor: parent,
                went_left: left == current,
            });
            current = parent;
        }
        steps.reverse();
        Ok(steps)
    }

    /// Follows decisions without validating `x` against a schema.
    #[inline]
    pub fn leaf_of(&self, x: Observation<'_, T>) -> NodeId {
        let mut id = self.root;
        loop {
            match &self.nodes[&id].kind {
                NodeKind::Leaf { .. } => return id,
                NodeKind::Decision { rule, left, right } => {
                    id = if rule.goes_left(x) { *left } else { *right };
                }
            }
        }
    }

    /// Leaf reached by `x`.
    pub fn traverse(&self, x: Observation<'_, T>, schema: &Schema) -> Result<NodeId> {
        schema.validate(x)?;
        Ok(self.leaf_of(x))
    }

    /// Output of the leaf reached by `x`.
    pub fn evaluate(&self, x: Observation<'_, T>, schema: &Schema) -> Result<T> {
        let leaf = self.traverse(x, schema)?;
        self.output(leaf).ok_or(Error::UnsetLeaf(leaf))
    }

    /// Turns `leaf` into a decision node with two fresh, output-less leaves.
    /// Returns the (left, right) child ids.
    pub fn grow(&mut self, leaf: NodeId, rule: DecisionRule<T>) -> Result<(NodeId, NodeId)> {
        let node = self.node_or_err(leaf)?;
        if !node.is_leaf() {
            return Err(Error::Structure {
                node: leaf,
                reason: "grow target is not a leaf".into(),
            });
        }
        let depth = node.depth + 1;
        let (left, right) = (self.next_id, self.next_id + 1);
        self.next_id += 2;
        for id in [left, right] {
            self.nodes.insert(
                id,
                TreeNode {
                    depth,
                    parent: Some(leaf),
                    kind: NodeKind::Leaf { output: None },
                },
            );
        }
        self.nodes.get_mut(&leaf).expect("checked above").kind = NodeKind::Decision { rule, left, right };
        Ok((left, right))
    }

    /// Collapses a nog node into an output-less leaf, discarding its rule.
    pub fn prune(&mut self, nog: NodeId) -> Result<DecisionRule<T>> {
        self.node_or_err(nog)?;
        if !self.is_nog(nog) {
            return Err(Error::Structure {
                node: nog,
                reason: "prune target is not a decision node with two leaf children".into(),
            });
        }
        let node = self.nodes.get_mut(&nog).expect("checked above");
        let kind = std::mem::replace(&mut node.kind, NodeKind::Leaf { output: None });
        let NodeKind::Decision { rule, left, right } = kind else {
            unreachable!("nog nodes are decision nodes")
        };
        self.nodes.remove(&left);
        self.nodes.remove(&right);
        Ok(rule)
    }

    /// Node ids in pre-order (node, left subtree, right subtree).
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            order.push(id);
            if let Some((left, right)) = self.children(id) {
                stack.push(right);
                stack.push(left);
            }
        }
        order
    }

    /// Same topology and rules, ignoring node ids and leaf outputs.
    pub fn same_shape(&self, other: &Self) -> bool {
        let a = self.preorder();
        let b = other.preorder();
        a.len() == b.len()
            && a.iter().zip(&b).all(|(&x, &y)| match (&self.nodes[&x].kind, &other.nodes[&y].kind) {
                (NodeKind::Leaf { .. }, NodeKind::Leaf { .. }) => true,
                (NodeKind::Decision { rule: r1, .. }, NodeKind::Decision { rule: r2, .. }) => r1 == r2,
                _ => false,
            })
    }

    /// Rebuilds a tree from pre-order node kinds (children ids are ignored and
    /// reassigned). Used by the text format.
    pub(crate) fn from_preorder(kinds: Vec<PreorderNode<T>>) -> Result<Self> {
        let mut iter = kinds.into_iter();
        let mut tree = Self {
            nodes: BTreeMap::new(),
            root: 0,
            next_id: 0,
        };
        tree.build_subtree(&mut iter, None, 0)?;
        if iter.next().is_some() {
            return Err(Error::Parse {
                line: 0,
                reason: "trailing nodes after a complete tree".into(),
            });
        }
        Ok(tree)
    }

    fn build_subtree(
        &mut self,
        iter: &mut impl Iterator<Item = PreorderNode<T>>,
        parent: Option<NodeId>,
        depth: u32,
    ) -> Result<NodeId> {
        let id = self.next_id;
        self.next_id += 1;
        let next = iter.next().ok_or_else(|| Error::Parse {
            line: 0,
            reason: "tree ended before all decision nodes had two children".into(),
        })?;
        match next {
            PreorderNode::Leaf(output) => {
                self.nodes.insert(
                    id,
                    TreeNode {
                        depth,
                        parent,
                        kind: NodeKind::Leaf { output },
                    },
                );
            }
            PreorderNode::Decision(rule) => {
                // Insert a placeholder so children can see their parent.
                self.nodes.insert(
                    id,
                    TreeNode {
                        depth,
                        parent,
                        kind: NodeKind::Leaf { output: None },
                    },
                );
                let left = self.build_subtree(iter, Some(id), depth + 1)?;
                let right = self.build_subtree(iter, Some(id), depth + 1)?;
                self.nodes.get_mut(&id).expect("inserted above").kind = NodeKind::Decision { rule, left, right };
            }
        }
        Ok(id)
    }
}

/// Pre-order record used when (de)serializing a tree.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum PreorderNode<T> {
    Decision(DecisionRule<T>),
    Leaf(Option<T>),
}
