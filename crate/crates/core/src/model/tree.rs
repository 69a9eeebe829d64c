//! Binary alpha-trees: axis tests at internal nodes, twist multipliers at leaves.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::score::{apply_alpha, compose_alpha, AlphaValue, Score};

/// Smallest magnitude a leaf alpha may have and still be inverted.
pub const MIN_INVERTIBLE_ALPHA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureValue<'a> {
    Numeric(f64),
    Categorical(&'a str),
}

impl FeatureValue<'_> {
    pub(crate) fn kind_name(&self) -> &'static str {
        match self {
            FeatureValue::Numeric(_) => "numeric",
            FeatureValue::Categorical(_) => "categorical",
        }
    }
}

/// Anything a tree can route: named feature lookup.
pub trait Record {
    fn feature(&self, name: &str) -> Option<FeatureValue<'_>>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum OwnedValue {
    Numeric(f64),
    Categorical(String),
}

/// A standalone record, handy for tests and one-off evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OwnedRecord(pub BTreeMap<String, OwnedValue>);

impl OwnedRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn numeric(mut self, name: &str, v: f64) -> Self {
        self.0.insert(name.to_string(), OwnedValue::Numeric(v));
        self
    }

    pub fn categorical(mut self, name: &str, v: &str) -> Self {
        self.0
            .insert(name.to_string(), OwnedValue::Categorical(v.to_string()));
        self
    }
}

impl Record for OwnedRecord {
    fn feature(&self, name: &str) -> Option<FeatureValue<'_>> {
        self.0.get(name).map(|v| match v {
            OwnedValue::Numeric(x) => FeatureValue::Numeric(*x),
            OwnedValue::Categorical(s) => FeatureValue::Categorical(s),
        })
    }
}

/// Records that satisfy the test go left.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitTest {
    /// `feature == modality`
    Category { feature: String, modality: String },
    /// `feature <= threshold`
    Threshold { feature: String, threshold: f64 },
}

impl SplitTest {
    pub fn feature(&self) -> &str {
        match self {
            SplitTest::Category { feature, .. } | SplitTest::Threshold { feature, .. } => feature,
        }
    }

    pub fn passes(&self, value: FeatureValue<'_>) -> Result<bool> {
        match (self, value) {
            (SplitTest::Category { modality, .. }, FeatureValue::Categorical(v)) => {
                Ok(v == modality)
            }
            (SplitTest::Threshold { threshold, .. }, FeatureValue::Numeric(x)) => {
                Ok(x <= *threshold)
            }
            (SplitTest::Category { feature, .. }, v) => Err(Error::FeatureKind {
                feature: feature.clone(),
                expected: "categorical",
                found: v.kind_name(),
            }),
            (SplitTest::Threshold { feature, .. }, v) => Err(Error::FeatureKind {
                feature: feature.clone(),
                expected: "numeric",
                found: v.kind_name(),
            }),
        }
    }

    pub fn evaluate(&self, x: &dyn Record) -> Result<bool> {
        let v = x
            .feature(self.feature())
            .ok_or_else(|| Error::MissingFeature(self.feature().to_string()))?;
        self.passes(v)
    }
}

impl fmt::Display for SplitTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitTest::Category { feature, modality } => write!(f, "{feature} == {modality}"),
            SplitTest::Threshold { feature, threshold } => write!(f, "{feature} <= {threshold}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LeafId(pub u32);

impl fmt::Display for LeafId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Leaf payload. `edge` and `mass` describe the measure the alpha was fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub id: LeafId,
    pub alpha: AlphaValue,
    pub edge: f64,
    pub mass: f64,
}

/// What a leaf's twist does to the black-box score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafEffect {
    Identity,
    /// `alpha > 1`: pushes scores away from 1/2.
    Sharpening,
    /// `0 < alpha < 1`: pulls scores toward 1/2.
    Dampening,
    /// `alpha = 0`: every score becomes 1/2.
    Flattening,
    /// `alpha < 0`.
    PolarityReversing,
}

impl LeafEffect {
    pub fn as_str(self) -> &'static str {
        match self {
            LeafEffect::Identity => "identity",
            LeafEffect::Sharpening => "sharpening",
            LeafEffect::Dampening => "dampening",
            LeafEffect::Flattening => "flattening",
            LeafEffect::PolarityReversing => "polarity-reversing",
        }
    }
}

impl Leaf {
    pub fn effect(&self) -> LeafEffect {
        let a = self.alpha.get();
        if a == 1.0 {
            LeafEffect::Identity
        } else if a > 1.0 {
            LeafEffect::Sharpening
        } else if a > 0.0 {
            LeafEffect::Dampening
        } else if a == 0.0 {
            LeafEffect::Flattening
        } else {
            LeafEffect::PolarityReversing
        }
    }

    fn fresh(id: LeafId, alpha: AlphaValue) -> Self {
        Leaf {
            id,
            alpha,
            edge: 0.0,
            mass: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Split {
        test: SplitTest,
        left: usize,
        right: usize,
    },
    Leaf(Leaf),
}

/// Arena-backed binary tree. Node 0 is the root.
///
/// Equality is structural: arena layout and the id counter are ignored.
#[derive(Debug, Clone)]
pub struct AlphaTree {
    pub(crate) nodes: Vec<Node>,
    pub(crate) next_leaf: u32,
}

impl PartialEq for AlphaTree {
    fn eq(&self, other: &Self) -> bool {
        fn same(a: &AlphaTree, i: usize, b: &AlphaTree, j: usize) -> bool {
            match (&a.nodes[i], &b.nodes[j]) {
                (
                    Node::Split {
                        test: ta,
                        left: la,
                        right: ra,
                    },
                    Node::Split {
                        test: tb,
                        left: lb,
                        right: rb,
                    },
                ) => ta == tb && same(a, *la, b, *lb) && same(a, *ra, b, *rb),
                (Node::Leaf(x), Node::Leaf(y)) => x == y,
                _ => false,
            }
        }
        same(self, 0, other, 0)
    }
}

impl Default for AlphaTree {
    fn default() -> Self {
        Self::identity()
    }
}

/// Borrowed view of a node for traversal.
#[derive(Debug, Clone, Copy)]
pub enum NodeRef<'a> {
    Split {
        test: &'a SplitTest,
        left: NodeId,
        right: NodeId,
    },
    Leaf(&'a Leaf),
}

/// Opaque node handle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

impl AlphaTree {
    /// Single leaf with `alpha = 1`.
    pub fn identity() -> Self {
        Self::constant(AlphaValue::IDENTITY)
    }

    pub fn constant(alpha: AlphaValue) -> Self {
        AlphaTree {
            nodes: vec![Node::Leaf(Leaf::fresh(LeafId(0), alpha))],
            next_leaf: 1,
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, handle: NodeId) -> NodeRef<'_> {
        match &self.nodes[handle.0] {
            Node::Split { test, left, right } => NodeRef::Split {
                test,
                left: NodeId(*left),
                right: NodeId(*right),
            },
            Node::Leaf(l) => NodeRef::Leaf(l),
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            match &self.nodes[i] {
                Node::Split { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
                Node::Leaf(l) => out.push(l),
            }
        }
        out
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }

    /// Number of tests on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
                Node::Leaf(_) => 0,
            }
        }
        go(&self.nodes, 0)
    }

    fn leaf_index(&self, id: LeafId) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| matches!(n, Node::Leaf(l) if l.id == id))
            .ok_or(Error::UnknownLeaf(id.0))
    }

    pub fn leaf(&self, id: LeafId) -> Result<&Leaf> {
        match &self.nodes[self.leaf_index(id)?] {
            Node::Leaf(l) => Ok(l),
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn set_leaf(&mut self, id: LeafId, alpha: AlphaValue, edge: f64, mass: f64) -> Result<()> {
        let i = self.leaf_index(id)?;
        if let Node::Leaf(l) = &mut self.nodes[i] {
            l.alpha = alpha;
            l.edge = edge;
            l.mass = mass;
        }
        Ok(())
    }

    /// Replaces a leaf by a test whose children inherit the leaf's alpha.
    /// Returns the new (left, right) leaf ids.
    pub fn split_leaf(&mut self, id: LeafId, test: SplitTest) -> Result<(LeafId, LeafId)> {
        let i = self.leaf_index(id)?;
        let alpha = match &self.nodes[i] {
            Node::Leaf(l) => l.alpha,
            Node::Split { .. } => unreachable!(),
        };
        let next = self
            .next_leaf
            .checked_add(2)
            .ok_or_else(|| Error::ModelFormat("leaf id space exhausted".into()))?;
        let (lid, rid) = (LeafId(self.next_leaf), LeafId(self.next_leaf + 1));
        self.next_leaf = next;
        let left = self.nodes.len();
        self.nodes.push(Node::Leaf(Leaf::fresh(lid, alpha)));
        self.nodes.push(Node::Leaf(Leaf::fresh(rid, alpha)));
        self.nodes[i] = Node::Split {
            test,
            left,
            right: left + 1,
        };
        Ok((lid, rid))
    }

    /// The leaf reached by `x`.
    pub fn route(&self, x: &dyn Record) -> Result<&Leaf> {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { test, left, right } => {
                    i = if test.evaluate(x)? { *left } else { *right };
                }
                Node::Leaf(l) => return Ok(l),
            }
        }
    }

    pub fn evaluate(&self, x: &dyn Record) -> Result<AlphaValue> {
        Ok(self.route(x)?.alpha)
    }

    /// `sigma(alpha(x) * logit(q))`.
    pub fn wrap(&self, x: &dyn Record, q: Score) -> Result<Score> {
        apply_alpha(q, self.evaluate(x)?)
    }

    /// A tree computing `1 / alpha` at every leaf.
    pub fn invert(&self) -> Result<AlphaTree> {
        let mut out = self.clone();
        for n in &mut out.nodes {
            if let Node::Leaf(l) = n {
                if l.alpha.get().abs() < MIN_INVERTIBLE_ALPHA {
                    return Err(Error::NonInvertible {
                        leaf: l.id.0,
                        alpha: l.alpha.get(),
                    });
                }
                l.alpha = AlphaValue::new(1.0 / l.alpha.get())?;
            }
        }
        Ok(out)
    }

    /// Rebuilds from raw nodes, keeping leaf ids.
    pub(crate) fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        let mut max_id = None::<u32>;
        let mut seen = std::collections::BTreeSet::new();
        for n in &nodes {
            if let Node::Leaf(l) = n {
                if !seen.insert(l.id) {
                    return Err(Error::ModelFormat(format!("duplicate leaf id {}", l.id)));
                }
                max_id = Some(max_id.map_or(l.id.0, |m: u32| m.max(l.id.0)));
            }
        }
        let next_leaf = max_id
            .and_then(|m| m.checked_add(1))
            .ok_or_else(|| Error::ModelFormat("leaf id space exhausted".into()))?;
        Ok(AlphaTree { nodes, next_leaf })
    }
}

/// Applies trees in order. Equivalent to one twist by the product of alphas.
pub fn wrap_chain(trees: &[&AlphaTree], x: &dyn Record, q: Score) -> Result<Score> {
    let mut alpha = AlphaValue::IDENTITY;
    for t in trees {
        alpha = compose_alpha(alpha, t.evaluate(x)?);
    }
    apply_alpha(q, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn leaf_effects() {
        let kind = |a: f64| Leaf::fresh(LeafId(0), AlphaValue::new(a).unwrap()).effect();
        assert_eq!(kind(1.0), LeafEffect::Identity);
        assert_eq!(kind(1.5), LeafEffect::Sharpening);
        assert_eq!(kind(0.5), LeafEffect::Dampening);
        assert_eq!(kind(0.0), LeafEffect::Flattening);
        assert_eq!(kind(-0.2), LeafEffect::PolarityReversing);
    }

    fn stump() -> AlphaTree {
        let mut t = AlphaTree::identity();
        let (l, r) = t
            .split_leaf(
                LeafId(0),
                SplitTest::Category {
                    feature: "s".into(),
                    modality: "a".into(),
                },
            )
            .unwrap();
        t.set_leaf(l, AlphaValue::new(2.0).unwrap(), 0.0, 0.0)
            .unwrap();
        t.set_leaf(r, AlphaValue::new(0.5).unwrap(), 0.0, 0.0)
            .unwrap();
        t
    }

    #[test]
    fn identity_tree_is_exact() {
        let t = AlphaTree::identity();
        let q = Score::new(0.37).unwrap();
        assert_eq!(t.wrap(&OwnedRecord::new(), q).unwrap(), q);
    }

    #[test]
    fn stump_routes_by_modality() {
        let t = stump();
        let a = OwnedRecord::new().categorical("s", "a");
        let b = OwnedRecord::new().categorical("s", "b");
        assert_eq!(t.evaluate(&a).unwrap().get(), 2.0);
        assert_eq!(t.evaluate(&b).unwrap().get(), 0.5);
        assert_abs_diff_eq!(
            t.wrap(&a, Score::new(0.7).unwrap()).unwrap().value(),
            0.844828,
            epsilon = 1e-6
        );
    }

    #[test]
    fn depth_two_thresholds() {
        let mut t = AlphaTree::identity();
        let th = |v| SplitTest::Threshold {
            feature: "x".into(),
            threshold: v,
        };
        let (l, r) = t.split_leaf(LeafId(0), th(0.3)).unwrap();
        let (rl, rr) = t.split_leaf(r, th(0.6)).unwrap();
        t.set_leaf(l, AlphaValue::new(1.0).unwrap(), 0.0, 0.0)
            .unwrap();
        t.set_leaf(rl, AlphaValue::new(3.0).unwrap(), 0.0, 0.0)
            .unwrap();
        t.set_leaf(rr, AlphaValue::new(-1.0).unwrap(), 0.0, 0.0)
            .unwrap();
        let x = OwnedRecord::new().numeric("x", 0.5);
        assert_eq!(t.route(&x).unwrap().id, rl);
        assert_eq!(t.depth(), 2);
        assert_eq!(t.n_leaves(), 3);
        let ids: Vec<_> = t.leaves().iter().map(|l| l.id).collect();
        assert_eq!(ids, vec![l, rl, rr]);
    }

    #[test]
    fn routing_errors() {
        let t = stump();
        assert!(matches!(
            t.evaluate(&OwnedRecord::new()),
            Err(Error::MissingFeature(_))
        ));
        assert!(matches!(
            t.evaluate(&OwnedRecord::new().numeric("s", 1.0)),
            Err(Error::FeatureKind { .. })
        ));
    }

    #[test]
    fn inversion() {
        let t = stump();
        let inv = t.invert().unwrap();
        let x = OwnedRecord::new().categorical("s", "b");
        let q = Score::new(0.8).unwrap();
        let back = wrap_chain(&[&t, &inv], &x, q).unwrap();
        assert_abs_diff_eq!(back.value(), 0.8, epsilon = 1e-12);
        let zero = AlphaTree::constant(AlphaValue::new(0.0).unwrap());
        assert!(matches!(zero.invert(), Err(Error::NonInvertible { .. })));
    }

    #[test]
    fn chain_matches_product() {
        let t = stump();
        let x = OwnedRecord::new().categorical("s", "a");
        let q = Score::new(0.6).unwrap();
        let chained = wrap_chain(&[&t, &t], &x, q).unwrap();
        let direct = apply_alpha(q, AlphaValue::new(4.0).unwrap()).unwrap();
        assert_eq!(chained.value(), direct.value());
    }
}
