//! Scores, twists and alpha-trees.

mod score;
mod tree;

pub(crate) use score::softplus;
pub use score::{
    apply_alpha, clip_score, compose_alpha, logit, nlogit, sigmoid, AlphaValue, ClipBound, Score,
};
pub(crate) use tree::Node;
pub use tree::{
    wrap_chain, AlphaTree, FeatureValue, Leaf, LeafEffect, LeafId, NodeId, NodeRef, OwnedRecord,
    OwnedValue, Record, SplitTest, MIN_INVERTIBLE_ALPHA,
};
