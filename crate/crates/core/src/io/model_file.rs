//! Versioned JSON model files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boosting::{InductionConfig, Scoring};
use crate::error::{Error, Result};
use crate::fairness::StrategySpec;
use crate::model::{AlphaTree, AlphaValue, ClipBound, Leaf, LeafId, Node, SplitTest};

pub const FORMAT_VERSION: u32 = 1;

/// Deepest tree a model file may hold; keeps nesting within the JSON parser's limit.
pub const MAX_DEPTH: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub strategy: String,
    pub config_digest: String,
    pub iterations: usize,
}

impl Provenance {
    /// Records the strategy and a digest of the full training configuration.
    pub fn new(strategy: &StrategySpec, induction: &InductionConfig, iterations: usize) -> Self {
        let text = serde_json::to_string(&(strategy, induction)).expect("configs serialize");
        let digest = Sha256::digest(text.as_bytes());
        let config_digest = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        Provenance {
            strategy: strategy.name().to_string(),
            config_digest,
            iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub clip: ClipBound,
    pub scoring: Scoring,
    pub provenance: Provenance,
    pub tree: AlphaTree,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRepr {
    format_version: u32,
    clip_b: f64,
    scoring: Scoring,
    provenance: Provenance,
    tree: NodeRepr,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum NodeRepr {
    Split {
        test: TestRepr,
        left: Box<NodeRepr>,
        right: Box<NodeRepr>,
    },
    Leaf {
        id: u32,
        alpha: f64,
        edge: f64,
        mass: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TestRepr {
    Category { feature: String, modality: String },
    Threshold { feature: String, threshold: f64 },
}

fn to_repr(tree: &AlphaTree, i: usize) -> NodeRepr {
    match &tree.nodes[i] {
        Node::Split { test, left, right } => NodeRepr::Split {
            test: match test {
                SplitTest::Category { feature, modality } => TestRepr::Category {
                    feature: feature.clone(),
                    modality: modality.clone(),
                },
                SplitTest::Threshold { feature, threshold } => TestRepr::Threshold {
                    feature: feature.clone(),
                    threshold: *threshold,
                },
            },
            left: Box::new(to_repr(tree, *left)),
            right: Box::new(to_repr(tree, *right)),
        },
        Node::Leaf(l) => NodeRepr::Leaf {
            id: l.id.0,
            alpha: l.alpha.get(),
            edge: l.edge,
            mass: l.mass,
        },
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::ModelFormat(format!("{what} is not finite")))
    }
}

fn from_repr(repr: NodeRepr, nodes: &mut Vec<Node>) -> Result<usize> {
    let at = nodes.len();
    match repr {
        NodeRepr::Leaf {
            id,
            alpha,
            edge,
            mass,
        } => {
            let alpha = AlphaValue::new(alpha).map_err(|e| Error::ModelFormat(e.to_string()))?;
            nodes.push(Node::Leaf(Leaf {
                id: LeafId(id),
                alpha,
                edge: finite(edge, "edge")?,
                mass: finite(mass, "mass")?,
            }));
        }
        NodeRepr::Split { test, left, right } => {
            let test = match test {
                TestRepr::Category { feature, modality } => {
                    SplitTest::Category { feature, modality }
                }
                TestRepr::Threshold { feature, threshold } => SplitTest::Threshold {
                    feature,
                    threshold: finite(threshold, "threshold")?,
                },
            };
            nodes.push(Node::Split {
                test,
                left: 0,
                right: 0,
            });
            let l = from_repr(*left, nodes)?;
            let r = from_repr(*right, nodes)?;
            if let Node::Split { left, right, .. } = &mut nodes[at] {
                *left = l;
                *right = r;
            }
        }
    }
    Ok(at)
}

impl ModelFile {
    pub fn to_json(&self) -> Result<String> {
        if self.tree.depth() > MAX_DEPTH {
            return Err(Error::ModelFormat(format!(
                "tree depth {} exceeds {MAX_DEPTH}",
                self.tree.depth()
            )));
        }
        let repr = FileRepr {
            format_version: FORMAT_VERSION,
            clip_b: self.clip.get(),
            scoring: self.scoring,
            provenance: self.provenance.clone(),
            tree: to_repr(&self.tree, 0),
        };
        let mut s = serde_json::to_string_pretty(&repr)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(Error::ModelFormat(format!(
                    "unsupported format version {v}"
                )))
            }
            None => return Err(Error::ModelFormat("missing format_version".into())),
        }
        let repr: FileRepr = serde_json::from_value(value)?;
        let clip = ClipBound::new(repr.clip_b).map_err(|e| Error::ModelFormat(e.to_string()))?;
        let mut nodes = Vec::new();
        from_repr(repr.tree, &mut nodes)?;
        Ok(ModelFile {
            clip,
            scoring: repr.scoring,
            provenance: repr.provenance,
            tree: AlphaTree::from_nodes(nodes)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
