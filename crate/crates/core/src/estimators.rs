//! Target posterior estimates and tree initializations.

use std::collections::BTreeMap;

use crate::data::{Column, Dataset, Grouping};
use crate::error::{Error, Result};
use crate::measures::TargetPosterior;
use crate::model::{AlphaTree, FeatureValue, LeafId, Record, SplitTest};

/// `eta = 1` on positive rows, `0` elsewhere.
pub fn label_plugin(ds: &Dataset) -> TargetPosterior {
    TargetPosterior::new(
        ds.labels()
            .iter()
            .map(|l| if l.is_positive() { 1.0 } else { 0.0 })
            .collect(),
    )
    .expect("indicator values lie in [0, 1]")
}

const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
enum FeatureModel {
    Gaussian {
        name: String,
        mean: [f64; 2],
        var: [f64; 2],
    },
    Categorical {
        name: String,
        levels: Vec<String>,
        /// Smoothed log frequencies per class; the extra last slot is for unseen modalities.
        log_freq: [Vec<f64>; 2],
    },
}

/// Naive Bayes posterior with Gaussian numeric and smoothed categorical marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPlugin {
    log_prior: [f64; 2],
    features: Vec<FeatureModel>,
}

impl GaussianPlugin {
    /// Fits on every row of `ds`, using the named features (all when empty).
    pub fn fit(ds: &Dataset, features: &[&str]) -> Result<Self> {
        let selected: Vec<usize> = if features.is_empty() {
            (0..ds.features().len()).collect()
        } else {
            features
                .iter()
                .map(|f| {
                    ds.feature_index(f)
                        .ok_or_else(|| Error::MissingFeature(f.to_string()))
                })
                .collect::<Result<_>>()?
        };
        let class = |r: usize| usize::from(ds.labels()[r].is_positive());
        let w = ds.weights();
        let mut mass = [0.0; 2];
        for r in 0..ds.n_rows() {
            mass[class(r)] += w[r];
        }
        if mass[0] <= 0.0 || mass[1] <= 0.0 {
            return Err(Error::Config(
                "posterior estimate needs both classes".into(),
            ));
        }
        let total = mass[0] + mass[1];
        let mut models = Vec::with_capacity(selected.len());
        for j in selected {
            let spec = &ds.features()[j];
            match ds.column(j) {
                Column::Numeric(col) => {
                    let mut mean = [0.0; 2];
                    for r in 0..ds.n_rows() {
                        mean[class(r)] += w[r] * col[r];
                    }
                    mean[0] /= mass[0];
                    mean[1] /= mass[1];
                    let mut var = [0.0; 2];
                    for r in 0..ds.n_rows() {
                        let c = class(r);
                        var[c] += w[r] * (col[r] - mean[c]).powi(2);
                    }
                    let (lo, hi) = col
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                            (a.min(x), b.max(x))
                        });
                    let range = hi - lo;
                    let floor = if range > 0.0 {
                        VARIANCE_FLOOR * range * range
                    } else {
                        VARIANCE_FLOOR
                    };
                    for c in 0..2 {
                        var[c] = (var[c] / mass[c]).max(floor);
                    }
                    models.push(FeatureModel::Gaussian {
                        name: spec.name.clone(),
                        mean,
                        var,
                    });
                }
                Column::Categorical(col) => {
                    let k = spec.levels.len();
                    let mut counts = [vec![0.0; k], vec![0.0; k]];
                    for r in 0..ds.n_rows() {
                        counts[class(r)][col[r] as usize] += w[r];
                    }
                    let log_freq = [0, 1].map(|c| {
                        let denom = mass[c] + k as f64 + 1.0;
                        counts[c]
                            .iter()
                            .map(|n| ((n + 1.0) / denom).ln())
                            .chain(std::iter::once((1.0 / denom).ln()))
                            .collect()
                    });
                    models.push(FeatureModel::Categorical {
                        name: spec.name.clone(),
                        levels: spec.levels.clone(),
                        log_freq,
                    });
                }
            }
        }
        Ok(GaussianPlugin {
            log_prior: [(mass[0] / total).ln(), (mass[1] / total).ln()],
            features: models,
        })
    }

    /// `P(Y = +1 | x)`, strictly inside `(0, 1)`.
    pub fn predict(&self, x: &dyn Record) -> Result<f64> {
        let mut lp = self.log_prior;
        for m in &self.features {
            match m {
                FeatureModel::Gaussian { name, mean, var } => {
                    let v = match x.feature(name) {
                        Some(FeatureValue::Numeric(v)) => v,
                        Some(_) => {
                            return Err(Error::FeatureKind {
                                feature: name.clone(),
                                expected: "numeric",
                                found: "categorical",
                            })
                        }
                        None => return Err(Error::MissingFeature(name.clone())),
                    };
                    for c in 0..2 {
                        lp[c] += -0.5 * (2.0 * std::f64::consts::PI * var[c]).ln()
                            - (v - mean[c]).powi(2) / (2.0 * var[c]);
                    }
                }
                FeatureModel::Categorical {
                    name,
                    levels,
                    log_freq,
                } => {
                    let v = match x.feature(name) {
                        Some(FeatureValue::Categorical(v)) => v,
                        Some(_) => {
                            return Err(Error::FeatureKind {
                                feature: name.clone(),
                                expected: "categorical",
                                found: "numeric",
                            })
                        }
                        None => return Err(Error::MissingFeature(name.clone())),
                    };
                    let slot = levels
                        .binary_search_by(|l| l.as_str().cmp(v))
                        .unwrap_or(levels.len());
                    for c in 0..2 {
                        lp[c] += log_freq[c][slot];
                    }
                }
            }
        }
        let p = crate::model::sigmoid(lp[1] - lp[0]);
        Ok(p.clamp(f64::EPSILON, 1.0 - f64::EPSILON))
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<TargetPosterior> {
        let values = (0..ds.n_rows())
            .map(|r| self.predict(&ds.row(r)))
            .collect::<Result<_>>()?;
        TargetPosterior::new(values)
    }
}

/// Chain of modality tests on the sensitive attribute, one `alpha = 1` leaf per group.
pub fn init_stump(ds: &Dataset) -> AlphaTree {
    let spec = &ds.features()[ds.group_feature()];
    let mut tree = AlphaTree::identity();
    let mut open = LeafId(0);
    let k = spec.levels.len();
    for level in spec.levels.iter().take(k.saturating_sub(1)) {
        let (_, right) = tree
            .split_leaf(
                open,
                SplitTest::Category {
                    feature: spec.name.clone(),
                    modality: level.clone(),
                },
            )
            .expect("open leaf exists");
        open = right;
    }
    tree
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxyConfig {
    pub max_depth: usize,
    pub min_child_fraction: f64,
    pub min_child_count: usize,
    /// Let the tree test the sensitive attribute itself.
    pub include_sensitive: bool,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        ProxyConfig {
            max_depth: 8,
            min_child_fraction: 0.10,
            min_child_count: 30,
            include_sensitive: false,
        }
    }
}

/// A decision tree predicting the group from the other features.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyGroups {
    tree: AlphaTree,
    leaf_group: BTreeMap<LeafId, usize>,
    names: Vec<String>,
}

fn multiclass_entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.ln()
        })
        .sum()
}

fn majority(counts: &[f64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct ProxySplit {
    impurity: f64,
    test: SplitTest,
}

fn proxy_split(
    ds: &Dataset,
    rows: &[usize],
    features: &[usize],
    cfg: &ProxyConfig,
) -> Option<ProxySplit> {
    let k = ds.grouping().n_groups();
    let codes = &ds.grouping().codes;
    let w = ds.weights();
    let n = rows.len();
    let min_size = cfg
        .min_child_count
        .max((cfg.min_child_fraction * n as f64 - 1e-9).ceil() as usize)
        .max(1);
    if n < 2 * min_size {
        return None;
    }
    let mut total = vec![0.0; k];
    for &r in rows {
        total[codes[r]] += w[r];
    }
    let mass: f64 = total.iter().sum();
    let parent = multiclass_entropy(&total);
    let mut best: Option<ProxySplit> = None;
    let mut consider = |left: &[f64], left_n: usize, test: &dyn Fn() -> SplitTest| {
        if left_n < min_size || n - left_n < min_size {
            return;
        }
        let right: Vec<f64> = total.iter().zip(left).map(|(t, l)| t - l).collect();
        let lw: f64 = left.iter().sum();
        let imp = (lw * multiclass_entropy(left) + (mass - lw) * multiclass_entropy(&right)) / mass;
        if best.as_ref().is_none_or(|b| imp < b.impurity) {
            best = Some(ProxySplit {
                impurity: imp,
                test: test(),
            });
        }
    };
    for &j in features {
        let spec = &ds.features()[j];
        match ds.column(j) {
            Column::Numeric(col) => {
                let mut sorted: Vec<usize> = rows.to_vec();
                sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
                let mut left = vec![0.0; k];
                for i in 0..n - 1 {
                    let r = sorted[i];
                    left[codes[r]] += w[r];
                    let (v, next) = (col[r], col[sorted[i + 1]]);
                    if next > v {
                        let mid = v + (next - v) / 2.0;
                        let threshold = if mid < next { mid } else { v };
                        consider(&left, i + 1, &|| SplitTest::Threshold {
                            feature: spec.name.clone(),
                            threshold,
                        });
                    }
                }
            }
            Column::Categorical(col) => {
                let mut per = vec![(vec![0.0; k], 0usize); spec.levels.len()];
                for &r in rows {
                    let e = &mut per[col[r] as usize];
                    e.0[codes[r]] += w[r];
                    e.1 += 1;
                }
                for (code, (counts, cnt)) in per.iter().enumerate() {
                    if *cnt == 0 || *cnt == n {
                        continue;
                    }
                    consider(counts, *cnt, &|| SplitTest::Category {
                        feature: spec.name.clone(),
                        modality: spec.levels[code].clone(),
                    });
                }
            }
        }
    }
    best.filter(|b| parent - b.impurity > 1e-10)
}

impl ProxyGroups {
    pub fn fit(ds: &Dataset, cfg: &ProxyConfig) -> Result<Self> {
        let features: Vec<usize> = (0..ds.features().len())
            .filter(|&j| cfg.include_sensitive || j != ds.group_feature())
            .collect();
        let k = ds.grouping().n_groups();
        let mut tree = AlphaTree::identity();
        let mut leaf_group = BTreeMap::new();
        let mut stack = vec![(LeafId(0), (0..ds.n_rows()).collect::<Vec<_>>(), 0usize)];
        while let Some((leaf, rows, depth)) = stack.pop() {
            let split = if depth < cfg.max_depth {
                proxy_split(ds, &rows, &features, cfg)
            } else {
                None
            };
            match split {
                Some(s) => {
                    let (l, r) = tree.split_leaf(leaf, s.test.clone())?;
                    let (mut lr, mut rr) = (Vec::new(), Vec::new());
                    for row in rows {
                        if s.test.evaluate(&ds.row(row))? {
                            lr.push(row);
                        } else {
                            rr.push(row);
                        }
                    }
                    stack.push((r, rr, depth + 1));
                    stack.push((l, lr, depth + 1));
                }
                None => {
                    let mut counts = vec![0.0; k];
                    for &r in &rows {
                        counts[ds.grouping().codes[r]] += ds.weights()[r];
                    }
                    leaf_group.insert(leaf, majority(&counts));
                }
            }
        }
        Ok(ProxyGroups {
            tree,
            leaf_group,
            names: ds.grouping().names.clone(),
        })
    }

    pub fn group_of(&self, x: &dyn Record) -> Result<usize> {
        let id = self.tree.route(x)?.id;
        Ok(self.leaf_group[&id])
    }

    /// Proxy group of every row of `ds`.
    pub fn grouping(&self, ds: &Dataset) -> Result<Grouping> {
        Ok(Grouping {
            codes: (0..ds.n_rows())
                .map(|r| self.group_of(&ds.row(r)))
                .collect::<Result<_>>()?,
            names: self.names.clone(),
        })
    }

    /// Same structure as the proxy tree, every leaf at `alpha = 1`.
    pub fn init_tree(&self) -> AlphaTree {
        self.tree.clone()
    }

    pub fn depth(&self) -> usize {
        self.tree.depth()
    }
}
