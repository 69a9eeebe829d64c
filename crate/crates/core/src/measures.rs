//! Weighted views over a dataset, targets, risks and entropies.

use std::collections::BTreeMap;

use crate::data::{Dataset, Grouping};
use crate::error::{Error, Result};
use crate::model::{softplus, AlphaTree, LeafId, Score};

/// A probability measure supported on a subset of rows.
/// Weights always sum to one.
#[derive(Debug, Clone)]
pub struct View<'a> {
    ds: &'a Dataset,
    rows: Vec<usize>,
    weights: Vec<f64>,
}

impl<'a> View<'a> {
    /// All rows, weighted by the dataset weights.
    pub fn full(ds: &'a Dataset) -> Result<Self> {
        Self::from_rows(ds, (0..ds.n_rows()).collect())
    }

    pub fn from_rows(ds: &'a Dataset, rows: Vec<usize>) -> Result<Self> {
        let w = rows.iter().map(|&r| ds.weights()[r]).collect();
        Self::with_weights(ds, rows, w)
    }

    /// Explicit unnormalized weights.
    pub fn with_weights(ds: &'a Dataset, rows: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if rows.len() != weights.len() {
            return Err(Error::Config("rows and weights differ in length".into()));
        }
        if let Some(&r) = rows.iter().find(|&&r| r >= ds.n_rows()) {
            return Err(Error::Config(format!("row {r} out of bounds")));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if rows.is_empty() || total <= 0.0 {
            return Err(Error::EmptyMeasure("view carries no mass".into()));
        }
        Ok(View {
            ds,
            rows,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.ds
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Pairs of (row, weight).
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows.iter().copied().zip(self.weights.iter().copied())
    }

    /// Restriction to rows satisfying `keep`, renormalized.
    pub fn condition(&self, what: &str, keep: impl Fn(usize) -> bool) -> Result<View<'a>> {
        let (rows, w): (Vec<_>, Vec<_>) = self.iter().filter(|(r, _)| keep(*r)).unzip();
        Self::with_weights(self.ds, rows, w)
            .map_err(|_| Error::EmptyMeasure(format!("no mass after conditioning on {what}")))
    }

    pub fn condition_on_group(&self, grouping: &Grouping, group: usize) -> Result<View<'a>> {
        let name = grouping
            .names
            .get(group)
            .ok_or_else(|| Error::UnknownGroup(group.to_string()))?;
        self.condition(&format!("group {name}"), |r| grouping.codes[r] == group)
    }

    pub fn condition_positive(&self) -> Result<View<'a>> {
        let labels = self.ds.labels();
        self.condition("positive labels", |r| labels[r].is_positive())
    }

    pub fn condition_on_leaf(&self, tree: &AlphaTree, leaf: LeafId) -> Result<View<'a>> {
        let mut keep = vec![false; self.ds.n_rows()];
        for &r in &self.rows {
            keep[r] = tree.route(&self.ds.row(r))?.id == leaf;
        }
        self.condition(&format!("leaf {leaf}"), |r| keep[r])
    }

    /// Mass reaching each leaf. Leaves without mass are absent.
    pub fn leaf_weights(&self, tree: &AlphaTree) -> Result<BTreeMap<LeafId, f64>> {
        let mut out = BTreeMap::new();
        for (r, w) in self.iter() {
            *out.entry(tree.route(&self.ds.row(r))?.id).or_insert(0.0) += w;
        }
        Ok(out)
    }

    /// `E[f]` under this measure.
    pub fn expect(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.iter().map(|(r, w)| w * f(r)).sum()
    }
}

/// Per-row probability of the positive class used as a learning target.
/// Indexed by dataset row.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetPosterior(Vec<f64>);

impl TargetPosterior {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange {
                what: "target posterior",
                value: *v,
            });
        }
        Ok(TargetPosterior(values))
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, row: usize) -> f64 {
        self.0[row]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `H(p)` in nats, with `0 ln 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
    term(p) + term(1.0 - p)
}

/// Expected log-loss of `scores` against `target` under `view`.
/// `scores` is indexed by dataset row.
pub fn empirical_risk(view: &View<'_>, scores: &[Score], target: &TargetPosterior) -> Result<f64> {
    let mut total = 0.0;
    for (r, w) in view.iter() {
        let eta = target.get(r);
        let z = scores[r].logit_value();
        let mut loss = 0.0;
        if eta > 0.0 {
            loss += eta * softplus(-z);
        }
        if eta < 1.0 {
            loss += (1.0 - eta) * softplus(z);
        }
        total += w * loss;
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::InfiniteRisk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Label, RawRow, RawValue};
    use crate::model::{ClipBound, SplitTest};
    use approx::assert_abs_diff_eq;

    fn ds() -> Dataset {
        let mut b = Dataset::builder(ClipBound::new(2.0).unwrap()).numeric("x");
        for (i, (g, y)) in [("a", 1), ("a", -1), ("b", 1), ("b", 1), ("b", -1)]
            .into_iter()
            .enumerate()
        {
            let label = if y > 0 {
                Label::Positive
            } else {
                Label::Negative
            };
            b.push(
                RawRow::new(vec![RawValue::Numeric(i as f64)], label, g, 0.6)
                    .weight(1.0 + i as f64),
            );
        }
        b.build().unwrap()
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.5), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(0.75), 0.562335, epsilon = 1e-6);
    }

    #[test]
    fn risk_of_constant_half_is_ln2() {
        let d = ds();
        let v = View::full(&d).unwrap();
        let half = vec![Score::new(0.5).unwrap(); d.n_rows()];
        let t = TargetPosterior::constant(d.n_rows(), 0.3).unwrap();
        assert_abs_diff_eq!(
            empirical_risk(&v, &half, &t).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn risk_infinite_at_wrong_certainty() {
        let d = ds();
        let v = View::full(&d).unwrap();
        let zero = vec![Score::new(0.0).unwrap(); d.n_rows()];
        let t = TargetPosterior::constant(d.n_rows(), 0.3).unwrap();
        assert!(matches!(
            empirical_risk(&v, &zero, &t),
            Err(Error::InfiniteRisk)
        ));
        let t = TargetPosterior::constant(d.n_rows(), 0.0).unwrap();
        assert_eq!(empirical_risk(&v, &zero, &t).unwrap(), 0.0);
    }

    #[test]
    fn conditioning_and_tower_property() {
        let d = ds();
        let v = View::full(&d).unwrap();
        let g = d.grouping();
        let f = |r: usize| (r as f64).sin();
        let mut tower = 0.0;
        for s in 0..g.n_groups() {
            let vs = v.condition_on_group(g, s).unwrap();
            let mass: f64 = v
                .iter()
                .filter(|(r, _)| g.codes[*r] == s)
                .map(|(_, w)| w)
                .sum();
            assert_abs_diff_eq!(vs.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            tower += mass * vs.expect(f);
        }
        assert_abs_diff_eq!(tower, v.expect(f), epsilon = 1e-12);
        let pos = v.condition_positive().unwrap();
        assert_eq!(pos.rows(), &[0, 2, 3]);
        assert!(matches!(
            View::from_rows(&d, vec![]),
            Err(Error::EmptyMeasure(_))
        ));
    }

    #[test]
    fn leaf_conditioning() {
        let d = ds();
        let v = View::full(&d).unwrap();
        let mut t = AlphaTree::identity();
        let (l, r) = t
            .split_leaf(
                LeafId(0),
                SplitTest::Threshold {
                    feature: "x".into(),
                    threshold: 1.5,
                },
            )
            .unwrap();
        let lw = v.leaf_weights(&t).unwrap();
        assert_abs_diff_eq!(lw[&l], 3.0 / 15.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lw[&r], 12.0 / 15.0, epsilon = 1e-12);
        assert_eq!(v.condition_on_leaf(&t, r).unwrap().rows(), &[2, 3, 4]);
    }
}
