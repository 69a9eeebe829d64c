//! Greedy top-down growth: split the heaviest splittable leaf, relabel, repeat.

use std::collections::BTreeMap;

use super::split::best_split;
use super::{audacious_leaf_bound, leaf_entropy, leaf_label, Accum, Confidences, InductionConfig};
use crate::error::Result;
use crate::measures::{TargetPosterior, View};
use crate::model::{softplus, AlphaTree, ClipBound, LeafId, SplitTest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    NoImprovingSplit,
}

/// State after relabeling at one iteration. Iteration 0 precedes any split.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub split: Option<(LeafId, SplitTest)>,
    /// Mass-weighted leaf entropy over leaves reached by the view.
    pub entropy: f64,
    /// Mass-weighted audacious leaf bound.
    pub audacious_bound: f64,
    /// Log-loss of the wrapped scores against the target under the view.
    pub risk: f64,
}

#[derive(Debug, Clone)]
pub struct Induction {
    pub tree: AlphaTree,
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
}

impl Induction {
    pub fn splits(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("at least the initial record")
    }
}

struct Grower<'v, 'a> {
    view: &'v View<'a>,
    eta: &'v TargetPosterior,
    conf: &'v Confidences,
    b: ClipBound,
    cfg: &'v InductionConfig,
    tree: AlphaTree,
    /// Positions into the view's rows, per leaf with mass.
    members: BTreeMap<LeafId, Vec<usize>>,
}

impl Grower<'_, '_> {
    fn accum(&self, positions: &[usize]) -> Accum {
        let rows = self.view.rows();
        let w = self.view.weights();
        let mut acc = Accum::default();
        for &p in positions {
            acc.add(w[p], self.eta.get(rows[p]), self.conf.get(rows[p]));
        }
        acc
    }

    fn relabel(&mut self) -> Result<()> {
        let labels: Vec<_> = self
            .members
            .iter()
            .map(|(id, pos)| (*id, self.accum(pos)))
            .collect();
        for (id, acc) in labels {
            let alpha = match leaf_label(&acc, self.b, self.cfg) {
                Some(a) => a,
                None => self.tree.leaf(id)?.alpha,
            };
            self.tree.set_leaf(id, alpha, acc.edge(), acc.w)?;
        }
        Ok(())
    }

    fn record(
        &self,
        iteration: usize,
        split: Option<(LeafId, SplitTest)>,
    ) -> Result<IterationRecord> {
        let rows = self.view.rows();
        let w = self.view.weights();
        let (mut entropy, mut bound, mut risk) = (0.0, 0.0, 0.0);
        for (id, pos) in &self.members {
            let acc = self.accum(pos);
            entropy += acc.w * leaf_entropy(acc.edge());
            let (p, m) = acc.parts();
            bound += acc.w * audacious_leaf_bound(p, m);
            let scale = self.tree.leaf(*id)?.alpha.get() * self.b.get();
            for &i in pos {
                let (eta, nl) = (self.eta.get(rows[i]), self.conf.get(rows[i]));
                let z = scale * nl;
                let mut loss = 0.0;
                if eta > 0.0 {
                    loss += eta * softplus(-z);
                }
                if eta < 1.0 {
                    loss += (1.0 - eta) * softplus(z);
                }
                risk += w[i] * loss;
            }
        }
        Ok(IterationRecord {
            iteration,
            split,
            entropy,
            audacious_bound: bound,
            risk,
        })
    }

    fn leaf_view(&self, positions: &[usize]) -> Result<View<'_>> {
        let rows = positions.iter().map(|&p| self.view.rows()[p]).collect();
        let w = positions.iter().map(|&p| self.view.weights()[p]).collect();
        View::with_weights(self.view.dataset(), rows, w)
    }

    /// Heaviest leaf that admits an improving split, with its split.
    fn next_split(&self) -> Result<Option<(LeafId, SplitTest)>> {
        let mut order: Vec<(LeafId, f64)> = self
            .members
            .iter()
            .map(|(id, pos)| (*id, pos.iter().map(|&p| self.view.weights()[p]).sum()))
            .collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (id, _) in order {
            let lv = self.leaf_view(&self.members[&id])?;
            if let Some(c) = best_split(&lv, self.eta, self.conf, self.cfg) {
                return Ok(Some((id, c.test)));
            }
        }
        Ok(None)
    }

    fn apply_split(&mut self, id: LeafId, test: &SplitTest) -> Result<()> {
        let (l, r) = self.tree.split_leaf(id, test.clone())?;
        let ds = self.view.dataset();
        let pos = self.members.remove(&id).unwrap_or_default();
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for p in pos {
            if test.evaluate(&ds.row(self.view.rows()[p]))? {
                left.push(p);
            } else {
                right.push(p);
            }
        }
        self.members.insert(l, left);
        self.members.insert(r, right);
        Ok(())
    }
}

/// Grows `tree0` on the measure `view` against the target `eta`.
///
/// Only leaves reached by the view are relabeled or split; every other leaf
/// keeps its alpha. With `max_iterations = 0` the tree is relabeled only.
pub fn topdown(
    view: &View<'_>,
    eta: &TargetPosterior,
    conf: &Confidences,
    b: ClipBound,
    tree0: &AlphaTree,
    cfg: &InductionConfig,
) -> Result<Induction> {
    cfg.validate()?;
    let mut members: BTreeMap<LeafId, Vec<usize>> = BTreeMap::new();
    let ds = view.dataset();
    for (p, &r) in view.rows().iter().enumerate() {
        members
            .entry(tree0.route(&ds.row(r))?.id)
            .or_default()
            .push(p);
    }
    let mut g = Grower {
        view,
        eta,
        conf,
        b,
        cfg,
        tree: tree0.clone(),
        members,
    };
    g.relabel()?;
    let mut records = vec![g.record(0, None)?];
    let mut stop = StopReason::MaxIterations;
    for it in 1..=cfg.max_iterations {
        let Some((id, test)) = g.next_split()? else {
            stop = StopReason::NoImprovingSplit;
            break;
        };
        g.apply_split(id, &test)?;
        g.relabel()?;
        records.push(g.record(it, Some((id, test)))?);
    }
    Ok(Induction {
        tree: g.tree,
        records,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boosting::Scoring;
    use crate::data::{Dataset, Label, RawRow, RawValue};
    use crate::measures::empirical_risk;
    use crate::model::{apply_alpha, Score};
    use approx::assert_abs_diff_eq;

    fn noisy(n: usize) -> Dataset {
        let mut b = Dataset::builder(ClipBound::new(1.5).unwrap())
            .numeric("x")
            .categorical("c");
        for i in 0..n {
            let x = ((i * 37) % n) as f64 / n as f64;
            let c = ["u", "v", "w"][i % 3];
            let pos = (x > 0.4 && c != "w") || (i % 7 == 0);
            let y = if pos {
                Label::Positive
            } else {
                Label::Negative
            };
            let score = 0.2 + 0.6 * ((i * 13) % 17) as f64 / 17.0;
            let g = if i % 2 == 0 { "a" } else { "b" };
            b.push(RawRow::new(
                vec![RawValue::Numeric(x), RawValue::Categorical(c.into())],
                y,
                g,
                score,
            ));
        }
        b.build().unwrap()
    }

    fn label_target(ds: &Dataset) -> TargetPosterior {
        TargetPosterior::new(
            ds.labels()
                .iter()
                .map(|l| if l.is_positive() { 1.0 } else { 0.0 })
                .collect(),
        )
        .unwrap()
    }

    fn cfg(scoring: Scoring) -> InductionConfig {
        InductionConfig {
            min_child_count: 10,
            scoring,
            ..InductionConfig::default()
        }
    }

    #[test]
    fn entropy_trace_non_increasing_and_bounds_risk() {
        let ds = noisy(400);
        let eta = label_target(&ds);
        let conf = Confidences::from_scores(ds.scores(), ds.clip()).unwrap();
        let v = View::full(&ds).unwrap();
        let out = topdown(
            &v,
            &eta,
            &conf,
            ds.clip(),
            &AlphaTree::identity(),
            &cfg(Scoring::Conservative),
        )
        .unwrap();
        assert!(out.splits() > 0);
        for w in out.records.windows(2) {
            assert!(w[1].entropy <= w[0].entropy + 1e-15);
        }
        for r in &out.records {
            assert!(r.risk <= r.entropy + 1e-9);
        }
    }

    #[test]
    fn recorded_risk_matches_wrapped_scores() {
        let ds = noisy(300);
        let eta = label_target(&ds);
        let conf = Confidences::from_scores(ds.scores(), ds.clip()).unwrap();
        let v = View::full(&ds).unwrap();
        let out = topdown(
            &v,
            &eta,
            &conf,
            ds.clip(),
            &AlphaTree::identity(),
            &cfg(Scoring::Audacious),
        )
        .unwrap();
        let wrapped: Vec<Score> = (0..ds.n_rows())
            .map(|r| apply_alpha(ds.scores()[r], out.tree.evaluate(&ds.row(r)).unwrap()).unwrap())
            .collect();
        assert_abs_diff_eq!(
            empirical_risk(&v, &wrapped, &eta).unwrap(),
            out.last().risk,
            epsilon = 1e-12
        );
        assert!(out.last().risk <= out.last().audacious_bound + 1e-12);
    }

    #[test]
    fn zero_iterations_relabels_only() {
        let ds = noisy(200);
        let eta = label_target(&ds);
        let conf = Confidences::from_scores(ds.scores(), ds.clip()).unwrap();
        let v = View::full(&ds).unwrap();
        let c = InductionConfig {
            max_iterations: 0,
            ..cfg(Scoring::Conservative)
        };
        let out = topdown(&v, &eta, &conf, ds.clip(), &AlphaTree::identity(), &c).unwrap();
        assert_eq!(out.tree.n_leaves(), 1);
        assert_eq!(out.records.len(), 1);
        assert_ne!(out.tree.leaves()[0].alpha.get(), 1.0);
    }

    #[test]
    fn leaves_outside_the_view_are_untouched() {
        let ds = noisy(400);
        let eta = label_target(&ds);
        let conf = Confidences::from_scores(ds.scores(), ds.clip()).unwrap();
        let mut stump = AlphaTree::identity();
        let (la, lb) = stump
            .split_leaf(
                LeafId(0),
                SplitTest::Category {
                    feature: "group".into(),
                    modality: "a".into(),
                },
            )
            .unwrap();
        let va = View::full(&ds)
            .unwrap()
            .condition_on_group(ds.grouping(), 0)
            .unwrap();
        let out = topdown(
            &va,
            &eta,
            &conf,
            ds.clip(),
            &stump,
            &cfg(Scoring::Conservative),
        )
        .unwrap();
        assert_eq!(out.tree.leaf(lb).unwrap(), stump.leaf(lb).unwrap());
        assert!(out.tree.leaf(la).is_err() || out.tree.leaf(la).unwrap().mass > 0.0);
    }

    #[test]
    fn max_iterations_respected() {
        let ds = noisy(400);
        let eta = label_target(&ds);
        let conf = Confidences::from_scores(ds.scores(), ds.clip()).unwrap();
        let v = View::full(&ds).unwrap();
        let c = InductionConfig {
            max_iterations: 2,
            ..cfg(Scoring::Conservative)
        };
        let out = topdown(&v, &eta, &conf, ds.clip(), &AlphaTree::identity(), &c).unwrap();
        assert_eq!(out.splits(), 2);
        assert_eq!(out.stop, StopReason::MaxIterations);
        assert_eq!(out.tree.n_leaves(), 3);
    }
}
