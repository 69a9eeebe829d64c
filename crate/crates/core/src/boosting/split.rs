//! Exhaustive search for the entropy-minimizing split of one leaf.

use rayon::prelude::*;

use super::{Accum, Confidences, InductionConfig};
use crate::data::Column;
use crate::measures::{binary_entropy, TargetPosterior, View};
use crate::model::SplitTest;

/// A split proposal. "Left" holds the rows satisfying `test`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub test: SplitTest,
    /// Mass-weighted entropy of the two children, relative to the leaf.
    pub entropy: f64,
    /// Parent entropy minus `entropy`.
    pub gain: f64,
    pub left_fraction: f64,
    pub left_edge: f64,
    pub right_edge: f64,
    pub left_count: usize,
    pub right_count: usize,
}

fn child_entropy(left: &Accum, right: &Accum) -> f64 {
    let total = left.w + right.w;
    let h = |a: &Accum| binary_entropy((1.0 + a.edge()) / 2.0);
    (left.w * h(left) + right.w * h(right)) / total
}

/// Minimum child size for a parent with `n` rows.
pub(crate) fn min_child_size(n: usize, cfg: &InductionConfig) -> usize {
    let frac = (cfg.min_child_fraction * n as f64 - 1e-9).ceil().max(0.0) as usize;
    cfg.min_child_count.max(frac).max(1)
}

struct Best {
    entropy: f64,
    test: SplitTest,
    left: Accum,
    right: Accum,
}

fn search_feature(
    view: &View<'_>,
    j: usize,
    eta: &TargetPosterior,
    conf: &Confidences,
    total: &Accum,
    min_size: usize,
) -> Option<Best> {
    let ds = view.dataset();
    let spec = &ds.features()[j];
    let mut best: Option<Best> = None;
    let mut consider = |left: Accum, test: &dyn Fn() -> SplitTest| {
        let right = total.minus(&left);
        if left.count < min_size || right.count < min_size || left.w <= 0.0 || right.w <= 0.0 {
            return;
        }
        let h = child_entropy(&left, &right);
        if best.as_ref().is_none_or(|b| h < b.entropy) {
            best = Some(Best {
                entropy: h,
                test: test(),
                left,
                right,
            });
        }
    };
    match ds.column(j) {
        Column::Numeric(col) => {
            let mut rows: Vec<(f64, usize, f64)> =
                view.iter().map(|(r, w)| (col[r], r, w)).collect();
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = Accum::default();
            for k in 0..rows.len().saturating_sub(1) {
                let (v, r, w) = rows[k];
                left.add(w, eta.get(r), conf.get(r));
                let next = rows[k + 1].0;
                if next > v {
                    let mid = v + (next - v) / 2.0;
                    let threshold = if mid < next { mid } else { v };
                    consider(left, &|| SplitTest::Threshold {
                        feature: spec.name.clone(),
                        threshold,
                    });
                }
            }
        }
        Column::Categorical(col) => {
            let mut per_level = vec![Accum::default(); spec.levels.len()];
            for (r, w) in view.iter() {
                per_level[col[r] as usize].add(w, eta.get(r), conf.get(r));
            }
            for (code, acc) in per_level.into_iter().enumerate() {
                if acc.count == 0 || acc.count == total.count {
                    continue;
                }
                consider(acc, &|| SplitTest::Category {
                    feature: spec.name.clone(),
                    modality: spec.levels[code].clone(),
                });
            }
        }
    }
    best
}

/// Best split of the leaf measure `view`, or `None` when no admissible split
/// lowers the entropy by more than the configured tolerance.
///
/// Ties go to the lowest feature index, then the lowest threshold or modality.
pub fn best_split(
    view: &View<'_>,
    eta: &TargetPosterior,
    conf: &Confidences,
    cfg: &InductionConfig,
) -> Option<SplitCandidate> {
    let mut total = Accum::default();
    for (r, w) in view.iter() {
        total.add(w, eta.get(r), conf.get(r));
    }
    let min_size = min_child_size(total.count, cfg);
    if total.count < 2 * min_size {
        return None;
    }
    let parent = binary_entropy((1.0 + total.edge()) / 2.0);
    let n_features = view.dataset().features().len();
    let per_feature: Vec<Option<Best>> = (0..n_features)
        .into_par_iter()
        .map(|j| search_feature(view, j, eta, conf, &total, min_size))
        .collect();
    let best = per_feature
        .into_iter()
        .flatten()
        .fold(None::<Best>, |acc, b| match acc {
            Some(a) if a.entropy <= b.entropy => Some(a),
            _ => Some(b),
        })?;
    let gain = parent - best.entropy;
    if gain <= cfg.entropy_improvement_tol {
        return None;
    }
    Some(SplitCandidate {
        test: best.test,
        entropy: best.entropy,
        gain,
        left_fraction: best.left.w / total.w,
        left_edge: best.left.edge(),
        right_edge: best.right.edge(),
        left_count: best.left.count,
        right_count: best.right.count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Label, RawRow, RawValue};
    use crate::model::ClipBound;

    fn cfg(min_count: usize) -> InductionConfig {
        InductionConfig {
            min_child_count: min_count,
            ..InductionConfig::default()
        }
    }

    /// `x` separates labels perfectly at 0.5; `c` is noise.
    fn separable(n: usize) -> Dataset {
        let mut b = Dataset::builder(ClipBound::new(1.0).unwrap())
            .numeric("x")
            .categorical("c");
        for i in 0..n {
            let x = i as f64 / n as f64;
            let y = if x < 0.5 {
                Label::Negative
            } else {
                Label::Positive
            };
            let c = if i % 3 == 0 { "p" } else { "q" };
            b.push(RawRow::new(
                vec![RawValue::Numeric(x), RawValue::Categorical(c.into())],
                y,
                "g",
                0.9,
            ));
        }
        b.build().unwrap()
    }

    fn inputs(ds: &Dataset) -> (TargetPosterior, Confidences) {
        let eta = TargetPosterior::new(
            ds.labels()
                .iter()
                .map(|l| if l.is_positive() { 1.0 } else { 0.0 })
                .collect(),
        )
        .unwrap();
        let conf = Confidences::from_scores(ds.scores(), ds.clip()).unwrap();
        (eta, conf)
    }

    #[test]
    fn finds_separating_threshold() {
        let ds = separable(100);
        let (eta, conf) = inputs(&ds);
        let v = View::full(&ds).unwrap();
        let s = best_split(&v, &eta, &conf, &cfg(30)).unwrap();
        match s.test {
            SplitTest::Threshold {
                ref feature,
                threshold,
            } => {
                assert_eq!(feature, "x");
                assert!((threshold - 0.495).abs() < 1e-12);
            }
            _ => panic!("expected threshold split"),
        }
        assert_eq!((s.left_count, s.right_count), (50, 50));
        assert!(s.entropy < 1e-12);
    }

    #[test]
    fn respects_min_child_count() {
        let ds = separable(50);
        let (eta, conf) = inputs(&ds);
        let v = View::full(&ds).unwrap();
        assert!(best_split(&v, &eta, &conf, &cfg(30)).is_none());
    }

    #[test]
    fn pure_leaf_has_no_split() {
        let ds = separable(100);
        let (_, conf) = inputs(&ds);
        let eta = TargetPosterior::constant(ds.n_rows(), 1.0).unwrap();
        let v = View::full(&ds).unwrap();
        assert!(best_split(&v, &eta, &conf, &cfg(10)).is_none());
    }

    #[test]
    fn ties_go_to_lowest_feature() {
        // two identical numeric columns
        let mut b = Dataset::builder(ClipBound::new(1.0).unwrap())
            .numeric("a")
            .numeric("b");
        for i in 0..40 {
            let y = if i < 20 {
                Label::Negative
            } else {
                Label::Positive
            };
            b.push(RawRow::new(
                vec![RawValue::Numeric(i as f64), RawValue::Numeric(i as f64)],
                y,
                "g",
                0.6,
            ));
        }
        let ds = b.build().unwrap();
        let (eta, conf) = inputs(&ds);
        let v = View::full(&ds).unwrap();
        let s = best_split(&v, &eta, &conf, &cfg(5)).unwrap();
        assert_eq!(s.test.feature(), "a");
    }
}
