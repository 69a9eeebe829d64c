//! Entropy-driven induction of alpha-trees.
//!
//! Every row carries a confidence `nlogit(q_u) in [-1, 1]` and a target
//! posterior `eta`. A leaf's edge is the weighted correlation between the
//! target sign and the confidence; its alpha is a closed-form function of the
//! edge and the loss at each leaf is bounded by the leaf entropy.

mod split;
mod topdown;
mod wha;

pub use split::{best_split, SplitCandidate};
pub use topdown::{topdown, Induction, IterationRecord, StopReason};
pub use wha::{balanced_weights, decrease_certificate, split_indicator, wha_check, WhaReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{binary_entropy, TargetPosterior, View};
use crate::model::{nlogit, AlphaValue, ClipBound, Score};

/// Edges this close to `+-1` are treated as saturated.
pub const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    #[default]
    Conservative,
    Audacious,
}

impl std::str::FromStr for Scoring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conservative" => Ok(Scoring::Conservative),
            "audacious" => Ok(Scoring::Audacious),
            other => Err(Error::Config(format!("unknown scoring `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InductionConfig {
    pub max_iterations: usize,
    pub min_child_fraction: f64,
    pub min_child_count: usize,
    pub scoring: Scoring,
    pub entropy_improvement_tol: f64,
    pub alpha_cap: f64,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig {
            max_iterations: 32,
            min_child_fraction: 0.10,
            min_child_count: 30,
            scoring: Scoring::Conservative,
            entropy_improvement_tol: 1e-10,
            alpha_cap: 50.0,
        }
    }
}

impl InductionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.min_child_fraction) {
            return Err(Error::Config(
                "min_child_fraction must lie in [0, 0.5)".into(),
            ));
        }
        if !(self.alpha_cap.is_finite() && self.alpha_cap > 0.0) {
            return Err(Error::Config("alpha_cap must be positive".into()));
        }
        if !(self.entropy_improvement_tol.is_finite() && self.entropy_improvement_tol >= 0.0) {
            return Err(Error::Config(
                "entropy_improvement_tol must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Per-row normalized logits of the black-box scores, indexed by dataset row.
#[derive(Debug, Clone, PartialEq)]
pub struct Confidences(Vec<f64>);

impl Confidences {
    pub fn from_scores(scores: &[Score], b: ClipBound) -> Result<Self> {
        scores
            .iter()
            .map(|&q| nlogit(q, b))
            .collect::<Result<_>>()
            .map(Confidences)
    }

    /// Arbitrary values in `[-1, 1]`, e.g. a constant override.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange {
                what: "confidence",
                value: *v,
            });
        }
        Ok(Confidences(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, row: usize) -> f64 {
        self.0[row]
    }
}

/// Weighted sums over a set of rows.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Accum {
    pub count: usize,
    pub w: f64,
    /// sum of w (2 eta - 1) nl
    pub wa: f64,
    pub wp: f64,
    pub wm: f64,
}

impl Accum {
    pub fn add(&mut self, w: f64, eta: f64, nl: f64) {
        self.count += 1;
        self.w += w;
        self.wa += w * (2.0 * eta - 1.0) * nl;
        self.wp += w * (eta * nl.max(0.0) + (1.0 - eta) * (-nl).max(0.0));
        self.wm += w * (eta * (-nl).max(0.0) + (1.0 - eta) * nl.max(0.0));
    }

    pub fn minus(&self, o: &Accum) -> Accum {
        Accum {
            count: self.count - o.count,
            w: self.w - o.w,
            wa: self.wa - o.wa,
            wp: self.wp - o.wp,
            wm: self.wm - o.wm,
        }
    }

    pub fn edge(&self) -> f64 {
        if self.w > 0.0 {
            (self.wa / self.w).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn parts(&self) -> (f64, f64) {
        if self.w > 0.0 {
            (self.wp / self.w, self.wm / self.w)
        } else {
            (0.0, 0.0)
        }
    }
}

pub(crate) fn accumulate(view: &View<'_>, eta: &TargetPosterior, conf: &Confidences) -> Accum {
    let mut acc = Accum::default();
    for (r, w) in view.iter() {
        acc.add(w, eta.get(r), conf.get(r));
    }
    acc
}

/// `E[(2 eta - 1) nl]`.
pub fn edge(view: &View<'_>, eta: &TargetPosterior, conf: &Confidences) -> f64 {
    accumulate(view, eta, conf).edge()
}

/// Positive and negative parts of the edge: `(e+, e-)` with `e+ - e- = edge`.
pub fn edge_parts(view: &View<'_>, eta: &TargetPosterior, conf: &Confidences) -> (f64, f64) {
    accumulate(view, eta, conf).parts()
}

fn capped(raw: f64, cap: f64) -> AlphaValue {
    let a = if raw.is_nan() {
        0.0
    } else {
        raw.clamp(-cap, cap)
    };
    AlphaValue::new(a).expect("clamped alpha is finite")
}

/// Minimizer of the leaf's secant bound: `ln((1+e)/(1-e)) / B`, capped.
pub fn leaf_alpha_conservative(edge: f64, b: ClipBound, cap: f64) -> AlphaValue {
    if edge >= 1.0 {
        return capped(f64::INFINITY, cap);
    }
    if edge <= -1.0 {
        return capped(f64::NEG_INFINITY, cap);
    }
    capped((edge.ln_1p() - (-edge).ln_1p()) / b.get(), cap)
}

/// `ln(e+ / e-) / B`, capped; undefined when both parts vanish.
pub fn leaf_alpha_audacious(
    e_plus: f64,
    e_minus: f64,
    b: ClipBound,
    cap: f64,
) -> Result<AlphaValue> {
    if e_plus <= 0.0 && e_minus <= 0.0 {
        return Err(Error::UndefinedLeaf);
    }
    Ok(capped((e_plus.ln() - e_minus.ln()) / b.get(), cap))
}

/// `H((1 + edge) / 2)`, the conservative loss bound at a leaf.
pub fn leaf_entropy(edge: f64) -> f64 {
    binary_entropy((1.0 + edge) / 2.0)
}

/// `ln 2 * (1 + s (H2(e+/s) - 1))` with `s = e+ + e-`; `ln 2` when `s = 0`.
pub fn audacious_leaf_bound(e_plus: f64, e_minus: f64) -> f64 {
    let s = e_plus + e_minus;
    if s <= 0.0 {
        return std::f64::consts::LN_2;
    }
    let h2 = binary_entropy(e_plus / s) / std::f64::consts::LN_2;
    std::f64::consts::LN_2 * (1.0 + s * (h2 - 1.0))
}

/// Label for a leaf under the configured scoring. `None` leaves the alpha untouched.
pub(crate) fn leaf_label(acc: &Accum, b: ClipBound, cfg: &InductionConfig) -> Option<AlphaValue> {
    match cfg.scoring {
        Scoring::Conservative => Some(leaf_alpha_conservative(acc.edge(), b, cfg.alpha_cap)),
        Scoring::Audacious => {
            let (p, m) = acc.parts();
            leaf_alpha_audacious(p, m, b, cfg.alpha_cap).ok()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn b(v: f64) -> ClipBound {
        ClipBound::new(v).unwrap()
    }

    #[test]
    fn conservative_labels() {
        assert_eq!(leaf_alpha_conservative(0.0, b(1.0), 50.0).get(), 0.0);
        assert_abs_diff_eq!(
            leaf_alpha_conservative(0.5, b(1.0), 50.0).get(),
            3f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(leaf_alpha_conservative(1.0, b(1.0), 50.0).get(), 50.0);
        assert_eq!(leaf_alpha_conservative(-1.0, b(2.0), 50.0).get(), -50.0);
    }

    #[test]
    fn conservative_label_minimizes_secant_bound() {
        for &(e, bv) in &[(0.3, 1.0), (-0.6, 2.5), (0.9, 0.5)] {
            let loss = |a: f64| (a * bv).exp().ln_1p() - a * bv * (1.0 + e) / 2.0;
            let best = leaf_alpha_conservative(e, b(bv), 50.0).get();
            for k in -2000..=2000 {
                let a = k as f64 * 0.005;
                assert!(loss(best) <= loss(a) + 1e-12);
            }
            assert_abs_diff_eq!(loss(best), leaf_entropy(e), epsilon = 1e-12);
        }
    }

    #[test]
    fn audacious_labels() {
        assert_abs_diff_eq!(
            leaf_alpha_audacious(0.6, 0.2, b(2.0), 50.0).unwrap().get(),
            3f64.ln() / 2.0,
            epsilon = 1e-12
        );
        assert_eq!(
            leaf_alpha_audacious(0.4, 0.0, b(1.0), 50.0).unwrap().get(),
            50.0
        );
        assert_eq!(
            leaf_alpha_audacious(0.0, 0.4, b(1.0), 50.0).unwrap().get(),
            -50.0
        );
        assert!(matches!(
            leaf_alpha_audacious(0.0, 0.0, b(1.0), 50.0),
            Err(Error::UndefinedLeaf)
        ));
    }

    #[test]
    fn bounds() {
        assert_abs_diff_eq!(leaf_entropy(0.0), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_eq!(leaf_entropy(1.0), 0.0);
        assert_abs_diff_eq!(audacious_leaf_bound(0.5, 0.0), 0.346574, epsilon = 1e-6);
        assert_eq!(audacious_leaf_bound(0.0, 0.0), std::f64::consts::LN_2);
        // tight against the entropy when every confidence has magnitude one
        let (p, m) = (0.8, 0.2);
        assert_abs_diff_eq!(
            audacious_leaf_bound(p, m),
            leaf_entropy(p - m),
            epsilon = 1e-12
        );
    }

    #[test]
    fn accum_parts_sum_to_edge() {
        let mut a = Accum::default();
        for &(w, eta, nl) in &[(0.2, 0.9, 0.4), (0.5, 0.1, -0.7), (0.3, 0.5, 1.0)] {
            a.add(w, eta, nl);
        }
        let (p, m) = a.parts();
        assert_abs_diff_eq!(p - m, a.edge(), epsilon = 1e-15);
    }

    #[test]
    fn confidences_reject_out_of_range() {
        assert!(Confidences::new(vec![1.5]).is_err());
        assert!(Confidences::new(vec![1.0, -1.0]).is_ok());
    }
}
