//! Diagnostics for the weak-learning assumption at a single leaf.

use super::{accumulate, Accum, Confidences, EDGE_EPS};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::measures::{binary_entropy, TargetPosterior, View};
use crate::model::SplitTest;

/// Reweighting of the leaf measure under which the current leaf carries no edge.
///
/// Returns `(w(x, +1), w(x, -1))` for each row of `view`, in view order.
/// The weights sum to one.
pub fn balanced_weights(
    view: &View<'_>,
    eta: &TargetPosterior,
    conf: &Confidences,
) -> Result<Vec<(f64, f64)>> {
    let e = accumulate(view, eta, conf).edge();
    if e.abs() >= 1.0 - EDGE_EPS {
        return Err(Error::DegenerateEdge);
    }
    let z = 1.0 - e * e;
    Ok(view
        .iter()
        .map(|(r, w)| {
            let (eta, nl) = (eta.get(r), conf.get(r));
            (
                w * eta * (1.0 - e * nl) / z,
                w * (1.0 - eta) * (1.0 + e * nl) / z,
            )
        })
        .collect())
}

/// `+1` for rows passing `test`, `-1` otherwise; indexed by dataset row.
pub fn split_indicator(test: &SplitTest, ds: &Dataset) -> Result<Vec<f64>> {
    (0..ds.n_rows())
        .map(|r| {
            Ok(if test.evaluate(&ds.row(r))? {
                1.0
            } else {
                -1.0
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhaReport {
    /// `E_bal[y nl h]`, signed.
    pub balanced_correlation: f64,
    /// Magnitude of the balanced correlation.
    pub condition_one: f64,
    /// `e E[(1 - nl^2) h]` under the leaf measure.
    pub condition_two: f64,
    /// Mass of `h = +1`.
    pub tau: f64,
    /// `(1 + e) / 2` on `h = -1`, the leaf, and `h = +1`.
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub delta: f64,
    pub parent_entropy: f64,
    /// `tau H(r) + (1 - tau) H(p)`.
    pub split_entropy: f64,
}

impl WhaReport {
    /// The split witnesses the assumption at level `gamma`, in whichever
    /// orientation makes the balanced correlation positive.
    pub fn holds_at(&self, gamma: f64) -> bool {
        let orientation = if self.balanced_correlation >= 0.0 {
            1.0
        } else {
            -1.0
        };
        self.condition_one >= gamma && orientation * self.condition_two <= 0.0
    }

    pub fn decrease(&self) -> f64 {
        self.parent_entropy - self.split_entropy
    }
}

/// Evaluates the two weak-learning conditions for the split `h` on a leaf.
/// `h` is indexed by dataset row and takes values `+-1`.
pub fn wha_check(
    view: &View<'_>,
    h: &[f64],
    eta: &TargetPosterior,
    conf: &Confidences,
) -> Result<WhaReport> {
    let bal = balanced_weights(view, eta, conf)?;
    let e = accumulate(view, eta, conf).edge();
    let (mut corr, mut curv) = (0.0, 0.0);
    let (mut up, mut down) = (Accum::default(), Accum::default());
    for ((r, w), (wp, wn)) in view.iter().zip(bal) {
        let (nl, hr) = (conf.get(r), h[r]);
        corr += (wp - wn) * nl * hr;
        curv += w * (1.0 - nl * nl) * hr;
        if hr > 0.0 {
            up.add(w, eta.get(r), nl);
        } else {
            down.add(w, eta.get(r), nl);
        }
    }
    let tau = up.w;
    let q = (1.0 + e) / 2.0;
    let r = (1.0 + up.edge()) / 2.0;
    let p = (1.0 + down.edge()) / 2.0;
    Ok(WhaReport {
        balanced_correlation: corr,
        condition_one: corr.abs(),
        condition_two: e * curv,
        tau,
        p,
        q,
        r,
        delta: r - p,
        parent_entropy: binary_entropy(q),
        split_entropy: tau * binary_entropy(r) + (1.0 - tau) * binary_entropy(p),
    })
}

/// Whether an entropy drop from `pre` to `post` meets `gamma^2 q (1 - q)`.
pub fn decrease_certificate(pre: f64, post: f64, gamma: f64, q: f64) -> bool {
    pre - post >= gamma * gamma * q * (1.0 - q) - 1e-9
}
