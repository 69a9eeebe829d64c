//! Fairness, accuracy and proximity metrics for wrapped scores.
//!
//! Scores are indexed by dataset row. Unless stated otherwise expectations use
//! the dataset weights.

use std::f64::consts::PI;

use crate::data::{Dataset, Grouping};
use crate::error::{Error, Result};
use crate::measures::{empirical_risk, TargetPosterior, View};
use crate::model::{softplus, AlphaTree, ClipBound, Score};

/// Twists every row of `ds` by `tree`.
pub fn wrap_dataset(tree: &AlphaTree, ds: &Dataset) -> Result<Vec<Score>> {
    (0..ds.n_rows())
        .map(|r| tree.wrap(&ds.row(r), ds.scores()[r]))
        .collect()
}

fn group_views<'a>(ds: &'a Dataset, grouping: &Grouping) -> Vec<Option<View<'a>>> {
    let full = View::full(ds).expect("dataset has rows");
    (0..grouping.n_groups())
        .map(|s| full.condition_on_group(grouping, s).ok())
        .collect()
}

/// `P(q > 1/2 | Y = +1, s)` for one group; `None` when it has no positives.
pub fn advantage_rate(ds: &Dataset, q: &[Score], grouping: &Grouping, group: usize) -> Option<f64> {
    let vs = View::full(ds)
        .ok()?
        .condition_on_group(grouping, group)
        .ok()?;
    let pos = vs.condition_positive().ok()?;
    Some(pos.expect(|r| if q[r].value() > 0.5 { 1.0 } else { 0.0 }))
}

/// Spread of per-group values, ignoring groups without a value.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub gap: f64,
    pub per_group: Vec<Option<f64>>,
    /// Groups left out because the value is undefined for them.
    pub excluded: Vec<String>,
}

fn gap_of(per_group: Vec<Option<f64>>, grouping: &Grouping) -> GapReport {
    let vals: Vec<f64> = per_group.iter().flatten().copied().collect();
    let gap = if vals.is_empty() {
        0.0
    } else {
        vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - vals.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let excluded = per_group
        .iter()
        .zip(&grouping.names)
        .filter(|(v, _)| v.is_none())
        .map(|(_, n)| n.clone())
        .collect();
    GapReport {
        gap,
        per_group,
        excluded,
    }
}

/// Largest difference in true-positive rate at threshold 1/2.
pub fn eoo_gap(ds: &Dataset, q: &[Score], grouping: &Grouping) -> GapReport {
    let rates = (0..grouping.n_groups())
        .map(|s| advantage_rate(ds, q, grouping, s))
        .collect();
    gap_of(rates, grouping)
}

/// Mean score of each group.
pub fn group_means(ds: &Dataset, q: &[Score], grouping: &Grouping) -> Vec<Option<f64>> {
    group_views(ds, grouping)
        .into_iter()
        .map(|v| v.map(|v| v.expect(|r| q[r].value())))
        .collect()
}

/// Largest difference in mean score between groups.
pub fn sp_gap(ds: &Dataset, q: &[Score], grouping: &Grouping) -> GapReport {
    gap_of(group_means(ds, q, grouping), grouping)
}

/// Log-loss of `q` against `target` within each group.
pub fn subgroup_risks(
    ds: &Dataset,
    q: &[Score],
    grouping: &Grouping,
    target: &TargetPosterior,
) -> Result<Vec<Option<f64>>> {
    group_views(ds, grouping)
        .into_iter()
        .map(|v| v.map(|v| empirical_risk(&v, q, target)).transpose())
        .collect()
}

/// Upper tail of the per-group risks.
#[derive(Debug, Clone, PartialEq)]
pub struct CvarSummary {
    /// Smallest risk still inside the tail.
    pub threshold: f64,
    /// Indices of the groups whose risk is at least `threshold`.
    pub members: Vec<usize>,
    /// Mean risk over `members`.
    pub value: f64,
}

/// Tail of the group risks carrying at least a `1 - beta` share of the groups.
/// Groups count equally; `None` entries are skipped.
pub fn cvar_quantile(risks: &[Option<f64>], beta: f64) -> Result<CvarSummary> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Config(format!("beta {beta} must lie in [0, 1)")));
    }
    let mut present: Vec<(usize, f64)> = risks
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (i, r)))
        .collect();
    if present.is_empty() {
        return Err(Error::EmptyMeasure("no group has a defined risk".into()));
    }
    present.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let g = present.len() as f64;
    let k = (((1.0 - beta) * g) - 1e-9).ceil().max(1.0) as usize;
    let threshold = present[k.min(present.len()) - 1].1;
    let members: Vec<usize> = present
        .iter()
        .filter(|(_, r)| *r >= threshold)
        .map(|(i, _)| *i)
        .collect();
    let value = members.iter().map(|&i| risks[i].unwrap()).sum::<f64>() / members.len() as f64;
    Ok(CvarSummary {
        threshold,
        members,
        value,
    })
}

/// `E|1{y = +1} - q|`.
pub fn mean_deviation(ds: &Dataset, q: &[Score]) -> f64 {
    let v = View::full(ds).expect("dataset has rows");
    v.expect(|r| {
        let y = if ds.labels()[r].is_positive() {
            1.0
        } else {
            0.0
        };
        (y - q[r].value()).abs()
    })
}

/// Weighted misclassification rate; a score of exactly 1/2 predicts negative.
pub fn zero_one_error(ds: &Dataset, q: &[Score]) -> f64 {
    let v = View::full(ds).expect("dataset has rows");
    v.expect(|r| {
        let predicted = q[r].value() > 0.5;
        if predicted == ds.labels()[r].is_positive() {
            0.0
        } else {
            1.0
        }
    })
}

/// Log-loss against the labels.
pub fn log_loss(ds: &Dataset, q: &[Score]) -> Result<f64> {
    let v = View::full(ds)?;
    empirical_risk(&v, q, &crate::estimators::label_plugin(ds))
}

/// Weighted Mann-Whitney statistic; ties count one half.
pub fn auc(ds: &Dataset, q: &[Score]) -> Result<f64> {
    let w = ds.weights();
    let mut order: Vec<usize> = (0..ds.n_rows()).collect();
    order.sort_by(|&a, &b| q[a].value().total_cmp(&q[b].value()));
    let (mut neg_below, mut num) = (0.0, 0.0);
    let (mut wp, mut wn) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let v = q[order[i]].value();
        let mut j = i;
        let (mut tp, mut tn) = (0.0, 0.0);
        while j < order.len() && q[order[j]].value() == v {
            let r = order[j];
            if ds.labels()[r].is_positive() {
                tp += w[r];
            } else {
                tn += w[r];
            }
            j += 1;
        }
        num += tp * (neg_below + 0.5 * tn);
        neg_below += tn;
        wp += tp;
        wn += tn;
        i = j;
    }
    if wp <= 0.0 || wn <= 0.0 {
        return Err(Error::Config(
            "area under the curve needs both classes".into(),
        ));
    }
    Ok(num / (wp * wn))
}

fn bernoulli_kl(p: Score, q: Score) -> f64 {
    // ln p = -softplus(-z)
    let (zp, zq) = (p.logit_value(), q.logit_value());
    let (pv, pc) = (p.value(), 1.0 - p.value());
    let mut kl = 0.0;
    if pv > 0.0 {
        kl += pv * (softplus(-zq) - softplus(-zp));
    }
    if pc > 0.0 {
        kl += pc * (softplus(zq) - softplus(zp));
    }
    kl.max(0.0)
}

/// `E[KL(q_u || q_f)]` under `view`.
pub fn empirical_kl(view: &View<'_>, q_u: &[Score], q_f: &[Score]) -> f64 {
    view.expect(|r| bernoulli_kl(q_u[r], q_f[r]))
}

/// Proximity bound when every leaf satisfies `|alpha - 1| <= 1/B` and `B <= 3`.
pub fn kl_bound_s1(b: ClipBound) -> f64 {
    let b = b.get();
    PI * PI / (6.0 * (2.0 + b.exp() + (-b).exp()))
}

pub fn s1_applicable(tree: &AlphaTree, b: ClipBound) -> bool {
    b.get() <= 3.0
        && tree
            .leaves()
            .iter()
            .all(|l| (l.alpha.get() - 1.0).abs() <= 1.0 / b.get())
}

/// Proximity bound when `|logit(q_u) (1 - alpha)| <= 1` on every row.
pub fn kl_bound_s2() -> f64 {
    PI * PI / 24.0
}

pub fn s2_applicable(tree: &AlphaTree, ds: &Dataset) -> Result<bool> {
    for r in 0..ds.n_rows() {
        if twist_gap(tree, ds, r)? > 1.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn twist_gap(tree: &AlphaTree, ds: &Dataset, r: usize) -> Result<f64> {
    let alpha = tree.evaluate(&ds.row(r))?.get();
    Ok((ds.scores()[r].logit_value() * (1.0 - alpha)).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorBound {
    /// Truncated series up to the requested order.
    pub value: f64,
    /// Bound on the neglected terms, available when every `f <= 1`.
    pub tail: Option<f64>,
}

/// `E[sum_{k=2..K} q(1-q) f^k / (k(k-1))]` with `f = |logit(q_u)(1 - alpha)|`.
pub fn kl_taylor_bound(view: &View<'_>, tree: &AlphaTree, order: usize) -> Result<TaylorBound> {
    if order < 2 {
        return Err(Error::Config("series order must be at least 2".into()));
    }
    let ds = view.dataset();
    let (mut value, mut tail, mut bounded) = (0.0, 0.0, true);
    for (r, w) in view.iter() {
        let q = ds.scores()[r].value();
        let f = twist_gap(tree, ds, r)?;
        let qq = q * (1.0 - q);
        let mut fk = f;
        let mut s = 0.0;
        for k in 2..=order {
            fk *= f;
            s += fk / (k * (k - 1)) as f64;
        }
        value += w * qq * s;
        if f > 1.0 {
            bounded = false;
        }
        tail += w * qq * fk * f / order as f64;
    }
    Ok(TaylorBound {
        value,
        tail: bounded.then_some(tail),
    })
}

/// One line per metric, for the unwrapped and the wrapped scores.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<(String, f64, f64)>,
}

impl MetricReport {
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        self.rows
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, a, b)| (*a, *b))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,blackbox,wrapped\n");
        for (n, a, b) in &self.rows {
            out.push_str(&format!("{n},{a},{b}\n"));
        }
        out
    }
}

/// Full evaluation of `tree` on `ds`, with CVaR at level `beta`.
pub fn evaluate(
    ds: &Dataset,
    tree: &AlphaTree,
    grouping: &Grouping,
    beta: f64,
) -> Result<MetricReport> {
    let q_u = ds.scores().to_vec();
    let q_f = wrap_dataset(tree, ds)?;
    let labels = crate::estimators::label_plugin(ds);
    let mut rows = Vec::new();
    let cvar = |q: &[Score]| -> Result<f64> {
        Ok(cvar_quantile(&subgroup_risks(ds, q, grouping, &labels)?, beta)?.value)
    };
    rows.push(("cvar".to_string(), cvar(&q_u)?, cvar(&q_f)?));
    rows.push((
        "eoo_gap".to_string(),
        eoo_gap(ds, &q_u, grouping).gap,
        eoo_gap(ds, &q_f, grouping).gap,
    ));
    rows.push((
        "sp_gap".to_string(),
        sp_gap(ds, &q_u, grouping).gap,
        sp_gap(ds, &q_f, grouping).gap,
    ));
    rows.push((
        "log_loss".to_string(),
        log_loss(ds, &q_u)?,
        log_loss(ds, &q_f)?,
    ));
    rows.push((
        "zero_one".to_string(),
        zero_one_error(ds, &q_u),
        zero_one_error(ds, &q_f),
    ));
    rows.push((
        "mean_deviation".to_string(),
        mean_deviation(ds, &q_u),
        mean_deviation(ds, &q_f),
    ));
    let has_both =
        ds.labels().iter().any(|l| l.is_positive()) && ds.labels().iter().any(|l| !l.is_positive());
    if has_both {
        rows.push(("auc".to_string(), auc(ds, &q_u)?, auc(ds, &q_f)?));
    }
    let full = View::full(ds)?;
    rows.push((
        "kl_to_blackbox".to_string(),
        0.0,
        empirical_kl(&full, &q_u, &q_f),
    ));
    Ok(MetricReport { rows })
}
