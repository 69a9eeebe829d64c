use super::{
    argmax, argmin, grow_once, pushup_posterior, DriverOutcome, DriverStop, EooSpec, PushupParams,
};
use crate::boosting::{Confidences, InductionConfig};
use crate::data::{Dataset, Grouping};
use crate::error::{Error, Result};
use crate::measures::{binary_entropy, TargetPosterior, View};
use crate::metrics::{advantage_rate, wrap_dataset};
use crate::model::{AlphaTree, Score};
use crate::trace::RunTrace;

const MAX_K: f64 = 100.0;

fn rates(ds: &Dataset, q: &[Score], grouping: &Grouping) -> Vec<Option<f64>> {
    (0..grouping.n_groups())
        .map(|s| advantage_rate(ds, q, grouping, s))
        .collect()
}

fn gap(rates: &[Option<f64>]) -> f64 {
    let v: Vec<f64> = rates.iter().flatten().copied().collect();
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - v.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Pushup mass and level for a target advantaged rate, raising `K` if needed.
fn pushup_schedule(rate_star: f64, spec: &EooSpec) -> Result<(f64, f64, f64)> {
    let eps = spec.epsilon;
    let mut k = spec.k as f64;
    if rate_star + eps / (k - 1.0) > 1.0 {
        if rate_star >= 1.0 {
            return Err(Error::InfeasiblePushup {
                rate: rate_star,
                epsilon: eps,
            });
        }
        k = (1.0 + eps / (1.0 - rate_star) - 1e-9).ceil().max(k);
        if k > MAX_K {
            return Err(Error::InfeasiblePushup {
                rate: rate_star,
                epsilon: eps,
            });
        }
    }
    let p = (rate_star + eps / (k - 1.0)).min(1.0);
    let delta = k * eps / (k - 1.0);
    Ok((k, p, delta))
}

struct Target<'a> {
    group: usize,
    view: View<'a>,
    eta: TargetPosterior,
    params: PushupParams,
    expected_entropy: f64,
}

fn target_for<'a>(
    ds: &'a Dataset,
    grouping: &Grouping,
    group: usize,
    eta: &TargetPosterior,
    rate_star: f64,
    spec: &EooSpec,
) -> Result<Target<'a>> {
    let view = View::full(ds)?
        .condition_on_group(grouping, group)?
        .condition_positive()?;
    let (_, p, delta) = pushup_schedule(rate_star, spec)?;
    let (pushed, params) = pushup_posterior(&view, eta, p, delta)?;
    let expected_entropy = view.expect(|r| binary_entropy(pushed.get(r)));
    Ok(Target {
        group,
        view,
        eta: pushed,
        params,
        expected_entropy,
    })
}

/// Raises the true-positive rate of the most disadvantaged group toward the
/// most advantaged one by fitting its sub-tree to a pushed-up posterior.
///
/// `eta` is an estimate of `P(Y = +1 | x)` indexed by dataset row.
pub fn run_eoo(
    ds: &Dataset,
    grouping: &Grouping,
    tree0: &AlphaTree,
    eta: &TargetPosterior,
    spec: &EooSpec,
    cfg: &InductionConfig,
) -> Result<DriverOutcome> {
    if !(spec.epsilon > 0.0 && spec.epsilon < 1.0) || spec.k < 2 {
        return Err(Error::Config(
            "epsilon must lie in (0, 1) and K be at least 2".into(),
        ));
    }
    if eta.len() != ds.n_rows() {
        return Err(Error::Config(
            "posterior estimate has the wrong length".into(),
        ));
    }
    let conf = Confidences::from_scores(ds.scores(), ds.clip())?;
    let risk_slack = spec.epsilon.powi(4) / 2.0;
    let mut tree = tree0.clone();
    let mut trace = RunTrace::new();

    let q = wrap_dataset(&tree, ds)?;
    let mut r = rates(ds, &q, grouping);
    let log = |trace: &mut RunTrace, it: usize, r: &[Option<f64>]| {
        trace.push(it, "eoo_gap", None, gap(r));
        for (s, v) in r.iter().enumerate() {
            if let Some(v) = v {
                trace.push(it, "advantage_rate", Some(&grouping.names[s]), *v);
            }
        }
    };
    log(&mut trace, 0, &r);

    let star =
        argmax(&r, None).ok_or_else(|| Error::EmptyMeasure("no group has positives".into()))?;
    let mut it = 0;
    let finish = |tree, trace, stop, it| {
        Ok(DriverOutcome {
            tree,
            trace,
            stop,
            iterations: it,
        })
    };
    if gap(&r) <= spec.epsilon {
        return finish(tree, trace, DriverStop::Converged, 0);
    }
    let Some(first) = argmin(&r, Some(star)) else {
        return finish(tree, trace, DriverStop::Converged, 0);
    };
    let mut target = target_for(ds, grouping, first, eta, r[star].unwrap(), spec)?;
    trace.push(
        0,
        "pushup_floor",
        Some(&grouping.names[first]),
        target.params.eta_floor,
    );

    let stop = loop {
        if it >= cfg.max_iterations {
            break DriverStop::Budget;
        }
        let (ind, changed) = grow_once(&target.view, &target.eta, &conf, ds.clip(), &tree, cfg)?;
        if !changed {
            break DriverStop::NoProgress;
        }
        tree = ind.tree;
        it += 1;
        let q = wrap_dataset(&tree, ds)?;
        r = rates(ds, &q, grouping);
        log(&mut trace, it, &r);
        let risk = ind.records.last().expect("initial record").risk;
        trace.push(it, "target_risk", Some(&grouping.names[target.group]), risk);
        if risk <= risk_slack + target.expected_entropy {
            break DriverStop::RiskCondition;
        }
        if gap(&r) <= spec.epsilon {
            break DriverStop::Converged;
        }
        if let Some(next) = argmin(&r, Some(star)) {
            if next != target.group {
                target = target_for(ds, grouping, next, eta, r[star].unwrap(), spec)?;
                trace.event(it, "switch", Some(&grouping.names[next]));
                trace.push(
                    it,
                    "pushup_floor",
                    Some(&grouping.names[next]),
                    target.params.eta_floor,
                );
            }
        }
    };
    finish(tree, trace, stop, it)
}
