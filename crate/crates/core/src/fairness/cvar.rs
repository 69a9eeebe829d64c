use std::collections::BTreeSet;

use super::{grow_once, CvarSpec, DriverOutcome, DriverStop};
use crate::boosting::{Confidences, InductionConfig};
use crate::data::{Dataset, Grouping};
use crate::error::{Error, Result};
use crate::estimators::label_plugin;
use crate::measures::View;
use crate::metrics::{cvar_quantile, subgroup_risks, wrap_dataset};
use crate::model::AlphaTree;
use crate::trace::RunTrace;

fn log_risks(
    trace: &mut RunTrace,
    it: usize,
    risks: &[Option<f64>],
    cvar: f64,
    grouping: &Grouping,
) {
    trace.push(it, "cvar", None, cvar);
    for (s, r) in risks.iter().enumerate() {
        if let Some(r) = r {
            trace.push(it, "risk", Some(&grouping.names[s]), *r);
        }
    }
}

/// Repeatedly grows the sub-tree of the riskiest group in the CVaR tail,
/// on that group's measure, against the labels.
pub fn run_cvar(
    ds: &Dataset,
    grouping: &Grouping,
    tree0: &AlphaTree,
    spec: &CvarSpec,
    cfg: &InductionConfig,
) -> Result<DriverOutcome> {
    if !(0.0..1.0).contains(&spec.beta) {
        return Err(Error::Config(format!(
            "beta {} must lie in [0, 1)",
            spec.beta
        )));
    }
    let labels = label_plugin(ds);
    let conf = Confidences::from_scores(ds.scores(), ds.clip())?;
    let full = View::full(ds)?;
    let mut tree = tree0.clone();
    let mut trace = RunTrace::new();
    let mut initiated = BTreeSet::new();
    let mut it = 0;

    let evaluate = |tree: &AlphaTree| -> Result<(Vec<Option<f64>>, f64, Vec<usize>)> {
        let q = wrap_dataset(tree, ds)?;
        let risks = subgroup_risks(ds, &q, grouping, &labels)?;
        let c = cvar_quantile(&risks, spec.beta)?;
        let mut tail = c.members.clone();
        tail.sort_by(|&a, &b| {
            risks[b]
                .unwrap()
                .total_cmp(&risks[a].unwrap())
                .then(a.cmp(&b))
        });
        Ok((risks, c.value, tail))
    };

    let (mut risks, mut cvar, mut tail) = evaluate(&tree)?;
    log_risks(&mut trace, 0, &risks, cvar, grouping);
    let mut stop = DriverStop::Budget;
    for _ in 0..spec.outer_rounds {
        if it >= cfg.max_iterations {
            stop = DriverStop::Budget;
            break;
        }
        if spec.risk_threshold.is_some_and(|t| cvar <= t) {
            stop = DriverStop::Converged;
            break;
        }
        let mut grown = None;
        for &s in &tail {
            let vs = full.condition_on_group(grouping, s)?;
            let (ind, changed) = grow_once(&vs, &labels, &conf, ds.clip(), &tree, cfg)?;
            if changed {
                grown = Some((s, ind.tree));
                break;
            }
        }
        let Some((s, next)) = grown else {
            stop = DriverStop::NoProgress;
            break;
        };
        tree = next;
        it += 1;
        if initiated.insert(s) {
            trace.event(it, "init", Some(&grouping.names[s]));
        }
        (risks, cvar, tail) = evaluate(&tree)?;
        log_risks(&mut trace, it, &risks, cvar, grouping);
    }
    Ok(DriverOutcome {
        tree,
        trace,
        stop,
        iterations: it,
    })
}
