use super::{argmax, argmin, grow_once, DriverOutcome, DriverStop, SpDirection, SpSpec};
use crate::boosting::{Confidences, InductionConfig};
use crate::data::{Dataset, Grouping};
use crate::error::{Error, Result};
use crate::measures::{TargetPosterior, View};
use crate::metrics::{group_means, wrap_dataset};
use crate::model::AlphaTree;
use crate::trace::RunTrace;

fn spread(means: &[Option<f64>]) -> f64 {
    let v: Vec<f64> = means.iter().flatten().copied().collect();
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - v.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Moves the mean score of the extreme group toward the other extreme.
///
/// Going up, the lowest group is fitted to the constant mean black-box score
/// of the highest group; going down, the highest group is fitted to the mean
/// black-box score of the lowest.
pub fn run_sp(
    ds: &Dataset,
    grouping: &Grouping,
    tree0: &AlphaTree,
    spec: &SpSpec,
    cfg: &InductionConfig,
) -> Result<DriverOutcome> {
    if !(spec.epsilon > 0.0 && spec.epsilon < 1.0) {
        return Err(Error::Config(format!(
            "epsilon {} must lie in (0, 1)",
            spec.epsilon
        )));
    }
    let conf = Confidences::from_scores(ds.scores(), ds.clip())?;
    let full = View::full(ds)?;
    let blackbox_means = group_means(ds, ds.scores(), grouping);
    let mut tree = tree0.clone();
    let mut trace = RunTrace::new();
    let mut it = 0;

    let log = |trace: &mut RunTrace, it: usize, m: &[Option<f64>]| {
        trace.push(it, "sp_gap", None, spread(m));
        for (s, v) in m.iter().enumerate() {
            if let Some(v) = v {
                trace.push(it, "mean_score", Some(&grouping.names[s]), *v);
            }
        }
    };
    let mut means = group_means(ds, &wrap_dataset(&tree, ds)?, grouping);
    log(&mut trace, 0, &means);
    let mut worked = None;

    let stop = loop {
        if spread(&means) <= spec.epsilon {
            break DriverStop::Converged;
        }
        if it >= cfg.max_iterations {
            break DriverStop::Budget;
        }
        let (lo, hi) = match (argmin(&means, None), argmax(&means, None)) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => break DriverStop::Converged,
        };
        let (grow, anchor) = match spec.direction {
            SpDirection::Up => (lo, hi),
            SpDirection::Down => (hi, lo),
        };
        let level = blackbox_means[anchor].expect("anchor group has rows");
        let target = TargetPosterior::constant(ds.n_rows(), level)?;
        let view = full.condition_on_group(grouping, grow)?;
        let (ind, changed) = grow_once(&view, &target, &conf, ds.clip(), &tree, cfg)?;
        if !changed {
            break DriverStop::NoProgress;
        }
        tree = ind.tree;
        it += 1;
        if worked != Some(grow) {
            trace.event(it, "target", Some(&grouping.names[grow]));
            worked = Some(grow);
        }
        means = group_means(ds, &wrap_dataset(&tree, ds)?, grouping);
        log(&mut trace, it, &means);
    };
    Ok(DriverOutcome {
        tree,
        trace,
        stop,
        iterations: it,
    })
}
