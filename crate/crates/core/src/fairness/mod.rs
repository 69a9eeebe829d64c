//! Fairness drivers: each picks a subgroup, a measure and a target, and grows
//! that subgroup's part of the tree with [`topdown`](crate::boosting::topdown).
//!
//! Every driver spends at most `InductionConfig::max_iterations` growth steps
//! in total, one split per step.

mod cvar;
mod eoo;
mod pushup;
mod sp;

pub use cvar::run_cvar;
pub use eoo::run_eoo;
pub use pushup::{pushup_posterior, PushupParams};
pub use sp::run_sp;

use serde::{Deserialize, Serialize};

use crate::boosting::{topdown, Confidences, Induction, InductionConfig};
use crate::error::{Error, Result};
use crate::measures::{TargetPosterior, View};
use crate::model::{AlphaTree, ClipBound};
use crate::trace::RunTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvarSpec {
    pub beta: f64,
    /// Stop once the CVaR drops to this value.
    pub risk_threshold: Option<f64>,
    pub outer_rounds: usize,
}

impl Default for CvarSpec {
    fn default() -> Self {
        CvarSpec {
            beta: 0.9,
            risk_threshold: None,
            outer_rounds: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EooSpec {
    pub epsilon: f64,
    /// Pushup granularity; at least 2.
    pub k: usize,
}

impl Default for EooSpec {
    fn default() -> Self {
        EooSpec { epsilon: 0.1, k: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpDirection {
    /// Raise the group with the lowest mean score.
    #[default]
    Up,
    /// Lower the group with the highest mean score.
    Down,
}

impl std::str::FromStr for SpDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up" => Ok(SpDirection::Up),
            "down" => Ok(SpDirection::Down),
            other => Err(Error::Config(format!("unknown direction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpSpec {
    pub epsilon: f64,
    pub direction: SpDirection,
}

impl Default for SpSpec {
    fn default() -> Self {
        SpSpec {
            epsilon: 0.05,
            direction: SpDirection::Up,
        }
    }
}

/// A complete training strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum StrategySpec {
    Cvar(CvarSpec),
    Eoo(EooSpec),
    Sp(SpSpec),
}

impl StrategySpec {
    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::Cvar(_) => "cvar",
            StrategySpec::Eoo(_) => "eoo",
            StrategySpec::Sp(_) => "sp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eps_ok = |e: f64| e.is_finite() && e > 0.0 && e < 1.0;
        match self {
            StrategySpec::Cvar(c) if !(0.0..1.0).contains(&c.beta) => {
                Err(Error::Config(format!("beta {} must lie in [0, 1)", c.beta)))
            }
            StrategySpec::Eoo(e) if !eps_ok(e.epsilon) => Err(Error::Config(format!(
                "epsilon {} must lie in (0, 1)",
                e.epsilon
            ))),
            StrategySpec::Eoo(e) if e.k < 2 => Err(Error::Config("K must be at least 2".into())),
            StrategySpec::Sp(s) if !eps_ok(s.epsilon) => Err(Error::Config(format!(
                "epsilon {} must lie in (0, 1)",
                s.epsilon
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverStop {
    /// Growth budget spent.
    Budget,
    /// The fairness target was met.
    Converged,
    /// The risk condition guaranteeing the fairness target was met.
    RiskCondition,
    /// No subgroup admits a change.
    NoProgress,
}

#[derive(Debug, Clone)]
pub struct DriverOutcome {
    pub tree: AlphaTree,
    pub trace: RunTrace,
    pub stop: DriverStop,
    pub iterations: usize,
}

/// One growth step on `view`: relabel, then at most one split.
pub(crate) fn grow_once(
    view: &View<'_>,
    target: &TargetPosterior,
    conf: &Confidences,
    b: ClipBound,
    tree: &AlphaTree,
    cfg: &InductionConfig,
) -> Result<(Induction, bool)> {
    let step = InductionConfig {
        max_iterations: 1,
        ..cfg.clone()
    };
    let ind = topdown(view, target, conf, b, tree, &step)?;
    let changed = ind.splits() > 0 || ind.tree != *tree;
    Ok((ind, changed))
}

pub(crate) fn argmin(values: &[Option<f64>], skip: Option<usize>) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
}

pub(crate) fn argmax(values: &[Option<f64>], skip: Option<usize>) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arg_extrema_break_ties_low() {
        let v = [Some(0.5), None, Some(0.2), Some(0.2), Some(0.5)];
        assert_eq!(argmin(&v, None), Some(2));
        assert_eq!(argmax(&v, None), Some(0));
        assert_eq!(argmin(&v, Some(2)), Some(3));
    }

    #[test]
    fn strategy_round_trips_through_json() {
        let s = StrategySpec::Eoo(EooSpec { epsilon: 0.2, k: 3 });
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"strategy":"eoo","epsilon":0.2,"k":3}"#);
        assert_eq!(serde_json::from_str::<StrategySpec>(&j).unwrap(), s);
        assert!(StrategySpec::Eoo(EooSpec { epsilon: 0.2, k: 1 })
            .validate()
            .is_err());
        assert!(StrategySpec::Cvar(CvarSpec {
            beta: 1.0,
            ..CvarSpec::default()
        })
        .validate()
        .is_err());
    }
}
