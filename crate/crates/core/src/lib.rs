//! Post-processing of black-box class probabilities for group fairness.
//!
//! A black-box score `q` is clipped to a logit band `[-B, B]` and then twisted
//! leafwise as `sigma(alpha(x) * logit(q))`, where `alpha` is read off a
//! binary [`AlphaTree`](model::AlphaTree). Trees are grown by entropy-driven
//! boosting against a target posterior, and fairness drivers pick the target
//! and the measure for each subgroup.

pub mod boosting;
pub mod data;
pub mod error;
pub mod estimators;
pub mod fairness;
pub mod io;
pub mod measures;
pub mod metrics;
pub mod model;
pub mod trace;

pub use error::{Error, Result};
