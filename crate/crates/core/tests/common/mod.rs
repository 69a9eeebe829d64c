//! Synthetic datasets and trees shared by the integration tests.
#![allow(dead_code)]

use fairwrap::data::{Dataset, Label, RawRow, RawValue};
use fairwrap::model::{AlphaTree, AlphaValue, ClipBound, SplitTest};
use rand::Rng;

pub const LEVELS: [&str; 3] = ["u", "v", "w"];

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Random data with `n_numeric` features `x0..`, one categorical feature `c`
/// and groups `g0..g{n_groups-1}`. The target column holds the true posterior
/// the labels were drawn from; black-box scores are a noisy, group-shifted
/// version of it.
pub fn random_dataset<R: Rng>(
    rng: &mut R,
    n: usize,
    n_numeric: usize,
    n_groups: usize,
    b: f64,
) -> Dataset {
    let mut builder = Dataset::builder(ClipBound::new(b).unwrap()).categorical("c");
    for j in 0..n_numeric {
        builder = builder.numeric(&format!("x{j}"));
    }
    let coef: Vec<f64> = (0..n_numeric)
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let shift: Vec<f64> = (0..n_groups).map(|_| rng.random_range(-1.0..1.0)).collect();
    for _ in 0..n {
        let c = LEVELS[rng.random_range(0..LEVELS.len())];
        let x: Vec<f64> = (0..n_numeric)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let g = rng.random_range(0..n_groups);
        let z: f64 =
            coef.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() + if c == "u" { 0.5 } else { 0.0 };
        let eta = sigmoid(z).clamp(1e-6, 1.0 - 1e-6);
        let label = if rng.random::<f64>() < eta {
            Label::Positive
        } else {
            Label::Negative
        };
        let q = sigmoid(z + shift[g] + rng.random_range(-0.5..0.5));
        let mut values = vec![RawValue::Categorical(c.to_string())];
        values.extend(x.into_iter().map(RawValue::Numeric));
        builder.push(RawRow::new(values, label, &format!("g{g}"), q).target(eta));
    }
    builder.build().unwrap()
}

/// Random tree over the features of [`random_dataset`], with alphas drawn by `alpha`.
pub fn random_tree<R: Rng>(
    rng: &mut R,
    n_numeric: usize,
    max_splits: usize,
    mut alpha: impl FnMut(&mut R) -> f64,
) -> AlphaTree {
    let mut tree = AlphaTree::identity();
    let splits = rng.random_range(0..=max_splits);
    for _ in 0..splits {
        let leaves: Vec<_> = tree.leaves().iter().map(|l| l.id).collect();
        let id = leaves[rng.random_range(0..leaves.len())];
        let test = if n_numeric == 0 || rng.random_bool(0.3) {
            SplitTest::Category {
                feature: "c".into(),
                modality: LEVELS[rng.random_range(0..LEVELS.len())].into(),
            }
        } else {
            SplitTest::Threshold {
                feature: format!("x{}", rng.random_range(0..n_numeric)),
                threshold: rng.random_range(-1.0..1.0),
            }
        };
        tree.split_leaf(id, test).unwrap();
    }
    let ids: Vec<_> = tree.leaves().iter().map(|l| l.id).collect();
    for id in ids {
        let a = alpha(rng);
        tree.set_leaf(id, AlphaValue::new(a).unwrap(), 0.0, 0.0)
            .unwrap();
    }
    tree
}
