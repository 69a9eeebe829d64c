//! Seeded, group-stratified fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::Grouping;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Blackbox,
    Postprocess,
    Test,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Blackbox => "blackbox",
            Role::Postprocess => "postprocess",
            Role::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    /// Fold of each row.
    pub fold: Vec<usize>,
    pub n_folds: usize,
    /// Groups with fewer rows than folds.
    pub small_groups: Vec<String>,
}

impl SplitPlan {
    /// Role of each row when `test_fold` is held out. The remaining rows are
    /// divided between black-box training and post-processing by fold.
    pub fn roles(&self, test_fold: usize) -> Vec<Role> {
        let others: Vec<usize> = (0..self.n_folds).filter(|&f| f != test_fold).collect();
        let half = others.len() / 2;
        self.fold
            .iter()
            .map(|&f| {
                if f == test_fold {
                    Role::Test
                } else if others[..half].contains(&f) {
                    Role::Blackbox
                } else {
                    Role::Postprocess
                }
            })
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_folds];
        for &f in &self.fold {
            out[f] += 1;
        }
        out
    }
}

/// Shuffles each group with a seeded generator, then deals rows round-robin
/// across folds so every fold sees every group in proportion.
pub fn split_plan(grouping: &Grouping, n_folds: usize, seed: u64) -> Result<SplitPlan> {
    if n_folds < 3 {
        return Err(Error::Config("at least three folds are needed".into()));
    }
    let n = grouping.codes.len();
    if n < n_folds {
        return Err(Error::Config(format!(
            "{n} rows cannot fill {n_folds} folds"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_group = vec![Vec::new(); grouping.n_groups()];
    for (r, &g) in grouping.codes.iter().enumerate() {
        by_group[g].push(r);
    }
    let mut small_groups = Vec::new();
    let mut fold = vec![0; n];
    let mut next = 0;
    for (g, rows) in by_group.iter_mut().enumerate() {
        if !rows.is_empty() && rows.len() < n_folds {
            small_groups.push(grouping.names[g].clone());
        }
        rows.shuffle(&mut rng);
        for &r in rows.iter() {
            fold[r] = next;
            next = (next + 1) % n_folds;
        }
    }
    Ok(SplitPlan {
        fold,
        n_folds,
        small_groups,
    })
}
