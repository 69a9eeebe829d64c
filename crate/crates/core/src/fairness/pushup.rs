use crate::error::{Error, Result};
use crate::measures::{TargetPosterior, View};

/// Parameters of a pushup. Rows of the view whose posterior lies in
/// `[eta_floor, 1/2 + delta]` are raised to `1/2 + delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushupParams {
    pub p: f64,
    pub delta: f64,
    /// Smallest posterior among the top-`p` mass; `+inf` when that set is empty.
    pub eta_floor: f64,
}

impl PushupParams {
    pub fn level(&self) -> f64 {
        (0.5 + self.delta).min(1.0)
    }

    /// No row moves when the floor is already on the positive side.
    pub fn is_identity(&self) -> bool {
        self.eta_floor >= 0.5
    }

    pub fn map(&self, eta: f64) -> f64 {
        if !self.is_identity() && eta >= self.eta_floor && eta <= self.level() {
            self.level()
        } else {
            eta
        }
    }

    /// Applies the map to the rows of `view`; other rows are copied.
    pub fn apply(&self, view: &View<'_>, eta: &TargetPosterior) -> TargetPosterior {
        let mut out = eta.values().to_vec();
        for &r in view.rows() {
            out[r] = self.map(out[r]);
        }
        TargetPosterior::new(out).expect("pushup keeps values in [0, 1]")
    }
}

/// Raises the posterior of the top-`p` mass of `view` (ordered by posterior,
/// ties by row) to at least `1/2 + delta`.
pub fn pushup_posterior(
    view: &View<'_>,
    eta: &TargetPosterior,
    p: f64,
    delta: f64,
) -> Result<(TargetPosterior, PushupParams)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange {
            what: "pushup mass",
            value: p,
        });
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::OutOfRange {
            what: "pushup delta",
            value: delta,
        });
    }
    let mut order: Vec<(usize, f64)> = view.iter().collect();
    order.sort_by(|a, b| eta.get(b.0).total_cmp(&eta.get(a.0)).then(a.0.cmp(&b.0)));
    let mut floor = f64::INFINITY;
    let mut acc = 0.0;
    for (r, w) in order {
        if acc >= p {
            break;
        }
        floor = floor.min(eta.get(r));
        acc += w;
    }
    let params = PushupParams {
        p,
        delta,
        eta_floor: floor,
    };
    Ok((params.apply(view, eta), params))
}
