//! Pointwise score algebra: clipping, logits and the alpha twist.
//!
//! A [`Score`] keeps both its probability and its logit so that chains of
//! twists compose exactly in logit space.

use std::fmt;

use crate::error::{Error, Result};

/// Relative slack allowed when checking that a logit lies inside `[-B, B]`.
const CLIP_SLACK: f64 = 1e-12;

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x == f64::INFINITY {
        return f64::INFINITY;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// A class probability in `[0, 1]` together with its logit.
#[derive(Clone, Copy)]
pub struct Score {
    prob: f64,
    logit: f64,
}

impl Score {
    pub fn new(prob: f64) -> Result<Self> {
        if !prob.is_finite() {
            return Err(Error::NonFinite {
                what: "score",
                value: prob,
            });
        }
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::OutOfRange {
                what: "score",
                value: prob,
            });
        }
        let logit = if prob == 0.0 {
            f64::NEG_INFINITY
        } else if prob == 1.0 {
            f64::INFINITY
        } else {
            prob.ln() - (-prob).ln_1p()
        };
        Ok(Score { prob, logit })
    }

    /// Builds a score from a finite or infinite logit.
    pub fn from_logit(logit: f64) -> Result<Self> {
        if logit.is_nan() {
            return Err(Error::NonFinite {
                what: "logit",
                value: logit,
            });
        }
        Ok(Score {
            prob: sigmoid(logit),
            logit,
        })
    }

    pub fn value(self) -> f64 {
        self.prob
    }

    pub fn logit_value(self) -> f64 {
        self.logit
    }
}

impl PartialEq for Score {
    fn eq(&self, other: &Self) -> bool {
        self.prob == other.prob
    }
}

impl fmt::Debug for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Score({})", self.prob)
    }
}

/// Logit magnitude bound `B > 0`; scores are clipped to `[sigma(-B), sigma(B)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipBound(f64);

impl ClipBound {
    pub fn new(b: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::NonFinite {
                what: "clip bound",
                value: b,
            });
        }
        if b <= 0.0 {
            return Err(Error::OutOfRange {
                what: "clip bound",
                value: b,
            });
        }
        Ok(ClipBound(b))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Endpoints of the clip interval.
    pub fn interval(self) -> (f64, f64) {
        (1.0 / (1.0 + self.0.exp()), 1.0 / (1.0 + (-self.0).exp()))
    }
}

/// A finite leaf multiplier. Negative values reverse polarity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AlphaValue(f64);

impl AlphaValue {
    pub const IDENTITY: AlphaValue = AlphaValue(1.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::NonFinite {
                what: "alpha",
                value: alpha,
            });
        }
        Ok(AlphaValue(alpha))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Projects `q` onto the clip interval, exactly at the endpoints' logits.
pub fn clip_score(q: Score, b: ClipBound) -> Score {
    let (lo, hi) = b.interval();
    if q.prob < lo {
        Score {
            prob: lo,
            logit: -b.0,
        }
    } else if q.prob > hi {
        Score {
            prob: hi,
            logit: b.0,
        }
    } else {
        q
    }
}

/// `ln(u / (1 - u))`, undefined at 0 and 1.
pub fn logit(u: Score) -> Result<f64> {
    if u.logit.is_finite() {
        Ok(u.logit)
    } else {
        Err(Error::Domain(format!("logit undefined at {}", u.prob)))
    }
}

/// Logit divided by `B`; lies in `[-1, 1]` for clipped scores.
pub fn nlogit(u: Score, b: ClipBound) -> Result<f64> {
    let z = logit(u)?;
    if z.abs() > b.0 * (1.0 + CLIP_SLACK) {
        return Err(Error::OutsideClip {
            value: u.prob,
            bound: b.0,
        });
    }
    Ok((z / b.0).clamp(-1.0, 1.0))
}

/// Twists `q` into `sigma(alpha * logit(q))`.
pub fn apply_alpha(q: Score, alpha: AlphaValue) -> Result<Score> {
    let z = logit(q)?;
    if alpha.0 == 1.0 {
        return Ok(q);
    }
    Score::from_logit(alpha.0 * z)
}

/// Sequential twists by `a` then `b` equal a single twist by `a * b`.
pub fn compose_alpha(a: AlphaValue, b: AlphaValue) -> AlphaValue {
    AlphaValue(a.0 * b.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s(p: f64) -> Score {
        Score::new(p).unwrap()
    }

    fn b(v: f64) -> ClipBound {
        ClipBound::new(v).unwrap()
    }

    #[test]
    fn clip_interval_values() {
        let (lo, hi) = b(1.0).interval();
        assert_abs_diff_eq!(lo, 0.268941, epsilon = 1e-6);
        assert_abs_diff_eq!(hi, 0.731059, epsilon = 1e-6);
        let (lo, hi) = b(3.0).interval();
        assert_abs_diff_eq!(lo, 0.047426, epsilon = 1e-6);
        assert_abs_diff_eq!(hi, 0.952574, epsilon = 1e-6);
    }

    #[test]
    fn clipping() {
        assert_eq!(clip_score(s(0.5), b(1.0)).value(), 0.5);
        assert_abs_diff_eq!(
            clip_score(s(0.99), b(1.0)).value(),
            0.731059,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(clip_score(s(0.0), b(3.0)).value(), 0.047426, epsilon = 1e-6);
        assert_eq!(clip_score(s(1.0), b(2.0)).logit_value(), 2.0);
        assert!(Score::new(f64::NAN).is_err());
        assert!(Score::new(1.5).is_err());
    }

    #[test]
    fn logits() {
        assert_eq!(logit(s(0.5)).unwrap(), 0.0);
        assert_abs_diff_eq!(logit(s(0.7)).unwrap(), 0.847298, epsilon = 1e-6);
        assert!(logit(s(0.0)).is_err());
        assert!(logit(s(1.0)).is_err());
        let hi = clip_score(s(1.0), b(1.0));
        assert_eq!(nlogit(hi, b(1.0)).unwrap(), 1.0);
        assert_abs_diff_eq!(
            nlogit(s(0.7310585786300049), b(1.0)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            nlogit(s(0.75), b(1.0)),
            Err(Error::OutsideClip { .. })
        ));
    }

    #[test]
    fn twist_values() {
        assert_eq!(apply_alpha(s(0.7), AlphaValue(1.0)).unwrap().value(), 0.7);
        assert_eq!(apply_alpha(s(0.7), AlphaValue(0.0)).unwrap().value(), 0.5);
        assert_abs_diff_eq!(
            apply_alpha(s(0.7), AlphaValue(2.0)).unwrap().value(),
            0.844828,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            apply_alpha(s(0.7), AlphaValue(-1.0)).unwrap().value(),
            0.3,
            epsilon = 1e-12
        );
        assert!(apply_alpha(s(0.0), AlphaValue(2.0)).is_err());
        assert!(AlphaValue::new(f64::INFINITY).is_err());
    }

    #[test]
    fn composition_is_multiplicative() {
        let q = s(0.3);
        let twice = apply_alpha(apply_alpha(q, AlphaValue(2.0)).unwrap(), AlphaValue(3.0)).unwrap();
        let once = apply_alpha(q, compose_alpha(AlphaValue(2.0), AlphaValue(3.0))).unwrap();
        assert_abs_diff_eq!(twice.value(), once.value(), epsilon = 1e-15);
        // saturated intermediates still compose through the stored logit
        let hot = apply_alpha(s(0.95), AlphaValue(50.0)).unwrap();
        assert_eq!(hot.value(), 1.0);
        let back = apply_alpha(hot, AlphaValue(0.02)).unwrap();
        assert_abs_diff_eq!(back.value(), 0.95, epsilon = 1e-12);
    }

    #[test]
    fn softplus_edges() {
        assert_eq!(softplus(f64::NEG_INFINITY), 0.0);
        assert_abs_diff_eq!(softplus(0.0), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(softplus(800.0), 800.0, epsilon = 1e-12);
    }
}
