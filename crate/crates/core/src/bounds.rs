//! Confidence-interval machinery: scaling factors beta_t, the GP interval
//! `[mu - beta sigma, mu + beta sigma]`, and the Lipschitz/bounded-noise lower
//! envelope used as a hard safety certificate.

use crate::domain::euclidean_distance;
use crate::error::{Error, Result};
use crate::gp::{Dataset, GpPosterior};

/// How the confidence scaling beta_t is produced.
///
/// `ConstantHeuristic` is the common fixed choice (typically 2) with no
/// coverage guarantee. `RkhsNormBound` evaluates
/// `B + R * sqrt(ln det(I + lambda^-1 K_t) - 2 ln delta)`, which grows with the
/// data and yields intervals valid with probability `1 - delta` when `B` really
/// bounds the RKHS norm of the target, `R` its sub-Gaussian noise scale, and
/// the GP regularizer is 1.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaSchedule {
    ConstantHeuristic(f64),
    RkhsNormBound { b: f64, r: f64, delta: f64 },
}

impl BetaSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BetaSchedule::ConstantHeuristic(c) => {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::invalid_argument(format!(
                        "constant beta must be positive and finite, got {c}"
                    )));
                }
            }
            BetaSchedule::RkhsNormBound { b, r, delta } => {
                if !(b.is_finite() && b > 0.0) {
                    return Err(Error::invalid_argument(format!(
                        "RKHS norm bound B must be positive and finite, got {b}"
                    )));
                }
                if !(r.is_finite() && r >= 0.0) {
                    return Err(Error::invalid_argument(format!(
                        "noise scale R must be non-negative and finite, got {r}"
                    )));
                }
                if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
                    return Err(Error::invalid_argument(format!(
                        "delta must lie in (0, 1), got {delta}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A two-sided interval `[lower, upper]` for the target value at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Prior safety knowledge for the Lipschitz certification path: a Lipschitz
/// bound `L` of the target w.r.t. the Euclidean metric and an almost-sure
/// noise magnitude bound `E` (`|eta_t| <= E`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzSafetyModel {
    pub l: f64,
    pub e: f64,
}

impl LipschitzSafetyModel {
    pub fn new(l: f64, e: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::invalid_argument(format!(
                "Lipschitz bound L must be positive and finite, got {l}"
            )));
        }
        if !(e.is_finite() && e >= 0.0) {
            return Err(Error::invalid_argument(format!(
                "noise bound E must be non-negative and finite, got {e}"
            )));
        }
        Ok(LipschitzSafetyModel { l, e })
    }
}

/// Evaluates beta_t for the given posterior. Constant schedules ignore the
/// posterior; the RKHS-norm schedule reads its log-determinant term and is
/// therefore non-decreasing along a run.
pub fn beta_value(schedule: &BetaSchedule, post: &GpPosterior) -> Result<f64> {
    schedule.validate()?;
    Ok(match *schedule {
        BetaSchedule::ConstantHeuristic(c) => c,
        BetaSchedule::RkhsNormBound { b, r, delta } => {
            b + r * (post.logdet_regularized_gram() - 2.0 * delta.ln()).sqrt()
        }
    })
}

/// `[mu_t(x) - beta sigma_t(x), mu_t(x) + beta sigma_t(x)]` with beta from the
/// schedule.
pub fn gp_confidence_interval(
    post: &GpPosterior,
    schedule: &BetaSchedule,
    x: &[f64],
) -> Result<ConfidenceInterval> {
    let beta = beta_value(schedule, post)?;
    let (mu, sigma) = post.predict(x)?;
    Ok(ConfidenceInterval {
        lower: mu - beta * sigma,
        upper: mu + beta * sigma,
    })
}

/// Certified lower bound on the target at `x` from observations alone:
/// `max_i (y_i - E - L ||x - x_i||)`, or negative infinity when there are no
/// observations. Sound whenever `L` bounds the true Lipschitz constant and the
/// noise is within `[-E, E]`.
pub fn lipschitz_lower_envelope(data: &Dataset, model: &LipschitzSafetyModel, x: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (xi, yi) in data.inputs().iter().zip(data.outputs()) {
        let cone = yi - model.e - model.l * euclidean_distance(x, xi);
        if cone > best {
            best = cone;
        }
    }
    best
}
