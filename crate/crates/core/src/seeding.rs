//! Seed selection and safe-optimum reference values for experiments with
//! known ground truth.
//!
//! Experiments need a seed the algorithm may assume safe. Eligible points are
//! those with `f(x) >= h + E + eps` (noise-proof with a tolerance margin,
//! `eps` a fraction of the function's value range); among them the one with
//! the *smallest* margin is chosen. Picking the largest margin would hand the
//! algorithm the safe optimum as its seed and make every optimization-
//! performance comparison vacuous (simple regret identically zero from the
//! first query).

use crate::error::{Error, Result};

/// Index of the seed among `values` (ground-truth values on a grid): the
/// eligible point with the smallest value, ties to the lowest index. Errors
/// when no point clears `h + e + eps` with `eps = margin_fraction * range`.
pub fn select_seed_index(
    values: &[f64],
    h: f64,
    e: f64,
    margin_fraction: f64,
) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::invalid_argument("no grid values"));
    }
    if !(0.0..1.0).contains(&margin_fraction) {
        return Err(Error::invalid_argument(format!(
            "margin fraction must lie in [0, 1), got {margin_fraction}"
        )));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let eps = margin_fraction * (hi - lo);
    let cutoff = h + e + eps;
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v >= cutoff && best.map_or(true, |b| v < values[b]) {
            best = Some(i);
        }
    }
    best.ok_or_else(|| {
        Error::invalid_state(format!(
            "no eligible seed: no value reaches {cutoff:.6} (max is {hi:.6})"
        ))
    })
}

/// `(argmax, max)` of the safely attainable values: the best `f(x) >= h` over
/// the grid, or `None` when nothing is safe.
pub fn safe_optimum(values: &[f64], h: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if v >= h && best.map_or(true, |(_, bv)| v > bv) {
            best = Some((i, v));
        }
    }
    best
}
