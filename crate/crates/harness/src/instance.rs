//! Ground-truth problem instances: a sampled test function together with
//! everything the experiment needs to know about it exactly (Lipschitz
//! constant, threshold, seed point, safe optimum).

use safebo::rng::derive_seed;
use safebo::safe_sets::GridDomain;
use safebo::seeding::{safe_optimum, select_seed_index};
use safebo::synth::{lipschitz_oracle, sample_rkhs_function, RkhsFunction};

use crate::config::{CommonConfig, ThresholdRule};
use crate::error::{HarnessError, Result};

/// Candidate functions with no admissible seed are rejected and resampled at
/// most this many times before the config is declared infeasible.
const MAX_SAMPLE_ATTEMPTS: u64 = 100;

/// One fully specified optimization problem with exact ground truth.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub function_id: usize,
    pub function: RkhsFunction,
    /// Exact RKHS norm of `function` (the assumed bound times the
    /// misspecification factor).
    pub true_norm: f64,
    /// Conservative Lipschitz bound from the finite-difference oracle.
    pub lipschitz: f64,
    /// Safety threshold.
    pub h: f64,
    /// Reference lattice used for seed selection, the safe-optimum reference
    /// and the grid-path algorithms.
    pub grid: GridDomain,
    /// Exact function values on `grid`, in grid order.
    pub grid_values: Vec<f64>,
    /// Grid index of the initial safe seed.
    pub seed_index: usize,
    /// max { f(x) : x on grid, f(x) >= h } — the regret reference.
    pub safe_optimum: f64,
    /// Candidate functions rejected before this one was accepted.
    pub rejected: u64,
}

impl ProblemInstance {
    pub fn seed_point(&self) -> Vec<f64> {
        self.grid.point(self.seed_index).to_vec()
    }
}

/// Samples the `function_id`-th problem of an experiment. Deterministic in
/// `(common.master_seed, function_id)`; rejected draws advance an attempt
/// counter that is part of the derivation, so acceptance never perturbs other
/// functions' streams.
pub fn build_instance(common: &CommonConfig, function_id: usize) -> Result<ProblemInstance> {
    let grid = GridDomain::uniform(common.domain.clone(), common.reference_grid_points)?;
    // Seeds must be safe with certainty even under worst-case noise, so the
    // eligibility margin uses the almost-sure noise bound where one exists.
    let noise_margin = common.noise.magnitude_bound().unwrap_or(0.0);
    let target_norm = common.function.true_norm();

    for attempt in 0..MAX_SAMPLE_ATTEMPTS {
        let sample_seed = derive_seed(
            common.master_seed,
            "function",
            (function_id as u64) * 1000 + attempt,
        );
        let function = sample_rkhs_function(
            &common.function.kernel,
            &common.domain,
            common.function.num_centers,
            target_norm,
            sample_seed,
        )?;
        let grid_values: Vec<f64> = grid.points().iter().map(|p| function.eval(p)).collect();
        let h = resolve_threshold(common.threshold, &grid_values);
        let seed_index = match select_seed_index(
            &grid_values,
            h,
            noise_margin,
            common.seed_margin_fraction,
        ) {
            Ok(idx) => idx,
            Err(e) => {
                log::debug!(
                    "function {function_id} attempt {attempt}: no admissible seed ({e}), resampling"
                );
                continue;
            }
        };
        let lipschitz = lipschitz_oracle(&function, &common.domain, common.lipschitz_oracle_points);
        let (_, safe_opt) = safe_optimum(&grid_values, h).ok_or_else(|| {
            HarnessError::invariant(format!(
                "function {function_id}: seed exists but safe set is empty"
            ))
        })?;
        return Ok(ProblemInstance {
            function_id,
            function,
            true_norm: target_norm,
            lipschitz,
            h,
            grid,
            grid_values,
            seed_index,
            safe_optimum: safe_opt,
            rejected: attempt,
        });
    }
    Err(HarnessError::config(format!(
        "could not sample an admissible function after {MAX_SAMPLE_ATTEMPTS} attempts; \
         the threshold leaves no point clearing h + noise bound + seed margin \
         (function {function_id})"
    )))
}

/// Builds an instance around an externally supplied function (replay mode).
/// The threshold, seed and references are derived exactly as in
/// [`build_instance`], but the function itself is fixed; an inadmissible
/// function is an error rather than a resample.
pub fn instance_from_function(
    common: &CommonConfig,
    function: RkhsFunction,
    function_id: usize,
) -> Result<ProblemInstance> {
    if function.dim() != common.domain.dim() {
        return Err(HarnessError::config(format!(
            "function record is {}-dimensional but the config domain is {}-dimensional",
            function.dim(),
            common.domain.dim()
        )));
    }
    let grid = GridDomain::uniform(common.domain.clone(), common.reference_grid_points)?;
    let grid_values: Vec<f64> = grid.points().iter().map(|p| function.eval(p)).collect();
    let h = resolve_threshold(common.threshold, &grid_values);
    let noise_margin = common.noise.magnitude_bound().unwrap_or(0.0);
    let seed_index = select_seed_index(&grid_values, h, noise_margin, common.seed_margin_fraction)
        .map_err(|e| {
            HarnessError::config(format!(
                "recorded function admits no safe seed under this config: {e}"
            ))
        })?;
    let lipschitz = lipschitz_oracle(&function, &common.domain, common.lipschitz_oracle_points);
    let true_norm = safebo::synth::rkhs_norm(&function);
    let (_, safe_opt) = safe_optimum(&grid_values, h)
        .expect("seed exists, so the safe set is nonempty");
    Ok(ProblemInstance {
        function_id,
        function,
        true_norm,
        lipschitz,
        h,
        grid,
        grid_values,
        seed_index,
        safe_optimum: safe_opt,
        rejected: 0,
    })
}

fn resolve_threshold(rule: ThresholdRule, grid_values: &[f64]) -> f64 {
    match rule {
        ThresholdRule::Fixed(h) => h,
        ThresholdRule::BelowMax(offset) => {
            let max = grid_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            max - offset
        }
    }
}
