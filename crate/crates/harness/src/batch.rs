//! Batch execution of comparison experiments: every (algorithm, function,
//! seed) run, executed in parallel over independent descriptors and collected
//! in run-id order, so output bytes never depend on scheduling.

use rayon::prelude::*;

use safebo::bounds::{beta_value, lipschitz_lower_envelope, LipschitzSafetyModel};
use safebo::gp::{fit_posterior, Dataset};
use safebo::optimizers::{
    instrument_with_truth, run_optimization, run_random_safe_baseline, AlgorithmConfig,
    AlgorithmVariant, IterationRecord, SearchSpace,
};
use safebo::rng::derive_seed;
use safebo::safe_sets::{update_safe_set_lipschitz, SafeSetState};
use safebo::synth::noisy_eval;

use crate::config::{AlgorithmSpec, ComparisonConfig, HarnessAlgorithm};
use crate::error::{HarnessError, Result};
use crate::instance::{build_instance, ProblemInstance};
use crate::metrics::{aggregate_rows, AggregateRow, RunResult};
use crate::plots::DiagnosticData;

/// Everything a comparison batch produces before reporting.
#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub instances: Vec<ProblemInstance>,
    /// Sorted by run id: algorithm-major, then function, then seed replicate.
    pub results: Vec<RunResult>,
    pub aggregate: Vec<AggregateRow>,
}

/// Runs the full batch. Deterministic in the config (including master seed);
/// worker count only affects wall time.
pub fn run_comparison(config: &ComparisonConfig) -> Result<BatchOutput> {
    let instances: Vec<ProblemInstance> = (0..config.num_functions)
        .into_par_iter()
        .map(|fid| build_instance(&config.common, fid))
        .collect::<Result<Vec<_>>>()?;
    run_on_instances(config, instances)
}

/// Batch execution over pre-built instances (replay runs pass exactly one).
pub fn run_on_instances(
    config: &ComparisonConfig,
    instances: Vec<ProblemInstance>,
) -> Result<BatchOutput> {
    let num_functions = instances.len();
    let mut descriptors =
        Vec::with_capacity(config.algorithms.len() * num_functions * config.num_seeds);
    for alg_idx in 0..config.algorithms.len() {
        for fid in 0..num_functions {
            for seed in 0..config.num_seeds {
                let run_id = (alg_idx * num_functions + fid) * config.num_seeds + seed;
                descriptors.push((run_id, alg_idx, fid, seed));
            }
        }
    }

    let results: Vec<RunResult> = descriptors
        .par_iter()
        .map(|&(run_id, alg_idx, fid, seed)| {
            execute_run(
                config,
                &instances[fid],
                &config.algorithms[alg_idx],
                run_id,
                seed,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    debug_assert!(results.windows(2).all(|w| w[0].run_id < w[1].run_id));

    let order: Vec<String> = config.algorithms.iter().map(|a| a.label.clone()).collect();
    let aggregate = aggregate_rows(&results, &order);
    Ok(BatchOutput {
        instances,
        results,
        aggregate,
    })
}

fn execute_run(
    config: &ComparisonConfig,
    inst: &ProblemInstance,
    alg: &AlgorithmSpec,
    run_id: usize,
    seed_idx: usize,
) -> Result<RunResult> {
    let common = &config.common;
    if inst.grid_values[inst.seed_index] < inst.h {
        return Err(HarnessError::invariant(format!(
            "seed point of function {} is not truly safe",
            inst.function_id
        )));
    }

    // Common random numbers: the noise stream is keyed by (function, seed
    // replicate) only, so every algorithm faces the same noise realization
    // and regret differences are not noise-lottery artifacts.
    let noise_seed = derive_seed(
        common.master_seed,
        "noise",
        ((inst.function_id as u64) << 20) | seed_idx as u64,
    );
    let mut noise = common.noise.model(noise_seed)?;
    let rng_seed = derive_seed(common.master_seed, "algorithm", run_id as u64);
    let safety = LipschitzSafetyModel::new(
        inst.lipschitz,
        common.noise.magnitude_bound().unwrap_or(0.0),
    )?;

    let function = &inst.function;
    let truth = |x: &[f64]| function.eval(x);
    let mut oracle = |x: &[f64]| noisy_eval(function, &mut noise, x);

    let records = match alg.kind {
        HarnessAlgorithm::Core(variant) => {
            let cfg = AlgorithmConfig {
                variant,
                kernel: common.function.kernel.clone(),
                lambda: alg.lambda,
                schedule: alg.schedule.clone(),
                safety,
                h: inst.h,
                budget: config.budget,
                multistart: alg.multistart,
                rng_seed,
            };
            let space = if variant.needs_grid() {
                SearchSpace::Grid {
                    grid: inst.grid.clone(),
                    seed_indices: vec![inst.seed_index],
                }
            } else {
                SearchSpace::Continuous {
                    domain: common.domain.clone(),
                    seeds: vec![inst.seed_point()],
                }
            };
            run_optimization(&cfg, &space, &mut oracle, &truth)?
        }
        HarnessAlgorithm::RandomSafe => {
            // carrier config: the baseline only reads safety/h/budget/rng_seed
            let cfg = AlgorithmConfig {
                variant: AlgorithmVariant::LoSBO,
                kernel: common.function.kernel.clone(),
                lambda: alg.lambda,
                schedule: alg.schedule.clone(),
                safety,
                h: inst.h,
                budget: config.budget,
                multistart: alg.multistart,
                rng_seed,
            };
            let space = SearchSpace::Grid {
                grid: inst.grid.clone(),
                seed_indices: vec![inst.seed_index],
            };
            let raw = run_random_safe_baseline(&cfg, &space, &mut oracle)?;
            instrument_with_truth(raw, &truth, inst.h)
        }
    };

    assert_certified_safety(&alg.label, alg.kind, inst, seed_idx, &records)?;
    Ok(RunResult {
        run_id,
        algorithm: alg.label.clone(),
        function_id: inst.function_id,
        seed: seed_idx,
        h: inst.h,
        safe_optimum: inst.safe_optimum,
        records,
    })
}

/// Hard stop for algorithms whose safety is supposed to be certified: a
/// single unsafe query means the experiment (or the library) is broken, and
/// no report should be written from it.
fn assert_certified_safety(
    label: &str,
    kind: HarnessAlgorithm,
    inst: &ProblemInstance,
    seed_idx: usize,
    records: &[IterationRecord],
) -> Result<()> {
    if !kind.uses_lipschitz_safety() {
        return Ok(());
    }
    if let Some(bad) = records.iter().find(|r| !r.safe_actual) {
        return Err(HarnessError::invariant(format!(
            "{label} queried an unsafe point at t={} on function {}, seed {} \
             (f_true={:.6} < h={:.6}); the Lipschitz certificate must rule this out",
            bad.t, inst.function_id, seed_idx, bad.f_true, inst.h
        )));
    }
    Ok(())
}

/// Assembles the final-state picture of the first grid-path GP run on the
/// first function (1-D experiments only): truth, refitted posterior with its
/// band, the Lipschitz envelope and the certified safe set.
pub fn build_diagnostic(
    config: &ComparisonConfig,
    instances: &[ProblemInstance],
    results: &[RunResult],
) -> Option<DiagnosticData> {
    if config.common.domain.dim() != 1 {
        return None;
    }
    let alg = config
        .algorithms
        .iter()
        .find(|a| matches!(a.kind, HarnessAlgorithm::Core(v) if v.needs_grid()))?;
    let inst = instances.first()?;
    let run = results
        .iter()
        .find(|r| r.algorithm == alg.label && r.function_id == inst.function_id && r.seed == 0)?;

    let mut data = Dataset::new(config.common.domain.clone());
    for rec in &run.records {
        data.push(rec.x.clone(), rec.y).ok()?;
    }
    let post = fit_posterior(config.common.function.kernel.clone(), data, alg.lambda).ok()?;
    let beta = beta_value(&alg.schedule, &post).ok()?;
    let safety = LipschitzSafetyModel::new(
        inst.lipschitz,
        config.common.noise.magnitude_bound().unwrap_or(0.0),
    )
    .ok()?;

    let n = inst.grid.len();
    let mut xs = Vec::with_capacity(n);
    let mut mean = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut envelope = Vec::with_capacity(n);
    for p in inst.grid.points() {
        xs.push(p[0]);
        let (mu, sigma) = post.predict(p).ok()?;
        mean.push(mu);
        lower.push(mu - beta * sigma);
        upper.push(mu + beta * sigma);
        envelope.push(lipschitz_lower_envelope(post.data(), &safety, p));
    }
    // with the full dataset, one Lipschitz pass reproduces the union of the
    // per-step certifications (the envelope only grows with data)
    let state = SafeSetState::new(n, vec![inst.seed_index], inst.h).ok()?;
    let state = update_safe_set_lipschitz(&state, &inst.grid, post.data(), &safety).ok()?;

    Some(DiagnosticData {
        algorithm: alg.label.clone(),
        function_id: inst.function_id,
        xs,
        f_true: inst.grid_values.clone(),
        mean,
        lower,
        upper,
        envelope,
        safe: state.safe_mask().to_vec(),
        h: inst.h,
        observations: run.records.iter().map(|r| (r.x[0], r.y)).collect(),
    })
}
