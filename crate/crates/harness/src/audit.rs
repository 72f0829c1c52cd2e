//! Confidence-bound audits: how often does `|f(x) - mu(x)| > beta sigma(x)`
//! actually happen? Each run samples a known test function and a random
//! dataset, fits the GP, and scans a fine grid; every configured beta
//! schedule is measured against the same fit.

use rand::Rng;
use rayon::prelude::*;

use safebo::bounds::beta_value;
use safebo::format_sig17;
use safebo::gp::{fit_posterior, Dataset};
use safebo::rng::{derive_rng, derive_seed};
use safebo::safe_sets::GridDomain;
use safebo::synth::{noisy_eval, sample_rkhs_function};

use crate::config::AuditConfig;
use crate::error::Result;

pub const AUDIT_RUNS_HEADER: &str =
    "run_id,schedule,beta,violation_fraction,any_violation,max_excess";
pub const AUDIT_AGGREGATE_HEADER: &str = "schedule,runs,runs_with_violation,\
                                          violating_run_fraction,mean_violation_fraction,\
                                          max_violation_fraction";

/// One (run, schedule) measurement.
#[derive(Debug, Clone)]
pub struct AuditRunRow {
    pub run_id: usize,
    pub schedule: String,
    pub beta: f64,
    /// Fraction of grid points where the interval misses the truth.
    pub violation_fraction: f64,
    pub any_violation: bool,
    /// max over the grid of `|f - mu| - beta sigma` (negative when the bound
    /// holds everywhere, with room to spare).
    pub max_excess: f64,
}

/// Per-schedule summary across all runs.
#[derive(Debug, Clone)]
pub struct AuditAggregateRow {
    pub schedule: String,
    pub runs: usize,
    pub runs_with_violation: usize,
    pub violating_run_fraction: f64,
    pub mean_violation_fraction: f64,
    pub max_violation_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct AuditOutput {
    /// Run-major, schedules in config order within each run.
    pub run_rows: Vec<AuditRunRow>,
    pub aggregate: Vec<AuditAggregateRow>,
}

pub fn run_audit(config: &AuditConfig) -> Result<AuditOutput> {
    let grid = GridDomain::uniform(
        config.common.domain.clone(),
        config.common.reference_grid_points,
    )?;
    let per_run: Vec<Vec<AuditRunRow>> = (0..config.num_runs)
        .into_par_iter()
        .map(|r| audit_one(config, &grid, r))
        .collect::<Result<Vec<_>>>()?;
    let run_rows: Vec<AuditRunRow> = per_run.into_iter().flatten().collect();

    let aggregate = config
        .schedules
        .iter()
        .map(|s| {
            let of_schedule: Vec<&AuditRunRow> = run_rows
                .iter()
                .filter(|row| row.schedule == s.label)
                .collect();
            let runs = of_schedule.len();
            let runs_with_violation = of_schedule.iter().filter(|r| r.any_violation).count();
            let mean = of_schedule
                .iter()
                .map(|r| r.violation_fraction)
                .sum::<f64>()
                / runs.max(1) as f64;
            let max = of_schedule
                .iter()
                .map(|r| r.violation_fraction)
                .fold(0.0, f64::max);
            AuditAggregateRow {
                schedule: s.label.clone(),
                runs,
                runs_with_violation,
                violating_run_fraction: runs_with_violation as f64 / runs.max(1) as f64,
                mean_violation_fraction: mean,
                max_violation_fraction: max,
            }
        })
        .collect();

    Ok(AuditOutput {
        run_rows,
        aggregate,
    })
}

fn audit_one(config: &AuditConfig, grid: &GridDomain, run: usize) -> Result<Vec<AuditRunRow>> {
    let common = &config.common;
    let function = sample_rkhs_function(
        &common.function.kernel,
        &common.domain,
        common.function.num_centers,
        common.function.true_norm(),
        derive_seed(common.master_seed, "audit-function", run as u64),
    )?;
    let mut rng = derive_rng(common.master_seed, "audit-dataset", run as u64);
    let mut noise = common
        .noise
        .model(derive_seed(common.master_seed, "audit-noise", run as u64))?;

    let mut data = Dataset::new(common.domain.clone());
    for _ in 0..config.dataset_size {
        let x: Vec<f64> = (0..common.domain.dim())
            .map(|d| rng.random_range(common.domain.lower()[d]..common.domain.upper()[d]))
            .collect();
        let y = noisy_eval(&function, &mut noise, &x);
        data.push(x, y)?;
    }
    let post = fit_posterior(common.function.kernel.clone(), data, config.lambda)?;

    let mut predictions = Vec::with_capacity(grid.len());
    let mut truth = Vec::with_capacity(grid.len());
    for p in grid.points() {
        predictions.push(post.predict(p)?);
        truth.push(function.eval(p));
    }

    config
        .schedules
        .iter()
        .map(|s| {
            let beta = beta_value(&s.schedule, &post)?;
            let mut count = 0usize;
            let mut max_excess = f64::NEG_INFINITY;
            for (&(mu, sigma), &f) in predictions.iter().zip(&truth) {
                let excess = (f - mu).abs() - beta * sigma;
                if excess > 0.0 {
                    count += 1;
                }
                if excess > max_excess {
                    max_excess = excess;
                }
            }
            Ok(AuditRunRow {
                run_id: run,
                schedule: s.label.clone(),
                beta,
                violation_fraction: count as f64 / grid.len() as f64,
                any_violation: count > 0,
                max_excess,
            })
        })
        .collect()
}

pub fn render_audit_runs_csv(rows: &[AuditRunRow]) -> String {
    let mut out = String::with_capacity(64 * rows.len() + 64);
    out.push_str(AUDIT_RUNS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.run_id,
            r.schedule,
            format_sig17(r.beta),
            format_sig17(r.violation_fraction),
            u8::from(r.any_violation),
            format_sig17(r.max_excess),
        ));
    }
    out
}

pub fn render_audit_aggregate_csv(rows: &[AuditAggregateRow]) -> String {
    let mut out = String::with_capacity(64 * rows.len() + 128);
    out.push_str(AUDIT_AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.schedule,
            r.runs,
            r.runs_with_violation,
            format_sig17(r.violating_run_fraction),
            format_sig17(r.mean_violation_fraction),
            format_sig17(r.max_violation_fraction),
        ));
    }
    out
}
