//! Benchmark harness for the safe Bayesian optimization library: experiment
//! configs, batch execution, bound audits, CSV/SVG reporting, and the
//! `safebo` command-line binary built on top.

pub mod audit;
pub mod batch;
pub mod config;
pub mod error;
pub mod function_record;
pub mod instance;
pub mod metrics;
pub mod plots;
pub mod report;

use std::path::{Path, PathBuf};

use config::{ComparisonConfig, ConfigOverrides, ExperimentConfig};
use report::write_text;

pub use error::{HarnessError, Result};

fn output_dir(config: &config::CommonConfig) -> PathBuf {
    config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// `run <config>`: execute a comparison experiment and write all reports.
pub fn cmd_run(config_path: &Path, overrides: &ConfigOverrides, no_plots: bool) -> Result<()> {
    let (config, echo) = config::parse_config(config_path, overrides)?;
    let comparison = match config {
        ExperimentConfig::Comparison(c) => c,
        ExperimentConfig::Audit(_) => {
            return Err(HarnessError::config(
                "this is an audit config; use the audit subcommand",
            ))
        }
    };
    let output = batch::run_comparison(&comparison)?;
    write_comparison_reports(&comparison, &echo, &output, no_plots)
}

/// `replay <record> <config>`: re-run a comparison config on one recorded
/// function instead of freshly sampled ones.
pub fn cmd_replay(
    record_path: &Path,
    config_path: &Path,
    overrides: &ConfigOverrides,
    no_plots: bool,
) -> Result<()> {
    let (config, echo) = config::parse_config(config_path, overrides)?;
    let comparison = match config {
        ExperimentConfig::Comparison(c) => c,
        ExperimentConfig::Audit(_) => {
            return Err(HarnessError::config("replay needs a comparison config"))
        }
    };
    let text = std::fs::read_to_string(record_path)
        .map_err(|e| HarnessError::io(record_path, e))?;
    let function = function_record::parse_function_record(&text)?;
    // Keeping the recorded id reproduces the original noise draws, which are
    // keyed per function; a bare record without metadata replays as id 0.
    let function_id = function_record::recorded_function_id(&text).unwrap_or(0);
    let instance = instance::instance_from_function(&comparison.common, function, function_id)?;
    let output = batch::run_on_instances(&comparison, vec![instance])?;
    write_comparison_reports(&comparison, &echo, &output, no_plots)
}

fn write_comparison_reports(
    config: &ComparisonConfig,
    echo: &str,
    output: &batch::BatchOutput,
    no_plots: bool,
) -> Result<()> {
    let dir = output_dir(&config.common);
    write_text(&dir.join("config_normalized.toml"), echo)?;
    for inst in &output.instances {
        write_text(
            &dir.join("functions")
                .join(format!("fn_{:03}.txt", inst.function_id)),
            &report::render_instance_record(inst),
        )?;
    }
    write_text(&dir.join("traces.csv"), &report::render_raw_csv(&output.results))?;
    write_text(
        &dir.join("aggregate.csv"),
        &report::render_aggregate_csv(&output.aggregate),
    )?;

    if no_plots {
        log::info!("plot rendering skipped (--no-plots)");
    } else if output.results.is_empty() {
        log::warn!("no traces to plot; skipping SVG output");
    } else {
        let order: Vec<String> = config.algorithms.iter().map(|a| a.label.clone()).collect();
        write_text(
            &dir.join("regret.svg"),
            &plots::render_regret_plot(&output.aggregate, &order),
        )?;
        write_text(
            &dir.join("violations.svg"),
            &plots::render_violation_plot(&output.aggregate, &order),
        )?;
        match batch::build_diagnostic(config, &output.instances, &output.results) {
            Some(diag) => write_text(
                &dir.join("diagnostic.svg"),
                &plots::render_diagnostic_plot(&diag),
            )?,
            None => log::info!(
                "diagnostic plot skipped (needs a 1-D domain and a grid-path GP algorithm)"
            ),
        }
    }

    let violations: usize = output
        .results
        .iter()
        .map(metrics::RunResult::violation_count)
        .sum();
    log::info!(
        "wrote {} runs ({} unsafe queries) to {}",
        output.results.len(),
        violations,
        dir.display()
    );
    Ok(())
}

/// `audit <config>`: run the confidence-bound audit and write its reports.
pub fn cmd_audit(config_path: &Path, overrides: &ConfigOverrides) -> Result<()> {
    let (config, echo) = config::parse_config(config_path, overrides)?;
    let audit_config = match config {
        ExperimentConfig::Audit(a) => a,
        ExperimentConfig::Comparison(_) => {
            return Err(HarnessError::config(
                "this is a comparison config; use the run subcommand",
            ))
        }
    };
    let out = audit::run_audit(&audit_config)?;
    let dir = output_dir(&audit_config.common);
    write_text(&dir.join("config_normalized.toml"), &echo)?;
    write_text(
        &dir.join("audit_runs.csv"),
        &audit::render_audit_runs_csv(&out.run_rows),
    )?;
    write_text(
        &dir.join("audit_aggregate.csv"),
        &audit::render_audit_aggregate_csv(&out.aggregate),
    )?;
    for row in &out.aggregate {
        log::info!(
            "schedule {}: {}/{} runs with a bound violation (mean fraction {:.4})",
            row.schedule,
            row.runs_with_violation,
            row.runs,
            row.mean_violation_fraction
        );
    }
    Ok(())
}
