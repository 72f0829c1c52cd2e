//! Report writers. The CSV schemas here are the repository's data contract;
//! column names, order and number formatting are fixed, and every writer is
//! byte-deterministic given the same results.

use std::path::Path;

use safebo::format_sig17;

use crate::error::{HarnessError, Result};
use crate::function_record::render_function_record;
use crate::instance::ProblemInstance;
use crate::metrics::{AggregateRow, RunResult};

pub const RAW_HEADER: &str = "run_id,algorithm,function_id,seed,t,x,y_noisy,f_true,\
                              safe_actual,safe_set_size,beta_t,acquisition_value";
pub const AGGREGATE_HEADER: &str =
    "algorithm,function_id,t,mean_simple_regret,std_simple_regret,total_violations,runs";

/// Raw per-iteration trace CSV. One row per query, sorted by run id and then
/// iteration; coordinates are semicolon-joined at 17 significant digits.
pub fn render_raw_csv(results: &[RunResult]) -> String {
    let mut out = String::with_capacity(128 * results.len() + 128);
    out.push_str(RAW_HEADER);
    out.push('\n');
    for run in results {
        for rec in &run.records {
            let x = rec
                .x
                .iter()
                .map(|&v| format_sig17(v))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                run.run_id,
                run.algorithm,
                run.function_id,
                run.seed,
                rec.t,
                x,
                format_sig17(rec.y),
                format_sig17(rec.f_true),
                u8::from(rec.safe_actual),
                rec.safe_set_size,
                format_sig17(rec.beta),
                format_sig17(rec.acquisition_value),
            ));
        }
    }
    out
}

/// Aggregate CSV: per-function rows then ALL rows for each algorithm.
pub fn render_aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::with_capacity(96 * rows.len() + 96);
    out.push_str(AGGREGATE_HEADER);
    out.push('\n');
    for row in rows {
        let fid = match row.function_id {
            Some(id) => id.to_string(),
            None => "ALL".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.algorithm,
            fid,
            row.t,
            format_sig17(row.mean_simple_regret),
            format_sig17(row.std_simple_regret),
            row.total_violations,
            row.runs,
        ));
    }
    out
}

/// A function record preceded by comment lines with the instance's exact
/// metadata. The comments are ignored by the record parser, so the file can
/// be fed straight back to `replay`.
pub fn render_instance_record(inst: &ProblemInstance) -> String {
    let mut out = String::new();
    out.push_str(&format!("# function {}\n", inst.function_id));
    out.push_str(&format!("# true_norm {}\n", format_sig17(inst.true_norm)));
    out.push_str(&format!("# lipschitz {}\n", format_sig17(inst.lipschitz)));
    out.push_str(&format!("# h {}\n", format_sig17(inst.h)));
    out.push_str(&format!("# seed_index {}\n", inst.seed_index));
    out.push_str(&format!(
        "# seed_value {}\n",
        format_sig17(inst.grid_values[inst.seed_index])
    ));
    out.push_str(&format!(
        "# safe_optimum {}\n",
        format_sig17(inst.safe_optimum)
    ));
    out.push_str(&format!("# rejected {}\n", inst.rejected));
    out.push_str(&render_function_record(&inst.function));
    out
}

/// Creates the directory (and parents) if needed and writes `content`.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    std::fs::write(path, content).map_err(|e| HarnessError::io(path, e))
}
