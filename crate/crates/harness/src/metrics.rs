//! Per-run and aggregate metrics for comparison experiments.

use safebo::optimizers::IterationRecord;

/// One completed optimization run with ground-truth instrumentation.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// Global run index; raw output is sorted by this, so it fixes the byte
    /// layout of every report regardless of worker scheduling.
    pub run_id: usize,
    pub algorithm: String,
    pub function_id: usize,
    /// Replicate index (0-based) within the function.
    pub seed: usize,
    pub h: f64,
    /// Regret reference: best true value on the grid at or above `h`.
    pub safe_optimum: f64,
    pub records: Vec<IterationRecord>,
}

impl RunResult {
    /// Number of queries whose true value fell below the threshold.
    pub fn violation_count(&self) -> usize {
        self.records.iter().filter(|r| !r.safe_actual).count()
    }

    /// 1-based iteration of the first violation, if any.
    pub fn first_violation_t(&self) -> Option<usize> {
        self.records.iter().find(|r| !r.safe_actual).map(|r| r.t)
    }

    /// Simple regret after each iteration: the safe optimum minus the best
    /// *actually safe* query so far. Unsafe queries never improve the best
    /// (they are failures, not progress); until the first safe query the
    /// regret sits at the cap `safe_optimum - h`. Non-increasing by
    /// construction. Continuous-domain runs may end slightly below zero when
    /// they out-optimize the grid reference; that is left visible.
    pub fn simple_regret(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.records
            .iter()
            .map(|r| {
                if r.safe_actual && r.f_true > best {
                    best = r.f_true;
                }
                if best.is_finite() {
                    self.safe_optimum - best
                } else {
                    self.safe_optimum - self.h
                }
            })
            .collect()
    }
}

/// One row of the aggregate report.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub algorithm: String,
    /// `None` aggregates over all functions (the ALL rows).
    pub function_id: Option<usize>,
    pub t: usize,
    pub mean_simple_regret: f64,
    pub std_simple_regret: f64,
    /// Number of contributing runs whose query at `t` was unsafe.
    pub total_violations: usize,
    pub runs: usize,
}

/// Aggregates runs per algorithm: first per-function rows (functions in
/// ascending order), then the overall ALL rows. `algorithm_order` fixes the
/// block order (config order, not alphabetical). Input must already be sorted
/// by run id so float accumulation order is reproducible.
pub fn aggregate_rows(results: &[RunResult], algorithm_order: &[String]) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for label in algorithm_order {
        let of_alg: Vec<&RunResult> = results
            .iter()
            .filter(|r| &r.algorithm == label)
            .collect();
        if of_alg.is_empty() {
            continue;
        }
        let mut fids: Vec<usize> = of_alg.iter().map(|r| r.function_id).collect();
        fids.sort_unstable();
        fids.dedup();
        for &fid in &fids {
            let group: Vec<&RunResult> = of_alg
                .iter()
                .filter(|r| r.function_id == fid)
                .copied()
                .collect();
            rows.extend(rows_for_group(label, Some(fid), &group));
        }
        rows.extend(rows_for_group(label, None, &of_alg));
    }
    rows
}

fn rows_for_group(
    algorithm: &str,
    function_id: Option<usize>,
    group: &[&RunResult],
) -> Vec<AggregateRow> {
    let budget = group.iter().map(|r| r.records.len()).max().unwrap_or(0);
    let regrets: Vec<Vec<f64>> = group.iter().map(|r| r.simple_regret()).collect();
    let mut rows = Vec::with_capacity(budget);
    for t in 1..=budget {
        let at_t: Vec<f64> = regrets
            .iter()
            .filter(|r| r.len() >= t)
            .map(|r| r[t - 1])
            .collect();
        let n = at_t.len();
        let mean = at_t.iter().sum::<f64>() / n as f64;
        let var = at_t.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let violations = group
            .iter()
            .filter(|r| r.records.get(t - 1).is_some_and(|rec| !rec.safe_actual))
            .count();
        rows.push(AggregateRow {
            algorithm: algorithm.to_string(),
            function_id,
            t,
            mean_simple_regret: mean,
            std_simple_regret: var.sqrt(),
            total_violations: violations,
            runs: n,
        });
    }
    rows
}
