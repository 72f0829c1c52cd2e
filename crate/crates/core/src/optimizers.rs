//! The algorithm loops: SafeOpt with a heuristic beta, SafeOpt with the
//! RKHS-norm beta, LoSBO, and the grid-free LoS-GP-UCB, plus a random-safe
//! baseline for performance comparisons.
//!
//! All variants share the same outer loop: certify a safe region, pick the
//! next query inside it, evaluate the noisy oracle, update the model. They
//! differ in what certifies safety (GP lower bounds vs. the Lipschitz
//! envelope) and in the acquisition rule (interval width over the
//! maximizer/expander sets vs. GP-UCB by multistart local search).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::{beta_value, lipschitz_lower_envelope, BetaSchedule, LipschitzSafetyModel};
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::gp::{fit_posterior, Dataset, GpPosterior};
use crate::kernel::KernelSpec;
use crate::rng::derive_rng;
use crate::safe_sets::{
    expander_set, maximizer_set, update_safe_set_gp_from_lower, update_safe_set_lipschitz,
    GridDomain, SafeSetState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmVariant {
    /// SafeOpt with a constant beta; both safety and exploration use GP bounds.
    SafeOptHeuristic,
    /// SafeOpt with the RKHS-norm-based beta schedule.
    RealBetaSafeOpt,
    /// Safe set from the Lipschitz envelope only; GP bounds drive exploration.
    LoSBO,
    /// Grid-free GP-UCB acquisition under the Lipschitz safety constraint.
    LoSGpUcb,
}

impl AlgorithmVariant {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmVariant::SafeOptHeuristic => "safeopt",
            AlgorithmVariant::RealBetaSafeOpt => "real-beta-safeopt",
            AlgorithmVariant::LoSBO => "losbo",
            AlgorithmVariant::LoSGpUcb => "los-gp-ucb",
        }
    }

    /// Whether the variant runs on a discrete grid (vs. a continuous box).
    pub fn needs_grid(&self) -> bool {
        !matches!(self, AlgorithmVariant::LoSGpUcb)
    }
}

/// Multistart local-search parameters for the grid-free acquisition problem.
/// `step_init` is a fraction of each dimension's box width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultistartConfig {
    pub num_starts: usize,
    pub max_iters: usize,
    pub step_init: f64,
}

impl Default for MultistartConfig {
    fn default() -> Self {
        MultistartConfig {
            num_starts: 30,
            max_iters: 60,
            step_init: 0.25,
        }
    }
}

impl MultistartConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_starts == 0 || self.max_iters == 0 {
            return Err(Error::invalid_argument(
                "multistart needs at least one start and one iteration",
            ));
        }
        if !(self.step_init.is_finite() && self.step_init > 0.0) {
            return Err(Error::invalid_argument(format!(
                "initial step fraction must be positive, got {}",
                self.step_init
            )));
        }
        Ok(())
    }
}

/// Everything one algorithm run needs besides the search space and oracle.
#[derive(Debug, Clone)]
pub struct AlgorithmConfig {
    pub variant: AlgorithmVariant,
    pub kernel: KernelSpec,
    pub lambda: f64,
    pub schedule: BetaSchedule,
    pub safety: LipschitzSafetyModel,
    pub h: f64,
    pub budget: usize,
    pub multistart: MultistartConfig,
    pub rng_seed: u64,
}

impl AlgorithmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::invalid_argument("budget must be at least 1"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid_argument(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        if !self.h.is_finite() {
            return Err(Error::invalid_argument(format!(
                "safety threshold must be finite, got {}",
                self.h
            )));
        }
        self.schedule.validate()?;
        match (self.variant, &self.schedule) {
            (AlgorithmVariant::SafeOptHeuristic, BetaSchedule::RkhsNormBound { .. }) => {
                return Err(Error::invalid_argument(
                    "the heuristic SafeOpt variant requires a constant beta schedule",
                ));
            }
            (AlgorithmVariant::RealBetaSafeOpt, BetaSchedule::ConstantHeuristic(_)) => {
                return Err(Error::invalid_argument(
                    "the real-beta SafeOpt variant requires the RKHS-norm beta schedule",
                ));
            }
            _ => {}
        }
        if self.variant == AlgorithmVariant::LoSGpUcb {
            self.multistart.validate()?;
        }
        Ok(())
    }
}

/// Where an algorithm searches: a finite lattice with seed indices, or a
/// continuous box with explicit seed points.
#[derive(Debug, Clone)]
pub enum SearchSpace {
    Grid {
        grid: GridDomain,
        seed_indices: Vec<usize>,
    },
    Continuous {
        domain: BoxDomain,
        seeds: Vec<Vec<f64>>,
    },
}

impl SearchSpace {
    pub fn domain(&self) -> &BoxDomain {
        match self {
            SearchSpace::Grid { grid, .. } => grid.domain(),
            SearchSpace::Continuous { domain, .. } => domain,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SearchSpace::Grid { grid, seed_indices } => {
                if seed_indices.is_empty() {
                    return Err(Error::invalid_argument("seed set must be nonempty"));
                }
                if let Some(&i) = seed_indices.iter().find(|&&i| i >= grid.len()) {
                    return Err(Error::invalid_argument(format!(
                        "seed index {i} out of range for grid of {} points",
                        grid.len()
                    )));
                }
            }
            SearchSpace::Continuous { domain, seeds } => {
                if seeds.is_empty() {
                    return Err(Error::invalid_argument("seed set must be nonempty"));
                }
                for s in seeds {
                    if s.len() != domain.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: domain.dim(),
                            got: s.len(),
                        });
                    }
                    if !domain.contains(s) {
                        return Err(Error::invalid_argument(format!(
                            "seed {s:?} lies outside the domain box"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One selected-and-evaluated query, as the library reports it (no ground
/// truth; see [`IterationRecord`] for the instrumented version).
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    /// 1-based iteration counter.
    pub t: usize,
    pub x: Vec<f64>,
    /// Noisy observation returned by the oracle.
    pub y: f64,
    /// Certified safe-set size after this step's update; -1 on the continuous
    /// path, which never materializes its safe set.
    pub safe_set_size: i64,
    pub beta: f64,
    /// Value of the step's acquisition at the chosen point (interval width on
    /// the grid path, the UCB value on the continuous path, 0 for the random
    /// baseline).
    pub acquisition_value: f64,
}

/// A [`QueryRecord`] augmented with exact ground truth, for experiments where
/// the true function is known.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub f_true: f64,
    pub safe_actual: bool,
    pub safe_set_size: i64,
    pub beta: f64,
    pub acquisition_value: f64,
}

/// Outcome of one grid-path selection step.
#[derive(Debug, Clone)]
pub struct GridStep {
    /// Grid index of the next query.
    pub index: usize,
    /// Safe set after this step's certification update.
    pub state: SafeSetState,
    pub beta: f64,
    /// Interval width at the chosen point.
    pub acquisition: f64,
    /// True when the maximizer and expander sets were both empty and the step
    /// fell back to the widest interval over the whole safe set.
    pub degenerate: bool,
}

/// One step of the SafeOpt family (grid path): update the safe set per the
/// variant's certification route, form the maximizer and expander sets from
/// the GP confidence bounds, and pick the candidate with the widest interval
/// (ties to the lowest grid index).
pub fn step_safeopt_family(
    config: &AlgorithmConfig,
    grid: &GridDomain,
    state: &SafeSetState,
    post: &GpPosterior,
) -> Result<GridStep> {
    let beta = beta_value(&config.schedule, post)?;
    let mut lower = vec![0.0; grid.len()];
    let mut upper = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        let (mu, sigma) = post.predict(grid.point(i))?;
        lower[i] = mu - beta * sigma;
        upper[i] = mu + beta * sigma;
    }
    let (next_state, expander_margin) = match config.variant {
        AlgorithmVariant::SafeOptHeuristic | AlgorithmVariant::RealBetaSafeOpt => (
            update_safe_set_gp_from_lower(state, grid, &lower, config.safety.l)?,
            0.0,
        ),
        AlgorithmVariant::LoSBO => (
            update_safe_set_lipschitz(state, grid, post.data(), &config.safety)?,
            config.safety.e,
        ),
        AlgorithmVariant::LoSGpUcb => {
            return Err(Error::invalid_argument(
                "the continuous variant has no grid step",
            ));
        }
    };
    let maximizers = maximizer_set(&next_state, &lower, &upper)?;
    let expanders = expander_set(&next_state, grid, &upper, config.safety.l, expander_margin)?;
    let mut candidate = vec![false; grid.len()];
    for &i in maximizers.iter().chain(&expanders) {
        candidate[i] = true;
    }
    let pick_widest = |eligible: &dyn Fn(usize) -> bool| -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..grid.len() {
            if eligible(i) {
                let w = upper[i] - lower[i];
                if best.map_or(true, |(_, bw)| w > bw) {
                    best = Some((i, w));
                }
            }
        }
        best
    };
    let mut degenerate = false;
    let chosen = match pick_widest(&|i| candidate[i]) {
        Some(c) => c,
        None => {
            degenerate = true;
            log::warn!(
                "degenerate step: maximizer and expander sets empty; \
                 falling back to the widest safe interval"
            );
            pick_widest(&|i| next_state.is_safe(i))
                .ok_or_else(|| Error::invalid_state("safe set is empty"))?
        }
    };
    Ok(GridStep {
        index: chosen.0,
        state: next_state,
        beta,
        acquisition: chosen.1,
        degenerate,
    })
}

/// Outcome of one continuous-path selection step.
#[derive(Debug, Clone)]
pub struct ContinuousStep {
    pub x: Vec<f64>,
    pub beta: f64,
    /// UCB value at the returned point.
    pub acquisition: f64,
}

/// One LoS-GP-UCB step: maximize `mu + beta sigma` by multistart local search
/// subject to the hard constraint that the Lipschitz envelope certifies the
/// point (or the point is exactly a seed). The returned point is re-checked
/// against the exact predicate; search output is never trusted blindly.
pub fn step_los_gp_ucb(
    config: &AlgorithmConfig,
    domain: &BoxDomain,
    seeds: &[Vec<f64>],
    post: &GpPosterior,
    rng: &mut ChaCha8Rng,
) -> Result<ContinuousStep> {
    let beta = beta_value(&config.schedule, post)?;
    let data = post.data();
    let model = config.safety;
    let h = config.h;
    let is_seed = |x: &[f64]| seeds.iter().any(|s| s.as_slice() == x);
    let feasible =
        |x: &[f64]| is_seed(x) || lipschitz_lower_envelope(data, &model, x) >= h;
    let objective = |x: &[f64]| match post.predict(x) {
        Ok((mu, sigma)) => mu + beta * sigma,
        Err(err) => {
            log::warn!("prediction failed during acquisition search: {err}");
            f64::NEG_INFINITY
        }
    };
    let starts = generate_starts(config, domain, seeds, data, &model, h, rng);
    let best = multistart_search(
        &objective,
        &feasible,
        &starts,
        domain,
        config.multistart.max_iters,
        config.multistart.step_init,
    )?;
    if !(is_seed(&best) || lipschitz_lower_envelope(data, &model, &best) >= h) {
        return Err(Error::invalid_state(
            "acquisition search returned a point the envelope does not certify",
        ));
    }
    let acquisition = objective(&best);
    Ok(ContinuousStep {
        x: best,
        beta,
        acquisition,
    })
}

/// Start points for the acquisition search: every seed, then envelope-feasible
/// perturbations around the highest-envelope observed inputs, then uniform
/// draws kept only when feasible. Infeasible draws are discarded but still
/// consume the stream, so the start list is deterministic.
fn generate_starts(
    config: &AlgorithmConfig,
    domain: &BoxDomain,
    seeds: &[Vec<f64>],
    data: &Dataset,
    model: &LipschitzSafetyModel,
    h: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let target = config.multistart.num_starts.max(seeds.len());
    let mut starts: Vec<Vec<f64>> = seeds.to_vec();

    let envelope_at: Vec<f64> = data
        .inputs()
        .iter()
        .map(|x| lipschitz_lower_envelope(data, model, x))
        .collect();
    let mut ranked: Vec<usize> = (0..data.len()).collect();
    ranked.sort_by(|&a, &b| envelope_at[b].total_cmp(&envelope_at[a]).then(a.cmp(&b)));
    ranked.truncate(5);

    let radius = 0.1 * domain.diagonal();
    for _round in 0..3 {
        if starts.len() >= target || ranked.is_empty() {
            break;
        }
        for &i in &ranked {
            if starts.len() >= target {
                break;
            }
            let mut cand = data.inputs()[i].clone();
            for c in cand.iter_mut() {
                *c += rng.random_range(-radius..=radius);
            }
            let cand = domain.project(&cand);
            if lipschitz_lower_envelope(data, model, &cand) >= h {
                starts.push(cand);
            }
        }
    }

    let mut attempts = 0;
    let max_attempts = 50 * target;
    while starts.len() < target && attempts < max_attempts {
        attempts += 1;
        let cand: Vec<f64> = (0..domain.dim())
            .map(|d| rng.random_range(domain.lower()[d]..=domain.upper()[d]))
            .collect();
        if lipschitz_lower_envelope(data, model, &cand) >= h {
            starts.push(cand);
        }
    }
    starts
}

/// Derivative-free constrained maximization: from each feasible start, runs
/// coordinate ascent with axis-wise probe steps, halving the step size when no
/// axis improves, projecting probes into the box and rejecting infeasible
/// moves. Returns the best feasible point found across all starts (first start
/// wins ties). Deterministic given the starts and callables.
pub fn multistart_search(
    objective: &dyn Fn(&[f64]) -> f64,
    feasible: &dyn Fn(&[f64]) -> bool,
    starts: &[Vec<f64>],
    domain: &BoxDomain,
    max_iters: usize,
    step_init: f64,
) -> Result<Vec<f64>> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        if start.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: start.len(),
            });
        }
        if !feasible(start) {
            continue;
        }
        let (x, fx) = coordinate_ascent(objective, feasible, start.clone(), domain, max_iters, step_init);
        if best.as_ref().map_or(true, |(_, bf)| fx > *bf) {
            best = Some((x, fx));
        }
    }
    best.map(|(x, _)| x)
        .ok_or_else(|| Error::invalid_argument("no feasible start point"))
}

fn coordinate_ascent(
    objective: &dyn Fn(&[f64]) -> f64,
    feasible: &dyn Fn(&[f64]) -> bool,
    start: Vec<f64>,
    domain: &BoxDomain,
    max_iters: usize,
    step_init: f64,
) -> (Vec<f64>, f64) {
    let dim = domain.dim();
    let mut steps: Vec<f64> = (0..dim).map(|d| step_init * domain.width(d)).collect();
    let tol = 1e-9 * domain.diagonal();
    let mut x = start;
    let mut fx = objective(&x);
    for _ in 0..max_iters {
        let mut improved = false;
        for d in 0..dim {
            for dir in [1.0, -1.0] {
                let mut cand = x.clone();
                cand[d] += dir * steps[d];
                let cand = domain.project(&cand);
                if cand == x {
                    continue;
                }
                if feasible(&cand) {
                    let fc = objective(&cand);
                    if fc > fx {
                        x = cand;
                        fx = fc;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            for s in &mut steps {
                *s *= 0.5;
            }
            if steps.iter().fold(0.0_f64, |a, &b| a.max(b)) < tol {
                break;
            }
        }
    }
    (x, fx)
}

/// Runs the configured algorithm for its full budget against a noisy oracle,
/// with no access to ground truth. Returns one record per iteration.
pub fn run_queries(
    config: &AlgorithmConfig,
    space: &SearchSpace,
    oracle: &mut dyn FnMut(&[f64]) -> f64,
) -> Result<Vec<QueryRecord>> {
    config.validate()?;
    space.validate()?;
    match (config.variant.needs_grid(), space) {
        (true, SearchSpace::Grid { grid, seed_indices }) => {
            run_grid_loop(config, grid, seed_indices, oracle)
        }
        (false, SearchSpace::Continuous { domain, seeds }) => {
            run_continuous_loop(config, domain, seeds, oracle)
        }
        (true, SearchSpace::Continuous { .. }) => Err(Error::invalid_argument(
            "grid-path algorithm needs a grid search space",
        )),
        (false, SearchSpace::Grid { .. }) => Err(Error::invalid_argument(
            "the continuous algorithm needs a continuous search space",
        )),
    }
}

fn run_grid_loop(
    config: &AlgorithmConfig,
    grid: &GridDomain,
    seed_indices: &[usize],
    oracle: &mut dyn FnMut(&[f64]) -> f64,
) -> Result<Vec<QueryRecord>> {
    let mut state = SafeSetState::new(grid.len(), seed_indices.to_vec(), config.h)?;
    let mut post = fit_posterior(
        config.kernel.clone(),
        Dataset::new(grid.domain().clone()),
        config.lambda,
    )?;
    let mut records = Vec::with_capacity(config.budget);
    for t in 1..=config.budget {
        let step = step_safeopt_family(config, grid, &state, &post)?;
        let x = grid.point(step.index).to_vec();
        let y = oracle(&x);
        post = post.add_observation(x.clone(), y)?;
        state = step.state;
        records.push(QueryRecord {
            t,
            x,
            y,
            safe_set_size: state.num_safe() as i64,
            beta: step.beta,
            acquisition_value: step.acquisition,
        });
    }
    Ok(records)
}

fn run_continuous_loop(
    config: &AlgorithmConfig,
    domain: &BoxDomain,
    seeds: &[Vec<f64>],
    oracle: &mut dyn FnMut(&[f64]) -> f64,
) -> Result<Vec<QueryRecord>> {
    let mut post = fit_posterior(
        config.kernel.clone(),
        Dataset::new(domain.clone()),
        config.lambda,
    )?;
    let mut rng = derive_rng(config.rng_seed, "acquisition-starts", 0);
    let mut records = Vec::with_capacity(config.budget);
    for t in 1..=config.budget {
        let step = step_los_gp_ucb(config, domain, seeds, &post, &mut rng)?;
        let y = oracle(&step.x);
        post = post.add_observation(step.x.clone(), y)?;
        records.push(QueryRecord {
            t,
            x: step.x,
            y,
            safe_set_size: -1,
            beta: step.beta,
            acquisition_value: step.acquisition,
        });
    }
    Ok(records)
}

/// Baseline for performance comparisons: certifies safety exactly like LoSBO
/// (Lipschitz envelope on the grid) but picks uniformly at random among the
/// currently certified points. Ignores the config's kernel and schedule;
/// `beta` and `acquisition_value` are reported as 0.
pub fn run_random_safe_baseline(
    config: &AlgorithmConfig,
    space: &SearchSpace,
    oracle: &mut dyn FnMut(&[f64]) -> f64,
) -> Result<Vec<QueryRecord>> {
    config.validate()?;
    space.validate()?;
    let (grid, seed_indices) = match space {
        SearchSpace::Grid { grid, seed_indices } => (grid, seed_indices),
        SearchSpace::Continuous { .. } => {
            return Err(Error::invalid_argument(
                "the random-safe baseline runs on a grid search space",
            ));
        }
    };
    let mut state = SafeSetState::new(grid.len(), seed_indices.to_vec(), config.h)?;
    let mut data = Dataset::new(grid.domain().clone());
    let mut rng = derive_rng(config.rng_seed, "random-safe-selection", 0);
    let mut records = Vec::with_capacity(config.budget);
    for t in 1..=config.budget {
        state = update_safe_set_lipschitz(&state, grid, &data, &config.safety)?;
        let safe = state.safe_indices();
        let index = safe[rng.random_range(0..safe.len())];
        let x = grid.point(index).to_vec();
        let y = oracle(&x);
        data.push(x.clone(), y)?;
        records.push(QueryRecord {
            t,
            x,
            y,
            safe_set_size: state.num_safe() as i64,
            beta: 0.0,
            acquisition_value: 0.0,
        });
    }
    Ok(records)
}

/// Attaches exact ground truth to a query trace: `f_true = truth(x)` and
/// `safe_actual = f_true >= h`.
pub fn instrument_with_truth(
    records: Vec<QueryRecord>,
    truth: &dyn Fn(&[f64]) -> f64,
    h: f64,
) -> Vec<IterationRecord> {
    records
        .into_iter()
        .map(|r| {
            let f_true = truth(&r.x);
            IterationRecord {
                t: r.t,
                x: r.x,
                y: r.y,
                f_true,
                safe_actual: f_true >= h,
                safe_set_size: r.safe_set_size,
                beta: r.beta,
                acquisition_value: r.acquisition_value,
            }
        })
        .collect()
}

/// [`run_queries`] plus ground-truth instrumentation, for experiments where
/// the exact target is available.
pub fn run_optimization(
    config: &AlgorithmConfig,
    space: &SearchSpace,
    oracle: &mut dyn FnMut(&[f64]) -> f64,
    truth: &dyn Fn(&[f64]) -> f64,
) -> Result<Vec<IterationRecord>> {
    let records = run_queries(config, space, oracle)?;
    Ok(instrument_with_truth(records, truth, config.h))
}
