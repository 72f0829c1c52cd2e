//! Experiment configuration: strict TOML parsing (unknown keys are fatal),
//! defaulting, validation, and a normalized echo of the effective config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use safebo::bounds::BetaSchedule;
use safebo::domain::BoxDomain;
use safebo::kernel::{KernelFamily, KernelSpec, Lengthscale};
use safebo::optimizers::{AlgorithmVariant, MultistartConfig};

use crate::error::{HarnessError, Result};

pub const DEFAULT_MASTER_SEED: u64 = 0;
pub const DEFAULT_BUDGET: usize = 30;
pub const DEFAULT_NUM_SEEDS: usize = 5;
pub const DEFAULT_NUM_FUNCTIONS: usize = 10;
pub const DEFAULT_GRID_POINTS: usize = 500;
pub const DEFAULT_ORACLE_POINTS: usize = 10_000;
pub const DEFAULT_SEED_MARGIN_FRACTION: f64 = 0.05;
pub const DEFAULT_THRESHOLD_OFFSET: f64 = 0.6;
pub const DEFAULT_NOISE_E: f64 = 0.1;
pub const DEFAULT_ALGORITHM_LAMBDA: f64 = 0.01;
pub const DEFAULT_BETA: f64 = 2.0;
pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_AUDIT_RUNS: usize = 200;
pub const DEFAULT_AUDIT_DATASET_SIZE: usize = 15;
/// The RKHS-norm beta formula is only a valid coverage bound when the GP
/// regularizer is 1, so audits default to that.
pub const DEFAULT_AUDIT_LAMBDA: f64 = 1.0;

/// On-disk layout, exactly as written by the user. Every section rejects
/// unknown keys so typos cannot silently weaken a safety experiment.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    num_seeds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    num_functions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    num_runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    domain: RawDomain,
    function: RawFunction,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<RawThreshold>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<RawNoise>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<RawGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lipschitz: Option<RawLipschitz>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seeding: Option<RawSeeding>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    algorithm: Vec<RawAlgorithm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    schedule: Vec<RawSchedule>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawFunction {
    kernel: String,
    lengthscale: toml::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    signal_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    num_centers: Option<usize>,
    rkhs_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    misspecification: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawThreshold {
    mode: String,
    value: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    points_per_dim: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawLipschitz {
    oracle_points: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSeeding {
    margin_fraction: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawAlgorithm {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    multistart: Option<RawMultistart>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawMultistart {
    #[serde(skip_serializing_if = "Option::is_none")]
    num_starts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step_init: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
}

/// How the safety threshold is placed for each sampled function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// `h` is this absolute value; functions that admit no eligible seed at
    /// this level are rejected and resampled.
    Fixed(f64),
    /// `h` = (function's max over the reference grid) - offset.
    BelowMax(f64),
}

/// Observation noise configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseConfig {
    Uniform { e: f64 },
    Gaussian { sigma: f64 },
}

impl NoiseConfig {
    /// Almost-sure magnitude bound, if one exists.
    pub fn magnitude_bound(&self) -> Option<f64> {
        match self {
            NoiseConfig::Uniform { e } => Some(*e),
            NoiseConfig::Gaussian { .. } => None,
        }
    }

    /// Sub-Gaussian scale used as the default `R` in RKHS-norm schedules
    /// (uniform on `[-E, E]` is sub-Gaussian with scale `E`).
    pub fn sub_gaussian_scale(&self) -> f64 {
        match self {
            NoiseConfig::Uniform { e } => *e,
            NoiseConfig::Gaussian { sigma } => *sigma,
        }
    }

    /// Instantiates the observation-noise generator on its own stream.
    pub fn model(&self, seed: u64) -> Result<safebo::synth::NoiseModel> {
        Ok(match *self {
            NoiseConfig::Uniform { e } => safebo::synth::NoiseModel::uniform(e, seed)?,
            NoiseConfig::Gaussian { sigma } => safebo::synth::NoiseModel::gaussian(sigma, seed)?,
        })
    }
}

/// Ground-truth generation parameters.
#[derive(Debug, Clone)]
pub struct FunctionGenConfig {
    pub kernel: KernelSpec,
    pub num_centers: usize,
    /// The norm bound the algorithms are told (the assumed `B`).
    pub rkhs_norm: f64,
    /// True norm = `misspecification * rkhs_norm`; 1 means well-specified.
    pub misspecification: f64,
}

impl FunctionGenConfig {
    pub fn true_norm(&self) -> f64 {
        self.misspecification * self.rkhs_norm
    }
}

/// Settings shared by every experiment kind.
#[derive(Debug, Clone)]
pub struct CommonConfig {
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
    pub domain: BoxDomain,
    pub function: FunctionGenConfig,
    pub threshold: ThresholdRule,
    pub noise: NoiseConfig,
    pub reference_grid_points: usize,
    pub lipschitz_oracle_points: usize,
    pub seed_margin_fraction: f64,
}

/// Which algorithm a comparison entry runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarnessAlgorithm {
    Core(AlgorithmVariant),
    /// Uniform choice within the Lipschitz-certified safe set.
    RandomSafe,
}

impl HarnessAlgorithm {
    pub fn name(&self) -> &'static str {
        match self {
            HarnessAlgorithm::Core(v) => v.name(),
            HarnessAlgorithm::RandomSafe => "random-safe",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "safeopt" => HarnessAlgorithm::Core(AlgorithmVariant::SafeOptHeuristic),
            "real-beta-safeopt" => HarnessAlgorithm::Core(AlgorithmVariant::RealBetaSafeOpt),
            "losbo" => HarnessAlgorithm::Core(AlgorithmVariant::LoSBO),
            "los-gp-ucb" => HarnessAlgorithm::Core(AlgorithmVariant::LoSGpUcb),
            "random-safe" => HarnessAlgorithm::RandomSafe,
            other => {
                return Err(HarnessError::config(format!(
                    "unknown algorithm kind {other:?} (expected safeopt, real-beta-safeopt, \
                     losbo, los-gp-ucb or random-safe)"
                )))
            }
        })
    }

    /// Whether the algorithm certifies safety through the Lipschitz envelope
    /// (and therefore requires bounded noise).
    pub fn uses_lipschitz_safety(&self) -> bool {
        matches!(
            self,
            HarnessAlgorithm::Core(AlgorithmVariant::LoSBO)
                | HarnessAlgorithm::Core(AlgorithmVariant::LoSGpUcb)
                | HarnessAlgorithm::RandomSafe
        )
    }
}

/// One fully validated comparison algorithm entry.
#[derive(Debug, Clone)]
pub struct AlgorithmSpec {
    pub label: String,
    pub kind: HarnessAlgorithm,
    pub lambda: f64,
    pub schedule: BetaSchedule,
    pub multistart: MultistartConfig,
}

/// One fully validated audit schedule entry.
#[derive(Debug, Clone)]
pub struct ScheduleSpec {
    pub label: String,
    pub schedule: BetaSchedule,
}

#[derive(Debug, Clone)]
pub struct ComparisonConfig {
    pub common: CommonConfig,
    pub budget: usize,
    pub num_functions: usize,
    pub num_seeds: usize,
    pub algorithms: Vec<AlgorithmSpec>,
}

#[derive(Debug, Clone)]
pub struct AuditConfig {
    pub common: CommonConfig,
    pub num_runs: usize,
    pub dataset_size: usize,
    pub lambda: f64,
    pub schedules: Vec<ScheduleSpec>,
}

#[derive(Debug, Clone)]
pub enum ExperimentConfig {
    Comparison(ComparisonConfig),
    Audit(AuditConfig),
}

impl ExperimentConfig {
    pub fn common(&self) -> &CommonConfig {
        match self {
            ExperimentConfig::Comparison(c) => &c.common,
            ExperimentConfig::Audit(a) => &a.common,
        }
    }
}

/// Command-line overrides applied before validation; they appear in the
/// normalized echo so the written config is the one that actually ran.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub master_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

/// Parses and validates a config file. The returned string is the normalized
/// echo: the effective configuration with every default filled in.
pub fn parse_config(path: &Path, overrides: &ConfigOverrides) -> Result<(ExperimentConfig, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        HarnessError::config(format!("cannot read config {}: {e}", path.display()))
    })?;
    parse_config_text(&text, overrides)
}

pub fn parse_config_str(text: &str) -> Result<(ExperimentConfig, String)> {
    parse_config_text(text, &ConfigOverrides::default())
}

fn parse_config_text(text: &str, overrides: &ConfigOverrides) -> Result<(ExperimentConfig, String)> {
    let mut raw: RawConfig = toml::from_str(text)
        .map_err(|e| HarnessError::config(format!("config parse error: {e}")))?;
    if let Some(seed) = overrides.master_seed {
        raw.master_seed = Some(seed);
    }
    if let Some(out) = &overrides.output_dir {
        raw.output_dir = Some(out.to_string_lossy().into_owned());
    }
    let config = validate(&mut raw)?;
    let echo = toml::to_string_pretty(&raw)
        .map_err(|e| HarnessError::config(format!("cannot render normalized config: {e}")))?;
    Ok((config, echo))
}

/// Labels end up as bare CSV fields and SVG class names, so keep them to a
/// charset that needs no quoting anywhere.
fn check_label(label: &str) -> Result<()> {
    let ok = !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(HarnessError::config(format!(
            "label {label:?} must be non-empty and use only letters, digits, '-', '_' or '.'"
        )))
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(HarnessError::config(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn validate(raw: &mut RawConfig) -> Result<ExperimentConfig> {
    let common = validate_common(raw)?;
    match raw.kind.as_str() {
        "comparison" => {
            if !raw.schedule.is_empty() {
                return Err(HarnessError::config(
                    "[[schedule]] sections belong to audit configs; use [[algorithm]]",
                ));
            }
            let budget = *raw.budget.get_or_insert(DEFAULT_BUDGET);
            let num_seeds = *raw.num_seeds.get_or_insert(DEFAULT_NUM_SEEDS);
            let num_functions = *raw.num_functions.get_or_insert(DEFAULT_NUM_FUNCTIONS);
            if budget == 0 || num_seeds == 0 || num_functions == 0 {
                return Err(HarnessError::config(
                    "budget, num_seeds and num_functions must all be at least 1",
                ));
            }
            if raw.num_runs.is_some() || raw.dataset_size.is_some() || raw.lambda.is_some() {
                return Err(HarnessError::config(
                    "num_runs, dataset_size and top-level lambda are audit-only keys",
                ));
            }
            if raw.algorithm.is_empty() {
                return Err(HarnessError::config(
                    "comparison configs need at least one [[algorithm]]",
                ));
            }
            let mut algorithms = Vec::new();
            for entry in &mut raw.algorithm {
                algorithms.push(validate_algorithm(entry, &common)?);
            }
            let mut labels: Vec<&str> = algorithms.iter().map(|a| a.label.as_str()).collect();
            labels.sort_unstable();
            labels.dedup();
            if labels.len() != algorithms.len() {
                return Err(HarnessError::config(
                    "algorithm labels must be unique; set label = \"...\" to disambiguate",
                ));
            }
            Ok(ExperimentConfig::Comparison(ComparisonConfig {
                common,
                budget,
                num_functions,
                num_seeds,
                algorithms,
            }))
        }
        "audit" => {
            if !raw.algorithm.is_empty() {
                return Err(HarnessError::config(
                    "[[algorithm]] sections belong to comparison configs; use [[schedule]]",
                ));
            }
            if raw.budget.is_some() || raw.num_seeds.is_some() {
                return Err(HarnessError::config(
                    "budget and num_seeds are comparison-only keys",
                ));
            }
            let num_runs = *raw.num_runs.get_or_insert(DEFAULT_AUDIT_RUNS);
            let dataset_size = *raw.dataset_size.get_or_insert(DEFAULT_AUDIT_DATASET_SIZE);
            let lambda = positive("lambda", *raw.lambda.get_or_insert(DEFAULT_AUDIT_LAMBDA))?;
            if num_runs == 0 || dataset_size == 0 {
                return Err(HarnessError::config(
                    "num_runs and dataset_size must be at least 1",
                ));
            }
            if raw.schedule.is_empty() {
                return Err(HarnessError::config(
                    "audit configs need at least one [[schedule]]",
                ));
            }
            let mut schedules = Vec::new();
            for entry in &mut raw.schedule {
                schedules.push(validate_schedule(entry, &common)?);
            }
            let mut labels: Vec<&str> = schedules.iter().map(|s| s.label.as_str()).collect();
            labels.sort_unstable();
            labels.dedup();
            if labels.len() != schedules.len() {
                return Err(HarnessError::config(
                    "schedule labels must be unique; set label = \"...\" to disambiguate",
                ));
            }
            Ok(ExperimentConfig::Audit(AuditConfig {
                common,
                num_runs,
                dataset_size,
                lambda,
                schedules,
            }))
        }
        other => Err(HarnessError::config(format!(
            "unknown experiment kind {other:?} (expected \"comparison\" or \"audit\")"
        ))),
    }
}

fn validate_common(raw: &mut RawConfig) -> Result<CommonConfig> {
    let master_seed = *raw.master_seed.get_or_insert(DEFAULT_MASTER_SEED);
    let domain = BoxDomain::new(raw.domain.lower.clone(), raw.domain.upper.clone())
        .map_err(|e| HarnessError::config(format!("bad [domain]: {e}")))?;
    let dim = domain.dim();

    let family = KernelFamily::parse(&raw.function.kernel)
        .map_err(|e| HarnessError::config(format!("bad [function].kernel: {e}")))?;
    let lengthscale = parse_lengthscale(&raw.function.lengthscale, dim)?;
    let signal_variance = *raw.function.signal_variance.get_or_insert(1.0);
    let kernel = KernelSpec::new(family, lengthscale, signal_variance)
        .map_err(|e| HarnessError::config(format!("bad [function] kernel parameters: {e}")))?;
    let num_centers = *raw.function.num_centers.get_or_insert(30);
    if num_centers == 0 {
        return Err(HarnessError::config("num_centers must be at least 1"));
    }
    let rkhs_norm = positive("[function].rkhs_norm", raw.function.rkhs_norm)?;
    let misspecification = *raw.function.misspecification.get_or_insert(1.0);
    if !(misspecification.is_finite() && misspecification >= 1.0) {
        return Err(HarnessError::config(format!(
            "[function].misspecification must be >= 1 (1 = well-specified), got {misspecification}"
        )));
    }

    let threshold = match raw.threshold.get_or_insert(RawThreshold {
        mode: "below-max".into(),
        value: DEFAULT_THRESHOLD_OFFSET,
    }) {
        t if t.mode == "fixed" => {
            if !t.value.is_finite() {
                return Err(HarnessError::config("threshold value must be finite"));
            }
            ThresholdRule::Fixed(t.value)
        }
        t if t.mode == "below-max" => {
            ThresholdRule::BelowMax(positive("[threshold].value", t.value)?)
        }
        t => {
            return Err(HarnessError::config(format!(
                "unknown threshold mode {:?} (expected \"fixed\" or \"below-max\")",
                t.mode
            )))
        }
    };

    let noise = {
        let section = raw.noise.get_or_insert(RawNoise {
            kind: "uniform".into(),
            e: Some(DEFAULT_NOISE_E),
            sigma: None,
        });
        match section.kind.as_str() {
            "uniform" => {
                if section.sigma.is_some() {
                    return Err(HarnessError::config("uniform noise takes e, not sigma"));
                }
                let e = *section.e.get_or_insert(DEFAULT_NOISE_E);
                if !(e.is_finite() && e >= 0.0) {
                    return Err(HarnessError::config(format!(
                        "[noise].e must be non-negative, got {e}"
                    )));
                }
                NoiseConfig::Uniform { e }
            }
            "gaussian" => {
                if section.e.is_some() {
                    return Err(HarnessError::config("gaussian noise takes sigma, not e"));
                }
                let sigma = section.sigma.ok_or_else(|| {
                    HarnessError::config("gaussian noise needs sigma")
                })?;
                NoiseConfig::Gaussian {
                    sigma: positive("[noise].sigma", sigma)?,
                }
            }
            other => {
                return Err(HarnessError::config(format!(
                    "unknown noise kind {other:?} (expected \"uniform\" or \"gaussian\")"
                )))
            }
        }
    };

    let reference_grid_points = raw
        .grid
        .get_or_insert(RawGrid {
            points_per_dim: DEFAULT_GRID_POINTS,
        })
        .points_per_dim;
    if reference_grid_points < 2 {
        return Err(HarnessError::config(
            "[grid].points_per_dim must be at least 2",
        ));
    }
    let lipschitz_oracle_points = raw
        .lipschitz
        .get_or_insert(RawLipschitz {
            oracle_points: DEFAULT_ORACLE_POINTS,
        })
        .oracle_points;
    if lipschitz_oracle_points < 100 {
        return Err(HarnessError::config(
            "[lipschitz].oracle_points must be at least 100",
        ));
    }
    let seed_margin_fraction = raw
        .seeding
        .get_or_insert(RawSeeding {
            margin_fraction: DEFAULT_SEED_MARGIN_FRACTION,
        })
        .margin_fraction;
    if !(0.0..1.0).contains(&seed_margin_fraction) {
        return Err(HarnessError::config(format!(
            "[seeding].margin_fraction must lie in [0, 1), got {seed_margin_fraction}"
        )));
    }

    Ok(CommonConfig {
        master_seed,
        output_dir: raw.output_dir.as_ref().map(PathBuf::from),
        domain,
        function: FunctionGenConfig {
            kernel,
            num_centers,
            rkhs_norm,
            misspecification,
        },
        threshold,
        noise,
        reference_grid_points,
        lipschitz_oracle_points,
        seed_margin_fraction,
    })
}

fn parse_lengthscale(value: &toml::Value, dim: usize) -> Result<Lengthscale> {
    match value {
        toml::Value::Float(l) => Ok(Lengthscale::Isotropic(*l)),
        toml::Value::Integer(l) => Ok(Lengthscale::Isotropic(*l as f64)),
        toml::Value::Array(items) => {
            let mut scales = Vec::with_capacity(items.len());
            for item in items {
                match item {
                    toml::Value::Float(l) => scales.push(*l),
                    toml::Value::Integer(l) => scales.push(*l as f64),
                    _ => {
                        return Err(HarnessError::config(
                            "lengthscale array entries must be numbers",
                        ))
                    }
                }
            }
            if scales.len() == 1 {
                Ok(Lengthscale::Isotropic(scales[0]))
            } else if scales.len() == dim {
                Ok(Lengthscale::PerDimension(scales))
            } else {
                Err(HarnessError::config(format!(
                    "lengthscale array has {} entries for a {dim}-dimensional domain",
                    scales.len()
                )))
            }
        }
        _ => Err(HarnessError::config(
            "lengthscale must be a number or an array of numbers",
        )),
    }
}

fn validate_algorithm(entry: &mut RawAlgorithm, common: &CommonConfig) -> Result<AlgorithmSpec> {
    let kind = HarnessAlgorithm::parse(&entry.kind)?;
    let label = entry
        .label
        .get_or_insert_with(|| entry.kind.clone())
        .clone();
    check_label(&label)?;
    let lambda = positive(
        "algorithm lambda",
        *entry.lambda.get_or_insert(DEFAULT_ALGORITHM_LAMBDA),
    )?;
    if entry.multistart.is_some() && kind != HarnessAlgorithm::Core(AlgorithmVariant::LoSGpUcb) {
        return Err(HarnessError::config(format!(
            "algorithm {label:?}: multistart settings only apply to los-gp-ucb"
        )));
    }
    let multistart = {
        let defaults = MultistartConfig::default();
        match entry.multistart.as_mut() {
            None => defaults,
            Some(ms) => MultistartConfig {
                num_starts: *ms.num_starts.get_or_insert(defaults.num_starts),
                max_iters: *ms.max_iters.get_or_insert(defaults.max_iters),
                step_init: *ms.step_init.get_or_insert(defaults.step_init),
            },
        }
    };
    let schedule = match kind {
        HarnessAlgorithm::Core(AlgorithmVariant::RealBetaSafeOpt) => {
            if entry.beta.is_some() {
                return Err(HarnessError::config(format!(
                    "algorithm {label:?}: real-beta-safeopt takes b/r/delta, not beta"
                )));
            }
            BetaSchedule::RkhsNormBound {
                b: *entry.b.get_or_insert(common.function.rkhs_norm),
                r: *entry.r.get_or_insert(common.noise.sub_gaussian_scale()),
                delta: *entry.delta.get_or_insert(DEFAULT_DELTA),
            }
        }
        _ => {
            if entry.b.is_some() || entry.r.is_some() || entry.delta.is_some() {
                return Err(HarnessError::config(format!(
                    "algorithm {label:?}: b/r/delta only apply to real-beta-safeopt"
                )));
            }
            BetaSchedule::ConstantHeuristic(*entry.beta.get_or_insert(DEFAULT_BETA))
        }
    };
    schedule
        .validate()
        .map_err(|e| HarnessError::config(format!("algorithm {label:?}: {e}")))?;
    if kind.uses_lipschitz_safety() && common.noise.magnitude_bound().is_none() {
        return Err(HarnessError::config(format!(
            "algorithm {label:?} relies on the Lipschitz safety certificate, which needs \
             bounded (uniform) noise; gaussian noise has no almost-sure bound"
        )));
    }
    Ok(AlgorithmSpec {
        label,
        kind,
        lambda,
        schedule,
        multistart,
    })
}

fn validate_schedule(entry: &mut RawSchedule, common: &CommonConfig) -> Result<ScheduleSpec> {
    let label = entry
        .label
        .get_or_insert_with(|| entry.kind.clone())
        .clone();
    check_label(&label)?;
    let schedule = match entry.kind.as_str() {
        "constant" => {
            if entry.b.is_some() || entry.r.is_some() || entry.delta.is_some() {
                return Err(HarnessError::config(format!(
                    "schedule {label:?}: constant schedules take beta only"
                )));
            }
            BetaSchedule::ConstantHeuristic(*entry.beta.get_or_insert(DEFAULT_BETA))
        }
        "rkhs-norm" => {
            if entry.beta.is_some() {
                return Err(HarnessError::config(format!(
                    "schedule {label:?}: rkhs-norm schedules take b/r/delta, not beta"
                )));
            }
            BetaSchedule::RkhsNormBound {
                b: *entry.b.get_or_insert(common.function.rkhs_norm),
                r: *entry.r.get_or_insert(common.noise.sub_gaussian_scale()),
                delta: *entry.delta.get_or_insert(DEFAULT_DELTA),
            }
        }
        other => {
            return Err(HarnessError::config(format!(
                "unknown schedule kind {other:?} (expected \"constant\" or \"rkhs-norm\")"
            )))
        }
    };
    schedule
        .validate()
        .map_err(|e| HarnessError::config(format!("schedule {label:?}: {e}")))?;
    Ok(ScheduleSpec { label, schedule })
}
