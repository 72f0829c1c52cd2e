//! Safe-set estimation on a discrete grid, plus the maximizer/expander
//! candidate sets of the SafeOpt scheme.
//!
//! Two certification routes update the safe set: GP lower bounds propagated
//! through a Lipschitz cone (`update_safe_set_gp`), or the pure
//! Lipschitz/bounded-noise envelope that never consults the GP
//! (`update_safe_set_lipschitz`). Safe sets only ever grow within a run and
//! always contain the seed indices.

use crate::bounds::{beta_value, BetaSchedule, LipschitzSafetyModel};
use crate::domain::{euclidean_distance, BoxDomain};
use crate::error::{Error, Result};
use crate::gp::{Dataset, GpPosterior};

/// A finite row-major lattice over a box domain (last dimension varies
/// fastest). All set operations identify points by their grid index.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    domain: BoxDomain,
    points_per_dim: Vec<usize>,
    points: Vec<Vec<f64>>,
}

impl GridDomain {
    pub fn new(domain: BoxDomain, points_per_dim: Vec<usize>) -> Result<Self> {
        if points_per_dim.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: points_per_dim.len(),
            });
        }
        if points_per_dim.iter().any(|&n| n == 0) {
            return Err(Error::invalid_argument("grid needs at least one point per dimension"));
        }
        let total: usize = points_per_dim.iter().product();
        let mut points = Vec::with_capacity(total);
        for index in 0..total {
            let mut rem = index;
            let mut coords = vec![0.0; domain.dim()];
            for d in (0..domain.dim()).rev() {
                let n = points_per_dim[d];
                let j = rem % n;
                rem /= n;
                coords[d] = grid_coordinate(domain.lower()[d], domain.upper()[d], j, n);
            }
            points.push(coords);
        }
        Ok(GridDomain {
            domain,
            points_per_dim,
            points,
        })
    }

    /// Grid with the same point count along every dimension.
    pub fn uniform(domain: BoxDomain, per_dim: usize) -> Result<Self> {
        let dims = domain.dim();
        GridDomain::new(domain, vec![per_dim; dims])
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index]
    }

    /// Index of the lattice point nearest to `x` (per-dimension rounding).
    pub fn nearest_index(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut index = 0;
        for d in 0..self.dim() {
            let n = self.points_per_dim[d];
            let j = if n == 1 {
                0
            } else {
                let span = self.domain.upper()[d] - self.domain.lower()[d];
                let t = (x[d] - self.domain.lower()[d]) / span * (n - 1) as f64;
                (t.round().max(0.0) as usize).min(n - 1)
            };
            index = index * n + j;
        }
        Ok(index)
    }
}

fn grid_coordinate(lower: f64, upper: f64, j: usize, n: usize) -> f64 {
    if n == 1 {
        0.5 * (lower + upper)
    } else {
        lower + (upper - lower) * j as f64 / (n - 1) as f64
    }
}

/// Certified-safe estimate over a grid: the seed indices, a per-point safe
/// flag, and the safety threshold `h`. Seeds are safe from construction and
/// never revoked.
#[derive(Debug, Clone, PartialEq)]
pub struct SafeSetState {
    seed_indices: Vec<usize>,
    safe: Vec<bool>,
    h: f64,
}

impl SafeSetState {
    pub fn new(grid_len: usize, seed_indices: Vec<usize>, h: f64) -> Result<Self> {
        if seed_indices.is_empty() {
            return Err(Error::invalid_argument("seed set must be nonempty"));
        }
        if !h.is_finite() {
            return Err(Error::invalid_argument(format!("safety threshold must be finite, got {h}")));
        }
        let mut safe = vec![false; grid_len];
        for &i in &seed_indices {
            if i >= grid_len {
                return Err(Error::invalid_argument(format!(
                    "seed index {i} out of range for grid of {grid_len} points"
                )));
            }
            safe[i] = true;
        }
        Ok(SafeSetState { seed_indices, safe, h })
    }

    /// Rebuilds a state from an explicit per-point mask (replaying a recorded
    /// run, or testing set operations on arbitrary reachable states). Seeds
    /// must be marked safe in the mask.
    pub fn with_mask(seed_indices: Vec<usize>, safe: Vec<bool>, h: f64) -> Result<Self> {
        let state = SafeSetState::new(safe.len(), seed_indices, h)?;
        for &i in &state.seed_indices {
            if !safe[i] {
                return Err(Error::invalid_argument(format!(
                    "seed index {i} is not marked safe in the mask"
                )));
            }
        }
        Ok(SafeSetState { safe, ..state })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn seed_indices(&self) -> &[usize] {
        &self.seed_indices
    }

    pub fn is_safe(&self, index: usize) -> bool {
        self.safe[index]
    }

    pub fn safe_mask(&self) -> &[bool] {
        &self.safe
    }

    pub fn safe_indices(&self) -> Vec<usize> {
        (0..self.safe.len()).filter(|&i| self.safe[i]).collect()
    }

    pub fn num_safe(&self) -> usize {
        self.safe.iter().filter(|&&s| s).count()
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.num_safe() == 0 {
            return Err(Error::invalid_state("safe set is empty"));
        }
        Ok(())
    }
}

/// Grows the safe set from GP lower bounds: `x` becomes safe iff some
/// currently safe `x'` certifies it via `lower(x') - L ||x - x'|| >= h`.
/// Previously safe points stay safe. One expansion pass per call (no
/// transitive closure within a single update).
pub fn update_safe_set_gp(
    state: &SafeSetState,
    grid: &GridDomain,
    post: &GpPosterior,
    schedule: &BetaSchedule,
    l: f64,
) -> Result<SafeSetState> {
    let beta = beta_value(schedule, post)?;
    let mut lower = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        let (mu, sigma) = post.predict(grid.point(i))?;
        lower[i] = mu - beta * sigma;
    }
    update_safe_set_gp_from_lower(state, grid, &lower, l)
}

/// `update_safe_set_gp` with the per-point lower bounds already evaluated
/// (callers that also need them for candidate sets avoid predicting twice).
pub fn update_safe_set_gp_from_lower(
    state: &SafeSetState,
    grid: &GridDomain,
    lower: &[f64],
    l: f64,
) -> Result<SafeSetState> {
    state.require_nonempty()?;
    check_grid_alignment(state, grid, lower)?;
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::invalid_argument(format!(
            "Lipschitz bound L must be positive and finite, got {l}"
        )));
    }
    let certifiers: Vec<usize> = state
        .safe_indices()
        .into_iter()
        .filter(|&i| lower[i] >= state.h)
        .collect();
    let mut next = state.clone();
    for i in 0..grid.len() {
        if next.safe[i] {
            continue;
        }
        let x = grid.point(i);
        let certified = certifiers
            .iter()
            .any(|&j| lower[j] - l * euclidean_distance(x, grid.point(j)) >= state.h);
        if certified {
            next.safe[i] = true;
        }
    }
    Ok(next)
}

/// Grows the safe set from the Lipschitz envelope alone: `x` is safe iff it is
/// a seed, was already safe, or `lipschitz_lower_envelope(data, model, x) >=
/// h`. Entirely independent of the GP posterior and of beta.
pub fn update_safe_set_lipschitz(
    state: &SafeSetState,
    grid: &GridDomain,
    data: &Dataset,
    model: &LipschitzSafetyModel,
) -> Result<SafeSetState> {
    check_grid_alignment(state, grid, state.safe_mask())?;
    let mut next = state.clone();
    for i in 0..grid.len() {
        if next.safe[i] {
            continue;
        }
        if crate::bounds::lipschitz_lower_envelope(data, model, grid.point(i)) >= state.h {
            next.safe[i] = true;
        }
    }
    Ok(next)
}

/// Potential safe maximizers: safe points whose upper bound reaches the best
/// safe lower bound, `M = {x safe : upper(x) >= max_{x' safe} lower(x')}`.
pub fn maximizer_set(state: &SafeSetState, lower: &[f64], upper: &[f64]) -> Result<Vec<usize>> {
    state.require_nonempty()?;
    if lower.len() != state.safe.len() || upper.len() != state.safe.len() {
        return Err(Error::DimensionMismatch {
            expected: state.safe.len(),
            got: lower.len().min(upper.len()),
        });
    }
    let best_lower = state
        .safe_indices()
        .into_iter()
        .map(|i| lower[i])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((0..state.safe.len())
        .filter(|&i| state.safe[i] && upper[i] >= best_lower)
        .collect())
}

/// Potential expanders: safe points whose optimistic value could certify some
/// currently unsafe point, `G = {x safe : exists unsafe z with upper(x) -
/// margin - L ||x - z|| >= h}`. `margin` is the noise bound `E` on the
/// Lipschitz certification path and `0` on the GP-bound path.
pub fn expander_set(
    state: &SafeSetState,
    grid: &GridDomain,
    upper: &[f64],
    l: f64,
    margin: f64,
) -> Result<Vec<usize>> {
    state.require_nonempty()?;
    check_grid_alignment(state, grid, upper)?;
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::invalid_argument(format!(
            "Lipschitz bound L must be positive and finite, got {l}"
        )));
    }
    let unsafe_indices: Vec<usize> = (0..state.safe.len()).filter(|&i| !state.safe[i]).collect();
    if unsafe_indices.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for i in state.safe_indices() {
        let budget = upper[i] - margin - state.h;
        if budget < 0.0 {
            continue;
        }
        let x = grid.point(i);
        let expands = unsafe_indices
            .iter()
            .any(|&z| l * euclidean_distance(x, grid.point(z)) <= budget);
        if expands {
            out.push(i);
        }
    }
    Ok(out)
}

fn check_grid_alignment<T>(state: &SafeSetState, grid: &GridDomain, per_point: &[T]) -> Result<()> {
    if state.safe.len() != grid.len() || per_point.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: state.safe.len().min(per_point.len()),
        });
    }
    Ok(())
}
