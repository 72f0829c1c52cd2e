//! Synthetic ground truth: finite kernel expansions with exactly computable
//! RKHS norms, a finite-difference Lipschitz-constant oracle, and bounded /
//! Gaussian noise models.
//!
//! Test functions are `f(x) = sum_i a_i k(x, z_i)` rather than GP sample
//! paths: sample paths lie outside the RKHS almost surely, while finite
//! expansions have `||f||^2 = a' K_z a` in closed form, which the
//! well/misspecified-norm experiments require.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::rng::derive_rng;

/// A finite kernel expansion `f(x) = sum_i a_i k(x, z_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RkhsFunction {
    kernel: KernelSpec,
    centers: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
}

impl RkhsFunction {
    pub fn new(kernel: KernelSpec, centers: Vec<Vec<f64>>, coefficients: Vec<f64>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::invalid_argument("expansion needs at least one center"));
        }
        if centers.len() != coefficients.len() {
            return Err(Error::invalid_argument(format!(
                "{} centers but {} coefficients",
                centers.len(),
                coefficients.len()
            )));
        }
        for z in &centers {
            kernel.check_dim(z)?;
            if z.len() != centers[0].len() {
                return Err(Error::DimensionMismatch {
                    expected: centers[0].len(),
                    got: z.len(),
                });
            }
        }
        if coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid_argument("coefficients must be finite"));
        }
        Ok(RkhsFunction {
            kernel,
            centers,
            coefficients,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    /// Exact evaluation of the expansion at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(&self.coefficients)
            .map(|(z, a)| a * self.kernel.eval_unchecked(x, z))
            .sum()
    }

    fn scale_coefficients(&mut self, s: f64) {
        for a in &mut self.coefficients {
            *a *= s;
        }
    }
}

/// `||f|| = sqrt(a' K_z a)` with `(K_z)_ij = k(z_i, z_j)`.
pub fn rkhs_norm(f: &RkhsFunction) -> f64 {
    let m = f.centers.len();
    let gram = f.kernel.gram(&f.centers);
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += f.coefficients[i] * gram[i * m + j] * f.coefficients[j];
        }
    }
    // the quadratic form is PSD; tiny negatives are rounding
    quad.max(0.0).sqrt()
}

/// Draws `m` centers uniformly in the box and standard-normal coefficients,
/// then rescales so the RKHS norm equals `target_norm` exactly. Near-zero
/// pre-scaling norms (cancelling coefficients on clustered centers) trigger a
/// center jitter and retry, at most 5 attempts.
pub fn sample_rkhs_function(
    kernel: &KernelSpec,
    domain: &BoxDomain,
    m: usize,
    target_norm: f64,
    seed: u64,
) -> Result<RkhsFunction> {
    if m == 0 {
        return Err(Error::invalid_argument("need at least one center"));
    }
    if !(target_norm.is_finite() && target_norm > 0.0) {
        return Err(Error::invalid_argument(format!(
            "target norm must be positive and finite, got {target_norm}"
        )));
    }
    let mut rng = derive_rng(seed, "rkhs-function-sample", 0);
    let mut f = draw_expansion(kernel, domain, m, &mut rng)?;
    for attempt in 0..5 {
        let norm = rkhs_norm(&f);
        if norm > 1e-8 * target_norm.max(1.0) {
            f.scale_coefficients(target_norm / norm);
            return Ok(f);
        }
        log::debug!("degenerate expansion draw (norm {norm:.3e}), jittering (attempt {attempt})");
        for z in &mut f.centers {
            for d in 0..z.len() {
                let width = domain.width(d);
                z[d] = (z[d] + rng.random_range(-0.01..0.01) * width)
                    .clamp(domain.lower()[d], domain.upper()[d]);
            }
        }
    }
    Err(Error::numeric(
        "could not draw a non-degenerate kernel expansion in 5 attempts",
    ))
}

fn draw_expansion(
    kernel: &KernelSpec,
    domain: &BoxDomain,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<RkhsFunction> {
    let centers: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..domain.dim())
                .map(|d| rng.random_range(domain.lower()[d]..=domain.upper()[d]))
                .collect()
        })
        .collect();
    let coefficients: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
    RkhsFunction::new(kernel.clone(), centers, coefficients)
}

/// Estimates the Lipschitz constant of `f` over `domain`: the maximum
/// central-difference gradient norm over a fine lattice of roughly
/// `total_points` points, times a 1.1 safety factor. An estimate, not a proof;
/// reliable for the smooth expansions produced here at the resolutions the
/// callers use (>= 10^4 points).
pub fn lipschitz_oracle(f: &RkhsFunction, domain: &BoxDomain, total_points: usize) -> f64 {
    1.1 * max_gradient_norm(f, domain, total_points)
}

fn max_gradient_norm(f: &RkhsFunction, domain: &BoxDomain, total_points: usize) -> f64 {
    let d = domain.dim();
    let per_dim = (total_points.max(2) as f64).powf(1.0 / d as f64).ceil() as usize;
    let per_dim = per_dim.max(2);
    let steps: Vec<f64> = (0..d).map(|k| 1e-6 * domain.width(k).max(1e-3)).collect();
    let mut max_norm2 = 0.0f64;
    let mut point = vec![0.0; d];
    let mut probe = vec![0.0; d];
    let total: usize = per_dim.pow(d as u32);
    for index in 0..total {
        let mut rem = index;
        for k in (0..d).rev() {
            let j = rem % per_dim;
            rem /= per_dim;
            point[k] =
                domain.lower()[k] + domain.width(k) * j as f64 / (per_dim - 1) as f64;
        }
        let mut norm2 = 0.0;
        for k in 0..d {
            probe.copy_from_slice(&point);
            probe[k] = point[k] + steps[k];
            let hi = f.eval(&probe);
            probe[k] = point[k] - steps[k];
            let lo = f.eval(&probe);
            let g = (hi - lo) / (2.0 * steps[k]);
            norm2 += g * g;
        }
        if norm2 > max_norm2 {
            max_norm2 = norm2;
        }
    }
    max_norm2.sqrt()
}

/// Observation noise distribution plus its private draw stream.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    kind: NoiseKind,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// `eta` uniform on `[-E, E]`; the magnitude bound holds almost surely.
    UniformBounded { e: f64 },
    /// Zero-mean Gaussian with standard deviation `sigma`; unbounded support.
    GaussianUnbounded { sigma: f64 },
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, seed: u64) -> Result<Self> {
        match kind {
            NoiseKind::UniformBounded { e } => {
                if !(e.is_finite() && e >= 0.0) {
                    return Err(Error::invalid_argument(format!(
                        "uniform noise bound E must be non-negative, got {e}"
                    )));
                }
            }
            NoiseKind::GaussianUnbounded { sigma } => {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::invalid_argument(format!(
                        "noise standard deviation must be non-negative, got {sigma}"
                    )));
                }
            }
        }
        Ok(NoiseModel {
            kind,
            rng: derive_rng(seed, "observation-noise", 0),
        })
    }

    pub fn uniform(e: f64, seed: u64) -> Result<Self> {
        NoiseModel::new(NoiseKind::UniformBounded { e }, seed)
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Result<Self> {
        NoiseModel::new(NoiseKind::GaussianUnbounded { sigma }, seed)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn draw(&mut self) -> f64 {
        match self.kind {
            NoiseKind::UniformBounded { e } => {
                if e == 0.0 {
                    0.0
                } else {
                    self.rng.random_range(-e..=e)
                }
            }
            NoiseKind::GaussianUnbounded { sigma } => {
                if sigma == 0.0 {
                    0.0
                } else {
                    Normal::new(0.0, sigma).expect("validated sigma").sample(&mut self.rng)
                }
            }
        }
    }
}

/// `f(x) + eta` with `eta` drawn from the model's stream.
pub fn noisy_eval(f: &RkhsFunction, noise: &mut NoiseModel, x: &[f64]) -> f64 {
    f.eval(x) + noise.draw()
}
