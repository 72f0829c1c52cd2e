//! Stationary covariance functions.
//!
//! Each kernel is parameterized by a signal variance and one lengthscale per
//! input dimension (a single isotropic lengthscale is also accepted). The
//! scaled distance is `r = ||(x - x') / lengthscale||_2`, and
//!
//! * squared exponential: `sf2 * exp(-r^2 / 2)`
//! * Matern 3/2: `sf2 * (1 + sqrt(3) r) * exp(-sqrt(3) r)`
//! * Matern 5/2: `sf2 * (1 + sqrt(5) r + 5 r^2 / 3) * exp(-sqrt(5) r)`

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    SquaredExponential,
    Matern32,
    Matern52,
}

impl KernelFamily {
    /// Stable textual name, also used by config files and function records.
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::SquaredExponential => "squared-exponential",
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Matern52 => "matern52",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "squared-exponential" => Ok(KernelFamily::SquaredExponential),
            "matern32" => Ok(KernelFamily::Matern32),
            "matern52" => Ok(KernelFamily::Matern52),
            other => Err(Error::invalid_argument(format!(
                "unknown kernel family {other:?} (expected squared-exponential, matern32 or matern52)"
            ))),
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Lengthscale configuration: one value shared by all dimensions, or one per
/// dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum Lengthscale {
    Isotropic(f64),
    PerDimension(Vec<f64>),
}

impl Lengthscale {
    fn validate(&self) -> Result<()> {
        let all = match self {
            Lengthscale::Isotropic(l) => std::slice::from_ref(l),
            Lengthscale::PerDimension(v) => v.as_slice(),
        };
        if all.is_empty() {
            return Err(Error::invalid_argument("lengthscale list must be nonempty"));
        }
        for l in all {
            if !(l.is_finite() && *l > 0.0) {
                return Err(Error::invalid_argument(format!(
                    "lengthscale must be positive and finite, got {l}"
                )));
            }
        }
        Ok(())
    }

    /// Scale factor for dimension `d`.
    fn at(&self, d: usize) -> f64 {
        match self {
            Lengthscale::Isotropic(l) => *l,
            Lengthscale::PerDimension(v) => v[d],
        }
    }

    /// `None` for isotropic scales (any dimension is acceptable).
    fn required_dim(&self) -> Option<usize> {
        match self {
            Lengthscale::Isotropic(_) => None,
            Lengthscale::PerDimension(v) => Some(v.len()),
        }
    }
}

/// A covariance function family together with its hyperparameters. Defines the
/// RKHS in which synthetic target functions live.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    lengthscale: Lengthscale,
    signal_variance: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscale: Lengthscale, signal_variance: f64) -> Result<Self> {
        lengthscale.validate()?;
        if !(signal_variance.is_finite() && signal_variance > 0.0) {
            return Err(Error::invalid_argument(format!(
                "signal variance must be positive and finite, got {signal_variance}"
            )));
        }
        Ok(KernelSpec {
            family,
            lengthscale,
            signal_variance,
        })
    }

    /// Isotropic kernel with a single lengthscale for all dimensions.
    pub fn isotropic(family: KernelFamily, lengthscale: f64, signal_variance: f64) -> Result<Self> {
        KernelSpec::new(family, Lengthscale::Isotropic(lengthscale), signal_variance)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn lengthscale(&self) -> &Lengthscale {
        &self.lengthscale
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    /// Prior standard deviation `sqrt(k(x, x))`.
    pub fn signal_std(&self) -> f64 {
        self.signal_variance.sqrt()
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if let Some(d) = self.lengthscale.required_dim() {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: x.len(),
                });
            }
        }
        if x.is_empty() {
            return Err(Error::invalid_argument("points must have at least one coordinate"));
        }
        Ok(())
    }

    /// Evaluates `k(x, x2)`.
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(x2)?;
        if x.len() != x2.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: x2.len(),
            });
        }
        Ok(self.eval_unchecked(x, x2))
    }

    /// `eval` without dimension checks, for inner loops over validated data.
    pub(crate) fn eval_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for d in 0..x.len() {
            let z = (x[d] - x2[d]) / self.lengthscale.at(d);
            r2 += z * z;
        }
        let sf2 = self.signal_variance;
        match self.family {
            KernelFamily::SquaredExponential => sf2 * (-0.5 * r2).exp(),
            KernelFamily::Matern32 => {
                let s = (3.0 * r2).sqrt();
                sf2 * (1.0 + s) * (-s).exp()
            }
            KernelFamily::Matern52 => {
                let s = (5.0 * r2).sqrt();
                sf2 * (1.0 + s + 5.0 * r2 / 3.0) * (-s).exp()
            }
        }
    }

    /// Dense Gram matrix in row-major order, `n x n` for `n` points.
    pub(crate) fn gram(&self, points: &[Vec<f64>]) -> Vec<f64> {
        let n = points.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval_unchecked(&points[i], &points[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}

/// Evaluates the covariance `k(x, x2)` under `spec`.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], x2: &[f64]) -> Result<f64> {
    spec.eval(x, x2)
}
