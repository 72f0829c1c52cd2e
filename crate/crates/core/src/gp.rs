//! Exact Gaussian process regression on top of a hand-rolled Cholesky solve.
//!
//! The posterior for data `(x_1..x_t, y_1..y_t)` under kernel `k` and
//! regularizer `lambda` is
//!
//! ```text
//! mu(x)     = k_t(x)' (K_t + lambda I)^-1 y
//! sigma2(x) = k(x, x) - k_t(x)' (K_t + lambda I)^-1 k_t(x)
//! ```
//!
//! `(K_t + lambda I)` is kept factorized as `L L'` with `L` lower triangular.
//! Appending an observation extends `L` by one row (a forward solve plus a
//! scalar pivot); a full refactorization runs every [`REFACTOR_INTERVAL`]
//! appends to bound drift.

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Full refactorization cadence for incrementally extended factors.
const REFACTOR_INTERVAL: usize = 64;

/// Predictive variances more negative than this indicate an ill-conditioned
/// solve rather than benign rounding, and raise a numeric error.
const VARIANCE_CLAMP: f64 = 1e-12;

/// Ordered noisy observations inside a box domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    domain: BoxDomain,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

impl Dataset {
    pub fn new(domain: BoxDomain) -> Self {
        Dataset {
            domain,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn from_parts(domain: BoxDomain, inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        let mut data = Dataset::new(domain);
        if inputs.len() != outputs.len() {
            return Err(Error::invalid_argument(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        for (x, y) in inputs.into_iter().zip(outputs) {
            data.push(x, y)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if x.len() != self.domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                got: x.len(),
            });
        }
        if !self.domain.contains(&x) {
            return Err(Error::invalid_argument(format!(
                "input {x:?} lies outside the domain box"
            )));
        }
        if !y.is_finite() {
            return Err(Error::invalid_argument(format!("non-finite observation {y}")));
        }
        self.inputs.push(x);
        self.outputs.push(y);
        Ok(())
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Lower-triangular Cholesky factor in packed row-major storage
/// (row `i` holds `i + 1` entries starting at `i (i + 1) / 2`).
#[derive(Debug, Clone, PartialEq)]
struct CholeskyFactor {
    n: usize,
    data: Vec<f64>,
}

impl CholeskyFactor {
    fn empty() -> Self {
        CholeskyFactor { n: 0, data: Vec::new() }
    }

    fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    fn diag(&self, i: usize) -> f64 {
        self.data[i * (i + 1) / 2 + i]
    }

    /// Factorizes a full row-major symmetric positive definite matrix.
    fn factorize(a: &[f64], n: usize) -> Result<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = CholeskyFactor {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        };
        for i in 0..n {
            for j in 0..=i {
                let ri = i * (i + 1) / 2;
                let rj = j * (j + 1) / 2;
                let mut sum = a[i * n + j];
                for k in 0..j {
                    sum -= l.data[ri + k] * l.data[rj + k];
                }
                if i == j {
                    if !(sum.is_finite() && sum > 0.0) {
                        return Err(factorization_error(a, n, i, sum));
                    }
                    l.data[ri + j] = sum.sqrt();
                } else {
                    l.data[ri + j] = sum / l.data[rj + j];
                }
            }
        }
        Ok(l)
    }

    /// Solves `L z = b`.
    fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        for i in 0..self.n {
            let row = self.row(i);
            let mut sum = b[i];
            for k in 0..i {
                sum -= row[k] * z[k];
            }
            z[i] = sum / row[i];
        }
        z
    }

    /// Solves `(L L') x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.forward_solve(b);
        for i in (0..self.n).rev() {
            let mut sum = x[i];
            for k in i + 1..self.n {
                sum -= self.row(k)[i] * x[k];
            }
            x[i] = sum / self.diag(i);
        }
        x
    }

    /// Extends the factor by one row given the new covariance column `k_new`
    /// (length `n`) and the regularized diagonal entry `pivot`. Fails if the
    /// computed pivot is not positive; callers refactorize from scratch then.
    fn extend(&mut self, k_new: &[f64], pivot: f64) -> Result<()> {
        debug_assert_eq!(k_new.len(), self.n);
        let c = self.forward_solve(k_new);
        let d2 = pivot - c.iter().map(|v| v * v).sum::<f64>();
        if !(d2.is_finite() && d2 > 0.0) {
            return Err(Error::numeric(format!(
                "rank-one extension pivot {d2:.3e} not positive at n={}",
                self.n
            )));
        }
        self.data.extend_from_slice(&c);
        self.data.push(d2.sqrt());
        self.n += 1;
        Ok(())
    }

    /// `ln det(L L') = 2 sum_i ln L_ii`.
    fn logdet(&self) -> f64 {
        (0..self.n).map(|i| self.diag(i).ln()).sum::<f64>() * 2.0
    }
}

fn factorization_error(a: &[f64], n: usize, pivot_index: usize, pivot: f64) -> Error {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        lo = lo.min(a[i * n + i]);
        hi = hi.max(a[i * n + i]);
    }
    Error::numeric(format!(
        "Cholesky factorization failed at pivot {pivot_index} (value {pivot:.3e}); \
         n={n}, diagonal range [{lo:.3e}, {hi:.3e}]"
    ))
}

/// Immutable GP posterior snapshot. [`GpPosterior::add_observation`] returns a
/// new snapshot; existing ones stay valid and are safe to share across threads.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    kernel: KernelSpec,
    data: Dataset,
    lambda: f64,
    chol: CholeskyFactor,
    alpha: Vec<f64>,
    appends_since_refactor: usize,
}

impl GpPosterior {
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn num_observations(&self) -> usize {
        self.data.len()
    }

    fn cross_covariances(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .inputs()
            .iter()
            .map(|xi| self.kernel.eval_unchecked(x, xi))
            .collect()
    }

    /// Posterior mean and standard deviation at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.kernel.check_dim(x)?;
        if x.len() != self.data.domain().dim() {
            return Err(Error::DimensionMismatch {
                expected: self.data.domain().dim(),
                got: x.len(),
            });
        }
        if !self.data.domain().contains(x) {
            log::debug!("predict called outside the domain box at {x:?}");
        }
        let prior_var = self.kernel.signal_variance();
        if self.data.is_empty() {
            return Ok((0.0, prior_var.sqrt()));
        }
        let k_vec = self.cross_covariances(x);
        let mean = dot(&k_vec, &self.alpha);
        let c = self.chol.forward_solve(&k_vec);
        let mut var = prior_var - c.iter().map(|v| v * v).sum::<f64>();
        if var < 0.0 {
            if var < -VARIANCE_CLAMP {
                return Err(Error::numeric(format!(
                    "predictive variance {var:.3e} below clamp threshold; solve is ill-conditioned"
                )));
            }
            var = 0.0;
        }
        var = var.min(prior_var);
        Ok((mean, var.sqrt()))
    }

    /// New posterior with `(x, y)` appended. Uses a rank-one factor extension;
    /// falls back to (and periodically forces) a full refactorization.
    pub fn add_observation(&self, x: Vec<f64>, y: f64) -> Result<GpPosterior> {
        let mut next = self.clone();
        let k_new = next.cross_covariances(&x);
        let pivot = next.kernel.eval(&x, &x)? + next.lambda;
        next.data.push(x, y)?;
        next.appends_since_refactor += 1;
        let extended = next.appends_since_refactor < REFACTOR_INTERVAL
            && next.chol.extend(&k_new, pivot).is_ok();
        if !extended {
            next.chol = factorize_regularized_gram(&next.kernel, &next.data, next.lambda)?;
            next.appends_since_refactor = 0;
        }
        next.alpha = next.chol.solve(next.data.outputs());
        Ok(next)
    }

    /// `ln det(I + lambda^-1 K_t)`, the information-capacity term consumed by
    /// RKHS-norm-based confidence scalings. Zero for an empty dataset.
    pub fn logdet_regularized_gram(&self) -> f64 {
        let t = self.data.len();
        if t == 0 {
            return 0.0;
        }
        (self.chol.logdet() - t as f64 * self.lambda.ln()).max(0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn factorize_regularized_gram(
    kernel: &KernelSpec,
    data: &Dataset,
    lambda: f64,
) -> Result<CholeskyFactor> {
    let n = data.len();
    let mut gram = kernel.gram(data.inputs());
    for i in 0..n {
        gram[i * n + i] += lambda;
    }
    CholeskyFactor::factorize(&gram, n)
}

/// Fits the posterior for `data` under `kernel` with regularizer `lambda > 0`.
/// An empty dataset yields the prior (`mu = 0`, `sigma2 = k(x, x)`).
pub fn fit_posterior(kernel: KernelSpec, data: Dataset, lambda: f64) -> Result<GpPosterior> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid_argument(format!(
            "regularizer lambda must be positive and finite, got {lambda}"
        )));
    }
    for x in data.inputs() {
        kernel.check_dim(x)?;
    }
    let chol = if data.is_empty() {
        CholeskyFactor::empty()
    } else {
        factorize_regularized_gram(&kernel, &data, lambda)?
    };
    let alpha = chol.solve(data.outputs());
    Ok(GpPosterior {
        kernel,
        data,
        lambda,
        chol,
        alpha,
        appends_since_refactor: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;

    fn unit_interval() -> BoxDomain {
        BoxDomain::interval(-2.0, 2.0).unwrap()
    }

    fn sqexp() -> KernelSpec {
        KernelSpec::isotropic(KernelFamily::SquaredExponential, 1.0, 1.0).unwrap()
    }

    fn fit(points: &[(f64, f64)], lambda: f64) -> GpPosterior {
        let data = Dataset::from_parts(
            unit_interval(),
            points.iter().map(|&(x, _)| vec![x]).collect(),
            points.iter().map(|&(_, y)| y).collect(),
        )
        .unwrap();
        fit_posterior(sqexp(), data, lambda).unwrap()
    }

    #[test]
    fn prior_predicts_zero_mean_signal_std() {
        let post = fit_posterior(sqexp(), Dataset::new(unit_interval()), 0.01).unwrap();
        let (mu, sigma) = post.predict(&[0.37]).unwrap();
        assert_eq!(mu, 0.0);
        assert_eq!(sigma, 1.0);
        assert_eq!(post.logdet_regularized_gram(), 0.0);
    }

    #[test]
    fn single_observation_closed_form() {
        // 1x1 solve: mu(0) = y k / (k + lambda), sigma2(0) = k - k^2 / (k + lambda)
        let post = fit(&[(0.0, 1.0)], 0.01);
        let (mu, sigma) = post.predict(&[0.0]).unwrap();
        assert!((mu - 1.0 / 1.01).abs() < 1e-12);
        assert!((sigma * sigma - (1.0 - 1.0 / 1.01)).abs() < 1e-12);
        assert!((mu - 0.990099).abs() < 1e-6);
        assert!((sigma * sigma - 0.009901).abs() < 1e-6);
    }

    #[test]
    fn interpolates_at_small_lambda() {
        let pts = [(-1.5, 0.3), (-0.4, -1.1), (0.2, 0.8), (1.3, 0.5)];
        let post = fit(&pts, 1e-8);
        for (x, y) in pts {
            let (mu, _) = post.predict(&[x]).unwrap();
            assert!((mu - y).abs() < 1e-4, "mu({x}) = {mu}, want {y}");
        }
    }

    #[test]
    fn symmetric_data_gives_symmetric_mean() {
        let post = fit(&[(-1.0, 0.7), (1.0, 0.7)], 0.01);
        let (left, _) = post.predict(&[-0.4]).unwrap();
        let (right, _) = post.predict(&[0.4]).unwrap();
        assert!((left - right).abs() < 1e-12);
    }

    #[test]
    fn add_to_empty_matches_single_point_fit() {
        let prior = fit_posterior(sqexp(), Dataset::new(unit_interval()), 0.01).unwrap();
        let post = prior.add_observation(vec![0.0], 1.0).unwrap();
        let reference = fit(&[(0.0, 1.0)], 0.01);
        for x in [-1.0, 0.0, 0.5, 1.7] {
            let (m1, s1) = post.predict(&[x]).unwrap();
            let (m2, s2) = reference.predict(&[x]).unwrap();
            assert!((m1 - m2).abs() < 1e-12);
            assert!((s1 - s2).abs() < 1e-12);
        }
        // the snapshot we extended is untouched
        assert_eq!(prior.num_observations(), 0);
    }

    #[test]
    fn incremental_matches_batch_fit() {
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let x = -1.8 + 0.37 * i as f64;
                (x, (2.1 * x).sin())
            })
            .collect();
        let mut post = fit_posterior(sqexp(), Dataset::new(unit_interval()), 0.01).unwrap();
        for &(x, y) in &pts {
            post = post.add_observation(vec![x], y).unwrap();
        }
        let batch = fit(&pts, 0.01);
        for i in 0..20 {
            let x = -2.0 + 4.0 * i as f64 / 19.0;
            let (m1, s1) = post.predict(&[x]).unwrap();
            let (m2, s2) = batch.predict(&[x]).unwrap();
            assert!((m1 - m2).abs() < 1e-8, "mean mismatch at {x}");
            assert!((s1 - s2).abs() < 1e-8, "std mismatch at {x}");
        }
    }

    #[test]
    fn incremental_matches_batch_across_refactor_boundary() {
        // 70 appends crosses the periodic full refactorization
        let pts: Vec<(f64, f64)> = (0..70)
            .map(|i| {
                let x = -2.0 + 4.0 * (i as f64 + 0.5) / 70.0;
                (x, (3.0 * x).cos() + 0.1 * x)
            })
            .collect();
        let mut post = fit_posterior(sqexp(), Dataset::new(unit_interval()), 0.01).unwrap();
        for &(x, y) in &pts {
            post = post.add_observation(vec![x], y).unwrap();
        }
        let batch = fit(&pts, 0.01);
        for i in 0..20 {
            let x = -2.0 + 4.0 * i as f64 / 19.0;
            let (m1, s1) = post.predict(&[x]).unwrap();
            let (m2, s2) = batch.predict(&[x]).unwrap();
            assert!((m1 - m2).abs() < 1e-8);
            assert!((s1 - s2).abs() < 1e-8);
        }
    }

    #[test]
    fn variance_drops_at_added_point() {
        let post = fit(&[(-1.0, 0.2)], 0.01);
        let x = vec![0.9];
        let (_, before) = post.predict(&x).unwrap();
        let next = post.add_observation(x.clone(), 0.4).unwrap();
        let (_, after) = next.predict(&x).unwrap();
        assert!(after < before);
    }

    #[test]
    fn logdet_single_observation() {
        // ln det(1 + k / lambda) with k = 1, lambda = 0.01
        let post = fit(&[(0.0, 1.0)], 0.01);
        let got = post.logdet_regularized_gram();
        assert!((got - 101.0f64.ln()).abs() < 1e-12);
        assert!((got - 4.61512).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_lambda() {
        assert!(fit_posterior(sqexp(), Dataset::new(unit_interval()), 0.0).is_err());
        assert!(fit_posterior(sqexp(), Dataset::new(unit_interval()), -1.0).is_err());
    }

    #[test]
    fn dataset_rejects_out_of_box_and_mismatched_inputs() {
        let mut data = Dataset::new(unit_interval());
        assert!(data.push(vec![5.0], 0.0).is_err());
        assert!(data.push(vec![0.0, 0.0], 0.0).is_err());
        assert!(data.push(vec![0.0], f64::NAN).is_err());
        assert!(data.push(vec![0.0], 1.0).is_ok());
    }
}
