//! Equivalence of the factorized GP posterior with an independent dense
//! linear-algebra oracle (LU solve and symmetric eigendecomposition from
//! nalgebra), on random datasets up to n = 200 in up to 3 dimensions.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use safebo::domain::BoxDomain;
use safebo::gp::{fit_posterior, Dataset, GpPosterior};
use safebo::kernel::{KernelFamily, KernelSpec, Lengthscale};
use safebo::rng::derive_rng;

struct Instance {
    kernel: KernelSpec,
    lambda: f64,
    data: Dataset,
    probes: Vec<Vec<f64>>,
}

fn random_instance(rng: &mut ChaCha8Rng, max_n: usize) -> Instance {
    let d = rng.random_range(1..=3);
    let n = rng.random_range(1..=max_n);
    let family = match rng.random_range(0..3) {
        0 => KernelFamily::SquaredExponential,
        1 => KernelFamily::Matern32,
        _ => KernelFamily::Matern52,
    };
    let lengthscale = if rng.random_bool(0.5) {
        Lengthscale::Isotropic(rng.random_range(0.3..2.0))
    } else {
        Lengthscale::PerDimension((0..d).map(|_| rng.random_range(0.3..2.0)).collect())
    };
    let signal_variance = rng.random_range(0.5..2.0);
    let kernel = KernelSpec::new(family, lengthscale, signal_variance).unwrap();
    let lambda = rng.random_range(1e-3..0.1);
    let domain = BoxDomain::new(vec![-1.0; d], vec![1.0; d]).unwrap();
    let draw_point =
        |rng: &mut ChaCha8Rng| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    let inputs: Vec<Vec<f64>> = (0..n).map(|_| draw_point(rng)).collect();
    let outputs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let probes: Vec<Vec<f64>> = (0..10).map(|_| draw_point(rng)).collect();
    Instance {
        kernel,
        lambda,
        data: Dataset::from_parts(domain, inputs, outputs).unwrap(),
        probes,
    }
}

fn dense_gram(kernel: &KernelSpec, inputs: &[Vec<f64>]) -> DMatrix<f64> {
    let n = inputs.len();
    DMatrix::from_fn(n, n, |i, j| kernel.eval(&inputs[i], &inputs[j]).unwrap())
}

/// Dense-solve reference: mean and variance via an LU factorization of
/// `K + lambda I`, entirely independent of the library's Cholesky path.
fn dense_predict(instance: &Instance, x: &[f64]) -> (f64, f64) {
    let inputs = instance.data.inputs();
    let n = inputs.len();
    let mut a = dense_gram(&instance.kernel, inputs);
    for i in 0..n {
        a[(i, i)] += instance.lambda;
    }
    let lu = a.lu();
    let y = DVector::from_iterator(n, instance.data.outputs().iter().cloned());
    let alpha = lu.solve(&y).expect("regularized Gram is invertible");
    let k_vec = DVector::from_iterator(
        n,
        inputs.iter().map(|xi| instance.kernel.eval(x, xi).unwrap()),
    );
    let mean = k_vec.dot(&alpha);
    let solved = lu.solve(&k_vec).expect("regularized Gram is invertible");
    let var = instance.kernel.eval(x, x).unwrap() - k_vec.dot(&solved);
    (mean, var.max(0.0))
}

/// Dense log-determinant reference via the eigenvalues of `K`:
/// `ln det(I + lambda^-1 K) = sum ln(1 + eig_i / lambda)`.
fn dense_logdet(instance: &Instance) -> f64 {
    let gram = dense_gram(&instance.kernel, instance.data.inputs());
    gram.symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&e| (1.0 + e / instance.lambda).ln())
        .sum()
}

fn check_against_oracle(instance: &Instance, post: &GpPosterior, tag: &str) {
    for x in &instance.probes {
        let (mean, std) = post.predict(x).unwrap();
        let (want_mean, want_var) = dense_predict(instance, x);
        assert!(
            (mean - want_mean).abs() <= 1e-8,
            "{tag}: mean off by {:.3e} (n={})",
            (mean - want_mean).abs(),
            instance.data.len()
        );
        assert!(
            (std * std - want_var).abs() <= 1e-8,
            "{tag}: variance off by {:.3e} (n={})",
            (std * std - want_var).abs(),
            instance.data.len()
        );
    }
    let got = post.logdet_regularized_gram();
    let want = dense_logdet(instance);
    assert!(
        (got - want).abs() <= 1e-7 * want.abs().max(1.0),
        "{tag}: logdet {got} vs oracle {want} (n={})",
        instance.data.len()
    );
}

#[test]
fn batch_fit_matches_dense_oracle_on_100_datasets() {
    let mut rng = derive_rng(2024, "gp-oracle-batch", 0);
    for case in 0..100 {
        let instance = random_instance(&mut rng, 200);
        let post = fit_posterior(
            instance.kernel.clone(),
            instance.data.clone(),
            instance.lambda,
        )
        .unwrap();
        check_against_oracle(&instance, &post, &format!("case {case}"));
    }
}

#[test]
fn incremental_fit_matches_dense_oracle() {
    let mut rng = derive_rng(2024, "gp-oracle-incremental", 0);
    for case in 0..20 {
        // > 64 points so the periodic full refactorization is exercised too
        let instance = random_instance(&mut rng, 150);
        let mut post = fit_posterior(
            instance.kernel.clone(),
            Dataset::new(instance.data.domain().clone()),
            instance.lambda,
        )
        .unwrap();
        for (x, &y) in instance.data.inputs().iter().zip(instance.data.outputs()) {
            post = post.add_observation(x.clone(), y).unwrap();
        }
        check_against_oracle(&instance, &post, &format!("incremental case {case}"));
    }
}

#[test]
fn gram_matrices_are_positive_semidefinite() {
    let mut rng = derive_rng(2024, "gram-psd", 0);
    for _ in 0..50 {
        let instance = random_instance(&mut rng, 50);
        let gram = dense_gram(&instance.kernel, instance.data.inputs());
        let trace = gram.trace();
        let min_eig = gram
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(
            min_eig >= -1e-10 * trace,
            "min eigenvalue {min_eig:.3e} too negative for trace {trace:.3e}"
        );
    }
}
