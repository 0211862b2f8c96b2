//! Noiseless Gaussian-process regression with a zero-mean prior.
//!
//! `μ* = K(x*, X) K(X, X)⁻¹ Y` and `σ² = K(x*, x*) − K(x*, X) K(X, X)⁻¹ K(X, x*)`,
//! solved through a Cholesky factor of `K(X, X) + jitter·I`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::TheoryError;

pub const DEFAULT_JITTER: f64 = 1e-9;

pub trait Kernel: Send + Sync {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64;
}

/// `variance · exp(−‖a − b‖² / (2·length_scale²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rbf {
    pub length_scale: f64,
    pub variance: f64,
}

impl Rbf {
    pub fn new(length_scale: f64, variance: f64) -> Result<Self, TheoryError> {
        if !(length_scale > 0.0 && variance > 0.0) || !length_scale.is_finite() || !variance.is_finite() {
            return Err(TheoryError::Model(format!(
                "RBF needs positive finite length scale and variance, got {length_scale} and {variance}"
            )));
        }
        Ok(Self { length_scale, variance })
    }
}

impl Default for Rbf {
    fn default() -> Self {
        Self {
            length_scale: 1.0,
            variance: 1.0,
        }
    }
}

impl Kernel for Rbf {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        self.variance * (-sq / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

impl<F> Kernel for F
where
    F: Fn(&[f64], &[f64]) -> f64 + Send + Sync,
{
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        self(a, b)
    }
}

pub struct GpModel<K: Kernel> {
    kernel: K,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    jitter: f64,
    factor: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
}

impl<K: Kernel> std::fmt::Debug for GpModel<K> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GpModel")
            .field("inputs", &self.inputs)
            .field("targets", &self.targets)
            .field("jitter", &self.jitter)
            .finish_non_exhaustive()
    }
}

impl<K: Kernel> GpModel<K> {
    pub fn fit(kernel: K, inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self, TheoryError> {
        Self::fit_with_jitter(kernel, inputs, targets, DEFAULT_JITTER)
    }

    pub fn fit_with_jitter(
        kernel: K,
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        jitter: f64,
    ) -> Result<Self, TheoryError> {
        if inputs.len() != targets.len() {
            return Err(TheoryError::Shape(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if !(jitter >= 0.0) || !jitter.is_finite() {
            return Err(TheoryError::Model(format!("jitter must be non-negative, got {jitter}")));
        }
        if inputs.iter().flatten().chain(&targets).any(|v| !v.is_finite()) {
            return Err(TheoryError::NonFinite("GP training data"));
        }
        let n = inputs.len();
        if n == 0 {
            return Ok(Self {
                kernel,
                inputs,
                targets,
                jitter,
                factor: None,
                alpha: DVector::zeros(0),
            });
        }
        let gram = DMatrix::from_fn(n, n, |i, j| {
            kernel.eval(&inputs[i], &inputs[j]) + if i == j { jitter } else { 0.0 }
        });
        let factor = gram.cholesky().ok_or(TheoryError::Factorization)?;
        let alpha = factor.solve(&DVector::from_column_slice(&targets));
        Ok(Self {
            kernel,
            inputs,
            targets,
            jitter,
            factor: Some(factor),
            alpha,
        })
    }

    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `(mean, variance)` at `query`; variance is floored at zero.
    pub fn posterior(&self, query: &[f64]) -> (f64, f64) {
        let prior = self.kernel.eval(query, query);
        let Some(factor) = &self.factor else {
            return (0.0, prior.max(0.0));
        };
        let cross = DVector::from_iterator(self.inputs.len(), self.inputs.iter().map(|x| self.kernel.eval(query, x)));
        let mean = cross.dot(&self.alpha);
        let v = factor
            .l_dirty()
            .solve_lower_triangular(&cross)
            .expect("Cholesky factor has a positive diagonal");
        (mean, (prior - v.norm_squared()).max(0.0))
    }
}

pub fn gp_posterior<K: Kernel>(model: &GpModel<K>, query: &[f64]) -> (f64, f64) {
    model.posterior(query)
}

/// Query indices from hardest (largest variance) to easiest, ties in input order.
pub fn gp_difficulty_order<K: Kernel>(model: &GpModel<K>, queries: &[Vec<f64>]) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = queries.iter().map(|q| model.posterior(q).1).enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Explicit inverse by Gauss-Jordan elimination with partial pivoting.
    fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        let n = a.len();
        let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let d = a[col][col];
            for j in 0..n {
                a[col][j] /= d;
                inv[col][j] /= d;
            }
            for i in 0..n {
                if i != col {
                    let f = a[i][col];
                    for j in 0..n {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
        inv
    }

    fn oracle(k: &Rbf, xs: &[Vec<f64>], ys: &[f64], jitter: f64, q: &[f64]) -> (f64, f64) {
        let n = xs.len();
        let gram = (0..n)
            .map(|i| (0..n).map(|j| k.eval(&xs[i], &xs[j]) + if i == j { jitter } else { 0.0 }).collect())
            .collect();
        let inv = invert(gram);
        let c: Vec<f64> = xs.iter().map(|x| k.eval(q, x)).collect();
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| inv[i][j] * c[j]).sum()).collect();
        let mean = w.iter().zip(ys).map(|(a, b)| a * b).sum();
        let var = k.eval(q, q) - w.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>();
        (mean, var)
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
    }

    #[test]
    fn empty_training_set_is_the_prior() {
        let m = GpModel::fit(Rbf::new(0.5, 2.0).unwrap(), vec![], vec![]).unwrap();
        assert_eq!(m.posterior(&[0.3]), (0.0, 2.0));
    }

    #[test]
    fn single_point_closed_form() {
        let k = Rbf::default();
        let m = GpModel::fit_with_jitter(k, vec![vec![0.0]], vec![2.5], 0.0).unwrap();
        let q = [0.7];
        let kq = k.eval(&q, &[0.0]);
        let (mean, var) = m.posterior(&q);
        assert!((mean - kq * 2.5).abs() < 1e-15);
        assert!((var - (1.0 - kq * kq)).abs() < 1e-15);
        let (mean, var) = m.posterior(&[0.0]);
        assert!((mean - 2.5).abs() < 1e-15 && var == 0.0);
    }

    #[test]
    fn interpolates_training_points_with_default_jitter() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs = random_points(&mut rng, 6, 2);
        let ys: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = GpModel::fit(Rbf::default(), xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            let (mean, var) = m.posterior(x);
            assert!((mean - y).abs() < 1e-6);
            assert!(var < 1e-8);
        }
    }

    #[test]
    fn matches_explicit_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=8 {
            let k = Rbf::new(rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)).unwrap();
            let xs = random_points(&mut rng, n, 2);
            let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let jitter = 1e-6;
            let m = GpModel::fit_with_jitter(k, xs.clone(), ys.clone(), jitter).unwrap();
            for q in random_points(&mut rng, 5, 2) {
                let (mean, var) = m.posterior(&q);
                let (om, ov) = oracle(&k, &xs, &ys, jitter, &q);
                assert!((mean - om).abs() < 1e-8, "n = {n}: {mean} vs {om}");
                assert!((var - ov.max(0.0)).abs() < 1e-8, "n = {n}: {var} vs {ov}");
            }
        }
    }

    #[test]
    fn extra_training_points_never_raise_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let k = Rbf::default();
        let xs = random_points(&mut rng, 7, 1);
        let queries = random_points(&mut rng, 20, 1);
        let mut prev = vec![f64::INFINITY; queries.len()];
        for n in 0..=xs.len() {
            let m = GpModel::fit(k, xs[..n].to_vec(), vec![0.0; n]).unwrap();
            for (q, p) in queries.iter().zip(prev.iter_mut()) {
                let var = m.posterior(q).1;
                assert!(var >= 0.0);
                assert!(var <= *p + 1e-8);
                *p = var;
            }
        }
    }

    #[test]
    fn difficulty_order() {
        let m = GpModel::fit(Rbf::default(), vec![vec![0.0]], vec![1.0]).unwrap();
        let order = gp_difficulty_order(&m, &[vec![0.1], vec![10.0], vec![0.0]]);
        let idx: Vec<usize> = order.iter().map(|r| r.0).collect();
        assert_eq!(idx, vec![1, 0, 2]);
        assert_eq!(gp_difficulty_order(&m, &[vec![3.0]]).len(), 1);
        for pair in [[5.0, -5.0], [-5.0, 5.0]] {
            let ties = gp_difficulty_order(&m, &[vec![pair[0]], vec![pair[1]]]);
            assert_eq!(ties[0].1, ties[1].1);
            assert_eq!(ties.iter().map(|r| r.0).collect::<Vec<_>>(), vec![0, 1]);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let k = Rbf::default();
        assert!(matches!(
            GpModel::fit(k, vec![vec![0.0]], vec![]),
            Err(TheoryError::Shape(_))
        ));
        let indefinite = |a: &[f64], b: &[f64]| if a == b { 1.0 } else { 2.0 };
        assert!(matches!(
            GpModel::fit(indefinite, vec![vec![0.0], vec![1.0]], vec![0.0, 0.0]),
            Err(TheoryError::Factorization)
        ));
        assert!(Rbf::new(0.0, 1.0).is_err());
    }
}
