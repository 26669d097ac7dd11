//! Closed-form problems with known minimizers, for exercising the solvers
//! without a network.

use crate::error::{Error, Result};
use crate::objective::{MinimizationProblem, OracleCounter};
use crate::tensor::{dot, norm2, DenseMatrix, DenseVector, RngState};

fn check_len(expected: usize, v: &[f64]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: v.len(),
        });
    }
    Ok(())
}

/// `f = (theta - c)^T A (theta - c) / 2` with `A` symmetric positive definite.
/// The Gauss-Newton operator is `A` itself.
#[derive(Debug, Clone)]
pub struct Quadratic {
    a: DenseMatrix,
    center: Vec<f64>,
    counter: OracleCounter,
}

impl Quadratic {
    pub fn new(a: DenseMatrix, center: Vec<f64>) -> Result<Self> {
        if a.asymmetry()? > 1e-12 {
            return Err(Error::NotSymmetric(a.asymmetry()?));
        }
        check_len(a.rows(), &center)?;
        Ok(Quadratic {
            a,
            center,
            counter: OracleCounter::new(1),
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn minimizer(&self) -> &[f64] {
        &self.center
    }

    fn shifted(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_len(self.center.len(), theta)?;
        Ok(theta.iter().zip(&self.center).map(|(t, c)| t - c).collect())
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        let d = self.shifted(theta)?;
        let ad = self.a.matvec(&d)?;
        Ok(0.5 * dot(&d, &ad))
    }
}

impl MinimizationProblem for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn objective(&mut self, theta: &[f64]) -> Result<f64> {
        let f = self.value(theta)?;
        self.counter.record_objective(1);
        Ok(f)
    }

    fn gradient(&mut self, theta: &[f64]) -> Result<DenseVector> {
        let g = self.a.matvec(&self.shifted(theta)?)?;
        self.counter.record_gradient(1);
        Ok(g.into())
    }

    fn hvp_exact(&mut self, _theta: &[f64], v: &[f64]) -> Result<DenseVector> {
        let hv = self.a.matvec(v)?;
        self.counter.record_hvp_exact(1);
        Ok(hv.into())
    }

    fn hvp_gauss_newton(&mut self, _theta: &[f64], v: &[f64]) -> Result<DenseVector> {
        let hv = self.a.matvec(v)?;
        self.counter.record_hvp_gauss_newton(1);
        Ok(hv.into())
    }

    fn update(&mut self, _step: usize) {}

    fn counter(&self) -> &OracleCounter {
        &self.counter
    }

    fn train_loss(&self, theta: &[f64]) -> Result<f64> {
        self.value(theta)
    }
}

/// Two-dimensional Rosenbrock function `(1 - x)^2 + 100 (y - x^2)^2` written
/// as `‖r‖^2` with `r = (1 - x, 10 (y - x^2))`; Gauss-Newton is `2 J^T J`.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    counter: OracleCounter,
}

impl Default for Rosenbrock {
    fn default() -> Self {
        Rosenbrock {
            counter: OracleCounter::new(1),
        }
    }
}

impl Rosenbrock {
    pub const START: [f64; 2] = [-1.2, 1.0];

    pub fn value(theta: &[f64]) -> f64 {
        let (x, y) = (theta[0], theta[1]);
        (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2)
    }

    pub fn grad(theta: &[f64]) -> [f64; 2] {
        let (x, y) = (theta[0], theta[1]);
        [-2.0 * (1.0 - x) - 400.0 * x * (y - x * x), 200.0 * (y - x * x)]
    }

    pub fn hessian(theta: &[f64]) -> [[f64; 2]; 2] {
        let (x, y) = (theta[0], theta[1]);
        [[2.0 - 400.0 * y + 1200.0 * x * x, -400.0 * x], [-400.0 * x, 200.0]]
    }

    pub fn gauss_newton(theta: &[f64]) -> [[f64; 2]; 2] {
        let x = theta[0];
        // J = [[-1, 0], [-20x, 10]]
        [[2.0 * (1.0 + 400.0 * x * x), -400.0 * x], [-400.0 * x, 200.0]]
    }

    fn apply(m: [[f64; 2]; 2], v: &[f64]) -> DenseVector {
        DenseVector::from_vec(vec![m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]])
    }
}

impl MinimizationProblem for Rosenbrock {
    fn dim(&self) -> usize {
        2
    }

    fn objective(&mut self, theta: &[f64]) -> Result<f64> {
        check_len(2, theta)?;
        self.counter.record_objective(1);
        Ok(Self::value(theta))
    }

    fn gradient(&mut self, theta: &[f64]) -> Result<DenseVector> {
        check_len(2, theta)?;
        self.counter.record_gradient(1);
        Ok(DenseVector::from_vec(Self::grad(theta).to_vec()))
    }

    fn hvp_exact(&mut self, theta: &[f64], v: &[f64]) -> Result<DenseVector> {
        check_len(2, theta)?;
        check_len(2, v)?;
        self.counter.record_hvp_exact(1);
        Ok(Self::apply(Self::hessian(theta), v))
    }

    fn hvp_gauss_newton(&mut self, theta: &[f64], v: &[f64]) -> Result<DenseVector> {
        check_len(2, theta)?;
        check_len(2, v)?;
        self.counter.record_hvp_gauss_newton(1);
        Ok(Self::apply(Self::gauss_newton(theta), v))
    }

    fn update(&mut self, _step: usize) {}

    fn counter(&self) -> &OracleCounter {
        &self.counter
    }

    fn train_loss(&self, theta: &[f64]) -> Result<f64> {
        check_len(2, theta)?;
        Ok(Self::value(theta))
    }
}

/// Orthogonal `n x n` matrix from Gram-Schmidt on Gaussian columns.
pub fn random_orthogonal(n: usize, rng: &mut RngState) -> DenseMatrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = rng.gaussian(n).into_vec();
        for _ in 0..2 {
            for c in &cols {
                let proj = dot(&v, c);
                v.iter_mut().zip(c).for_each(|(vi, ci)| *vi -= proj * ci);
            }
        }
        let nv = norm2(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|vi| *vi /= nv);
            cols.push(v);
        }
    }
    DenseMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Symmetric matrix `Q diag(eigenvalues) Q^T` with random orthogonal `Q`.
pub fn random_symmetric(eigenvalues: &[f64], rng: &mut RngState) -> DenseMatrix {
    let n = eigenvalues.len();
    let q = random_orthogonal(n, rng);
    let mut a = DenseMatrix::from_fn(n, n, |i, j| (0..n).map(|k| q.get(i, k) * eigenvalues[k] * q.get(j, k)).sum());
    // Exact symmetry.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }
    a
}

/// Random SPD matrix with eigenvalues spread log-uniformly over `[lo, hi]`.
pub fn random_spd(n: usize, lo: f64, hi: f64, rng: &mut RngState) -> DenseMatrix {
    let eig: Vec<f64> = (0..n).map(|_| lo * (hi / lo).powf(rng.uniform(0.0, 1.0))).collect();
    random_symmetric(&eig, rng)
}
