//! The minimization problem seen by the solvers: objective, gradient, exact
//! and Gauss-Newton Hessian-vector products on the current batch, with every
//! call charged to an [`OracleCounter`].

pub mod analytic;
mod counter;
mod data;
mod loss;
mod training;

pub use counter::{OracleCounter, OracleSnapshot};
pub use data::{BatchLoader, Dataset};
pub use loss::{LossKind, MetricKind};
pub use training::TrainingFunction;

use crate::error::Result;
use crate::tensor::DenseVector;

/// Oracle-call cost of one objective evaluation (a forward pass).
pub const COST_OBJECTIVE: u64 = 1;
/// Forward plus backward pass.
pub const COST_GRADIENT: u64 = 2;
/// Differentiating the gradient computation.
pub const COST_HVP_EXACT: u64 = 4;
/// One forward (J) and one backward (J^T) pass.
pub const COST_HVP_GAUSS_NEWTON: u64 = 2;

/// Interface the solvers drive. Implementations charge their own oracle
/// counter; `train_loss` is free.
pub trait MinimizationProblem {
    fn dim(&self) -> usize;
    fn objective(&mut self, theta: &[f64]) -> Result<f64>;
    fn gradient(&mut self, theta: &[f64]) -> Result<DenseVector>;
    fn hvp_exact(&mut self, theta: &[f64], v: &[f64]) -> Result<DenseVector>;
    fn hvp_gauss_newton(&mut self, theta: &[f64], v: &[f64]) -> Result<DenseVector>;
    /// Called at the start of every solver step (0-based).
    fn update(&mut self, step: usize);
    fn counter(&self) -> &OracleCounter;
    fn steps_per_epoch(&self) -> usize {
        1
    }
    fn is_full_batch(&self) -> bool {
        true
    }
    /// Objective over the whole training set without charging the counter.
    fn train_loss(&self, theta: &[f64]) -> Result<f64>;
}
