//! Matrix-free second-order optimization for small dense surrogate networks.
//!
//! The crate is split along the training pipeline:
//!
//! - [`tensor`]: dense vectors/matrices, parameter flattening, seeded RNG and a
//!   Jacobi eigensolver.
//! - [`network`]: MLPs and the composite branch×POD and Green's-kernel models,
//!   with exact reverse-mode, forward-mode and forward-over-reverse derivatives.
//! - [`objective`]: the training function (objective, gradient, exact and
//!   Gauss-Newton Hessian-vector products) with oracle-call accounting.
//! - [`solvers`]: first-order reference methods, L-BFGS, inexact Newton with line
//!   search, and trust region with Steihaug-Toint CG.
//! - [`problems`]: desk-scale surrogate datasets (advection, reaction-diffusion,
//!   1D Poisson) and the PMLD file format.

pub mod error;
pub mod network;
pub mod objective;
pub mod problems;
pub mod solvers;
pub mod tensor;

pub use error::{Error, Result};
