//! Optimization solvers: first-order reference methods, L-BFGS, inexact
//! Newton with line search, and trust region with Steihaug-Toint CG, plus
//! Gauss-Newton variants of the Newton-type methods.

mod cg;
mod config;
mod driver;
mod first_order;
mod forcing;
mod lbfgs;
mod newton;
mod trust_region;

pub use cg::{pcg_steihaug, CgOptions, CgResult, CgStatus, CgTracePoint};
pub use config::{
    ArmijoParams, ForcingChoice, ForcingParams, Schedule, SolverConfig, SolverKind, TrNorm, TrustRegionParams,
};
pub use driver::{run_solver, run_solver_from, BestMetric, EpochRecord, RunResult, StepOutcome, Termination};
pub use first_order::{apply_update, first_order_step, FirstOrderState};
pub use forcing::ForcingState;
pub use lbfgs::{armijo_backtrack, lbfgs_apply, lbfgs_step, Evaluated, LbfgsMemory, LineSearchResult};
pub use newton::newton_ls_step;
pub use trust_region::{acceptance_ratio, tr_step, TrustRegionState};
