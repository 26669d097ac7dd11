use std::fmt;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::objective::MinimizationProblem;
use crate::solvers::{
    first_order_step, lbfgs_step, newton_ls_step, tr_step, Evaluated, FirstOrderState, ForcingState, LbfgsMemory,
    SolverConfig, SolverKind, TrustRegionState,
};
use crate::tensor::norm2;

/// Why a session stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    None,
    LineSearchFailed,
    TrRadiusFloor,
    MaxEpochs,
    OracleBudget,
    Converged,
    /// A step raised an error (non-finite values, shape errors).
    Failed(String),
}

impl Termination {
    pub fn as_str(&self) -> &str {
        match self {
            Termination::None => "none",
            Termination::LineSearchFailed => "line_search_failed",
            Termination::TrRadiusFloor => "tr_radius_floor",
            Termination::MaxEpochs => "max_epochs",
            Termination::OracleBudget => "oracle_budget",
            Termination::Converged => "converged",
            Termination::Failed(_) => "failed",
        }
    }

    pub fn is_none(&self) -> bool {
        *self == Termination::None
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Failed(msg) => write!(f, "failed: {msg}"),
            other => f.write_str(other.as_str()),
        }
    }
}

/// Result of one solver step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    /// Learning rate, line-search step, forcing term, or trust radius.
    pub internal: f64,
    pub cg_iters: usize,
    pub negative_curvature: bool,
    pub objective: Option<f64>,
    pub rho: Option<f64>,
    pub termination: Termination,
}

impl StepOutcome {
    pub fn accepted(internal: f64) -> Self {
        StepOutcome {
            accepted: true,
            internal,
            cg_iters: 0,
            negative_curvature: false,
            objective: None,
            rho: None,
            termination: Termination::None,
        }
    }

    pub fn rejected(internal: f64, termination: Termination) -> Self {
        StepOutcome {
            accepted: false,
            termination,
            ..StepOutcome::accepted(internal)
        }
    }

    pub fn with_objective(mut self, f: f64) -> Self {
        self.objective = Some(f);
        self
    }
}

/// Per-epoch log line. Counts are deltas over the epoch; `oracle_calls` is
/// cumulative.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub oracle_calls: f64,
    pub train_loss: f64,
    pub test_metric: Option<f64>,
    pub n_obj: u64,
    pub n_grad: u64,
    pub n_hvp: u64,
    pub step_accepted: bool,
    pub solver_internal: f64,
    pub wall_seconds: f64,
    /// Largest CG iteration count of any step in the epoch.
    pub cg_iters: usize,
    pub rho: Option<f64>,
    /// Gradient norm at the end of the epoch when known without extra cost.
    pub grad_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestMetric {
    pub epoch: usize,
    pub metric: f64,
    pub oracle_calls: f64,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub theta: Vec<f64>,
    pub records: Vec<EpochRecord>,
    pub termination: Termination,
    pub best: Option<BestMetric>,
}

/// Mutable solver internals that persist across epochs.
#[derive(Debug, Clone)]
struct SolverState {
    first_order: FirstOrderState,
    lbfgs: LbfgsMemory,
    precond: LbfgsMemory,
    forcing: ForcingState,
    tr: TrustRegionState,
}

/// Runs `cfg.max_epochs` epochs from `theta0`. `monitor(epoch, theta)` returns
/// the test metric for the epoch (or `None`); it is called once per epoch and
/// is not charged to the oracle counter.
pub fn run_solver<P, M>(cfg: &SolverConfig, problem: &mut P, theta0: &[f64], monitor: M) -> RunResult
where
    P: MinimizationProblem + ?Sized,
    M: FnMut(usize, &[f64]) -> Result<Option<f64>>,
{
    run_solver_from(cfg, problem, theta0, 0, monitor)
}

/// As [`run_solver`], numbering epochs from `first_epoch + 1`.
pub fn run_solver_from<P, M>(
    cfg: &SolverConfig,
    problem: &mut P,
    theta0: &[f64],
    first_epoch: usize,
    mut monitor: M,
) -> RunResult
where
    P: MinimizationProblem + ?Sized,
    M: FnMut(usize, &[f64]) -> Result<Option<f64>>,
{
    let mut theta = theta0.to_vec();
    let mut records = Vec::new();
    let mut best: Option<BestMetric> = None;
    let mut termination = Termination::None;
    if cfg.max_epochs == 0 {
        return RunResult {
            theta,
            records,
            termination: Termination::MaxEpochs,
            best,
        };
    }
    let mut state = SolverState {
        first_order: FirstOrderState::new(theta.len()),
        lbfgs: LbfgsMemory::new(cfg.lbfgs_history),
        precond: LbfgsMemory::new(cfg.precond_history),
        forcing: ForcingState::new(cfg.forcing),
        tr: TrustRegionState::new(cfg.tr),
    };
    let steps = problem.steps_per_epoch().max(1);
    let full_batch = problem.is_full_batch();
    let start = Instant::now();
    let mut cache: Option<Evaluated> = None;
    let mut conv_tol: Option<f64> = None;
    let mut prev = problem.counter().snapshot();

    'epochs: for e in 0..cfg.max_epochs {
        let epoch = first_epoch + e + 1;
        let mut last = StepOutcome::accepted(0.0);
        let mut cg_max = 0;
        for j in 0..steps {
            let step = e * steps + j;
            problem.update(step);
            let result = if cfg.kind.is_first_order() {
                let ep = step as f64 / steps as f64;
                first_order_step(cfg, &mut state.first_order, problem, &mut theta, ep)
            } else {
                second_order(cfg, &mut state, problem, &mut theta, &mut cache, full_batch, &mut conv_tol)
            };
            match result {
                Ok(outcome) => {
                    cg_max = cg_max.max(outcome.cg_iters);
                    let stop = !outcome.termination.is_none();
                    last = outcome;
                    if stop {
                        termination = last.termination.clone();
                        break;
                    }
                }
                Err(err) => {
                    termination = Termination::Failed(err.to_string());
                    break 'epochs;
                }
            }
        }

        let snap = problem.counter().snapshot();
        let train_loss = problem.train_loss(&theta).unwrap_or(f64::NAN);
        let test_metric = match monitor(epoch, &theta) {
            Ok(m) => m,
            Err(err) => {
                termination = Termination::Failed(err.to_string());
                None
            }
        };
        let grad_norm = cache.as_ref().map(|c| norm2(&c.g));
        records.push(EpochRecord {
            epoch,
            oracle_calls: snap.calls,
            train_loss,
            test_metric,
            n_obj: snap.n_obj - prev.n_obj,
            n_grad: snap.n_grad - prev.n_grad,
            n_hvp: snap.n_hvp() - prev.n_hvp(),
            step_accepted: last.accepted,
            solver_internal: last.internal,
            wall_seconds: start.elapsed().as_secs_f64(),
            cg_iters: cg_max,
            rho: last.rho,
            grad_norm,
        });
        prev = snap;
        if let Some(m) = test_metric.filter(|m| m.is_finite()) {
            if best.as_ref().is_none_or(|b| m < b.metric) {
                best = Some(BestMetric {
                    epoch,
                    metric: m,
                    oracle_calls: snap.calls,
                    theta: theta.clone(),
                });
            }
        }
        if !termination.is_none() {
            break;
        }
        if cfg.max_oracle_calls.is_some_and(|b| snap.calls >= b) {
            termination = Termination::OracleBudget;
            break;
        }
        if let (Some(gn), Some(tol)) = (grad_norm, conv_tol) {
            if full_batch && gn <= tol {
                termination = Termination::Converged;
                break;
            }
        }
        if !theta.iter().all(|v| v.is_finite()) {
            termination = Termination::Failed("non-finite parameters".into());
            break;
        }
    }
    if termination.is_none() {
        termination = Termination::MaxEpochs;
    }
    RunResult {
        theta,
        records,
        termination,
        best,
    }
}

fn second_order<P: MinimizationProblem + ?Sized>(
    cfg: &SolverConfig,
    state: &mut SolverState,
    problem: &mut P,
    theta: &mut [f64],
    cache: &mut Option<Evaluated>,
    full_batch: bool,
    conv_tol: &mut Option<f64>,
) -> Result<StepOutcome> {
    let at = match cache.take().filter(|_| full_batch) {
        Some(at) => at,
        None => {
            let f = problem.objective(theta)?;
            let g = problem.gradient(theta)?;
            Evaluated { f, g }
        }
    };
    if !at.f.is_finite() || !at.g.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("objective or gradient".into()));
    }
    let g_norm = norm2(&at.g);
    let tol = *conv_tol.get_or_insert(cfg.grad_rtol * g_norm.max(1.0));
    if full_batch && g_norm <= tol {
        *cache = Some(at);
        return Ok(StepOutcome::rejected(0.0, Termination::Converged));
    }
    let gn = cfg.kind.uses_gauss_newton();
    let (outcome, next) = match cfg.kind {
        SolverKind::Lbfgs => lbfgs_step(cfg, &mut state.lbfgs, problem, theta, &at)?,
        SolverKind::NewtonLs | SolverKind::NewtonLsGn => {
            newton_ls_step(cfg, &mut state.forcing, &mut state.precond, problem, theta, &at, gn)?
        }
        SolverKind::TrustRegion | SolverKind::TrustRegionGn => {
            tr_step(cfg, &mut state.tr, &mut state.precond, problem, theta, &at, gn)?
        }
        other => unreachable!("{other} is first order"),
    };
    *cache = Some(next.unwrap_or(at));
    Ok(outcome)
}
