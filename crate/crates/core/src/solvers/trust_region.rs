use crate::error::Result;
use crate::objective::MinimizationProblem;
use crate::solvers::newton::{hessian_operator, refresh_preconditioner};
use crate::solvers::{
    pcg_steihaug, CgOptions, CgStatus, Evaluated, LbfgsMemory, SolverConfig, StepOutcome, Termination,
    TrustRegionParams,
};
use crate::tensor::axpy_in_place;

/// Radius `Delta_k` and the last acceptance ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionState {
    params: TrustRegionParams,
    delta: f64,
    rho: Option<f64>,
}

impl TrustRegionState {
    pub fn new(params: TrustRegionParams) -> Self {
        TrustRegionState {
            params,
            delta: params.delta0.min(params.delta_max),
            rho: None,
        }
    }

    pub fn radius(&self) -> f64 {
        self.delta
    }

    pub fn last_rho(&self) -> Option<f64> {
        self.rho
    }

    /// Applies one acceptance-ratio transition and returns whether the step is
    /// accepted. A NaN ratio counts as `-inf`.
    pub fn transition(&mut self, rho: f64) -> bool {
        let p = &self.params;
        let rho = if rho.is_nan() { f64::NEG_INFINITY } else { rho };
        self.rho = Some(rho);
        if rho < p.shrink_below {
            self.delta *= p.shrink_factor;
        } else if rho > p.grow_above {
            self.delta = (self.delta * p.grow_factor).min(p.delta_max);
        }
        rho > p.accept
    }

    pub fn below_floor(&self) -> bool {
        self.delta < self.params.radius_floor
    }
}

/// Acceptance ratio `(f - f_trial) / -m(s)`; a non-positive predicted
/// reduction gives `-inf`.
pub fn acceptance_ratio(f: f64, f_trial: f64, model: f64) -> f64 {
    let predicted = -model;
    if !(predicted > 0.0) || !f_trial.is_finite() {
        return f64::NEG_INFINITY;
    }
    (f - f_trial) / predicted
}

/// One trust-region epoch: solves and retries with the same gradient until
/// a step is accepted or the radius drops below its floor.
pub fn tr_step<P: MinimizationProblem + ?Sized>(
    cfg: &SolverConfig,
    state: &mut TrustRegionState,
    precond: &mut LbfgsMemory,
    problem: &mut P,
    theta: &mut [f64],
    at: &Evaluated,
    gauss_newton: bool,
) -> Result<(StepOutcome, Option<Evaluated>)> {
    let mut cg_iters = 0;
    let mut negative_curvature = false;
    loop {
        let opts = CgOptions {
            radius: Some(state.radius()),
            rtol: cfg.tr.inner_rtol,
            max_iters: cfg.cg_max_iters,
            norm: cfg.tr.norm,
        };
        let pc = cfg.precondition.then_some(&*precond);
        let cg = {
            let mut op = hessian_operator(problem, theta, gauss_newton);
            pcg_steihaug(&mut op, &at.g, &opts, pc)?
        };
        cg_iters += cg.iters;
        negative_curvature |= cg.status == CgStatus::NegativeCurvature;
        let trial: Vec<f64> = theta.iter().zip(cg.s.iter()).map(|(t, s)| t + s).collect();
        let f_trial = problem.objective(&trial)?;
        let rho = acceptance_ratio(at.f, f_trial, cg.model);
        let radius_used = state.radius();
        let accepted = state.transition(rho);
        if accepted {
            let g_new = problem.gradient(&trial)?;
            refresh_preconditioner(precond, &cg.s, &at.g, &g_new);
            axpy_in_place(1.0, &cg.s, theta);
            let mut outcome = StepOutcome::accepted(radius_used).with_objective(f_trial);
            outcome.cg_iters = cg_iters;
            outcome.negative_curvature = negative_curvature;
            outcome.rho = Some(rho);
            return Ok((outcome, Some(Evaluated { f: f_trial, g: g_new })));
        }
        if state.below_floor() {
            let mut outcome = StepOutcome::rejected(state.radius(), Termination::TrRadiusFloor);
            outcome.cg_iters = cg_iters;
            outcome.negative_curvature = negative_curvature;
            outcome.rho = Some(rho);
            return Ok((outcome, None));
        }
    }
}
