use crate::error::Result;
use crate::objective::MinimizationProblem;
use crate::solvers::{
    armijo_backtrack, pcg_steihaug, CgOptions, Evaluated, ForcingState, LbfgsMemory, SolverConfig, StepOutcome,
    Termination,
};
use crate::tensor::{axpy_in_place, dot, norm2, DenseVector};

/// Operator `v -> H v` with the exact or Gauss-Newton Hessian at `theta`.
pub(crate) fn hessian_operator<'a, P: MinimizationProblem + ?Sized>(
    problem: &'a mut P,
    theta: &'a [f64],
    gauss_newton: bool,
) -> impl FnMut(&[f64]) -> Result<DenseVector> + 'a {
    move |v| {
        if gauss_newton {
            problem.hvp_gauss_newton(theta, v)
        } else {
            problem.hvp_exact(theta, v)
        }
    }
}

/// Records the outer-iteration pair in the preconditioner memory, resetting it
/// when the pair fails the curvature check.
pub(crate) fn refresh_preconditioner(precond: &mut LbfgsMemory, s: &[f64], g_old: &[f64], g_new: &[f64]) {
    let y: Vec<f64> = g_new.iter().zip(g_old).map(|(a, b)| a - b).collect();
    if !precond.push(DenseVector::from_vec(s.to_vec()), DenseVector::from_vec(y)) {
        precond.clear();
    }
}

/// One inexact Newton iteration with Armijo backtracking.
pub fn newton_ls_step<P: MinimizationProblem + ?Sized>(
    cfg: &SolverConfig,
    forcing: &mut ForcingState,
    precond: &mut LbfgsMemory,
    problem: &mut P,
    theta: &mut [f64],
    at: &Evaluated,
    gauss_newton: bool,
) -> Result<(StepOutcome, Option<Evaluated>)> {
    let nu = forcing.next(norm2(&at.g));
    let opts = CgOptions {
        radius: None,
        rtol: nu,
        max_iters: cfg.cg_max_iters,
        norm: cfg.tr.norm,
    };
    let pc = cfg.precondition.then_some(&*precond);
    let cg = {
        let mut op = hessian_operator(problem, theta, gauss_newton);
        pcg_steihaug(&mut op, &at.g, &opts, pc)?
    };
    forcing.record_linear_residual(cg.residual_norm);
    let mut d = cg.s;
    let mut gd = dot(&at.g, &d);
    if !(gd < 0.0) {
        d = at.g.iter().map(|v| -v).collect();
        gd = dot(&at.g, &d);
    }
    let ls = armijo_backtrack(problem, &cfg.armijo, theta, at.f, gd, &d)?;
    let mut outcome = StepOutcome::accepted(nu);
    outcome.cg_iters = cg.iters;
    outcome.negative_curvature = cg.status == crate::solvers::CgStatus::NegativeCurvature;
    if !ls.success {
        outcome.accepted = false;
        outcome.termination = Termination::LineSearchFailed;
        return Ok((outcome, None));
    }
    let s: Vec<f64> = d.iter().map(|v| ls.lambda * v).collect();
    axpy_in_place(1.0, &s, theta);
    let g_new = problem.gradient(theta)?;
    refresh_preconditioner(precond, &s, &at.g, &g_new);
    outcome.objective = Some(ls.f_new);
    Ok((outcome, Some(Evaluated { f: ls.f_new, g: g_new })))
}
