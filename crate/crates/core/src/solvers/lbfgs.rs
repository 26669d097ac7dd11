use std::collections::VecDeque;

use crate::error::Result;
use crate::objective::MinimizationProblem;
use crate::solvers::{ArmijoParams, SolverConfig, StepOutcome, Termination};
use crate::tensor::{axpy_in_place, dot, norm2, DenseVector};

#[derive(Debug, Clone)]
struct Pair {
    s: DenseVector,
    y: DenseVector,
    sy: f64,
}

/// Ring buffer of curvature pairs `(s, y)`, newest last.
#[derive(Debug, Clone)]
pub struct LbfgsMemory {
    capacity: usize,
    pairs: VecDeque<Pair>,
}

impl LbfgsMemory {
    pub fn new(capacity: usize) -> Self {
        LbfgsMemory {
            capacity,
            pairs: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Stores the pair if `<s, y> > 1e-12 ‖s‖ ‖y‖`; returns whether it was kept.
    pub fn push(&mut self, s: DenseVector, y: DenseVector) -> bool {
        let sy = dot(&s, &y);
        let bound = 1e-12 * norm2(&s) * norm2(&y);
        if !(sy > bound) || !sy.is_finite() || self.capacity == 0 {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back(Pair { s, y, sy });
        true
    }

    /// `<s, y> / <y, y>` of the newest pair, 1 when empty.
    pub fn gamma(&self) -> f64 {
        self.pairs.back().map_or(1.0, |p| p.sy / dot(&p.y, &p.y))
    }

    /// Inverse-Hessian approximation applied to `g` with the default scaling.
    pub fn apply(&self, g: &[f64]) -> DenseVector {
        lbfgs_apply(self, g, self.gamma())
    }
}

/// Two-loop recursion with initial matrix `gamma * I`.
pub fn lbfgs_apply(mem: &LbfgsMemory, g: &[f64], gamma: f64) -> DenseVector {
    let mut q = g.to_vec();
    let mut alphas = vec![0.0; mem.pairs.len()];
    for (i, p) in mem.pairs.iter().enumerate().rev() {
        let a = dot(&p.s, &q) / p.sy;
        alphas[i] = a;
        axpy_in_place(-a, &p.y, &mut q);
    }
    q.iter_mut().for_each(|v| *v *= gamma);
    for (i, p) in mem.pairs.iter().enumerate() {
        let b = dot(&p.y, &q) / p.sy;
        axpy_in_place(alphas[i] - b, &p.s, &mut q);
    }
    DenseVector::from_vec(q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    pub lambda: f64,
    pub f_new: f64,
    pub trials: usize,
    pub success: bool,
}

/// Armijo backtracking from `lambda = 1`: accepts the first trial with
/// `f(theta + lambda d) <= f0 + c1 lambda <g, d>`. Non-finite trial values fail
/// the test.
pub fn armijo_backtrack<P: MinimizationProblem + ?Sized>(
    problem: &mut P,
    params: &ArmijoParams,
    theta: &[f64],
    f0: f64,
    gd: f64,
    d: &[f64],
) -> Result<LineSearchResult> {
    let mut lambda = 1.0;
    let mut trial = vec![0.0; theta.len()];
    for k in 1..=params.max_trials {
        for ((t, x), di) in trial.iter_mut().zip(theta).zip(d) {
            *t = x + lambda * di;
        }
        let f = problem.objective(&trial)?;
        if f.is_finite() && f <= f0 + params.c1 * lambda * gd {
            return Ok(LineSearchResult {
                lambda,
                f_new: f,
                trials: k,
                success: true,
            });
        }
        lambda *= params.factor;
    }
    Ok(LineSearchResult {
        lambda: 0.0,
        f_new: f0,
        trials: params.max_trials,
        success: false,
    })
}

/// Value and gradient at the current iterate, carried between steps.
#[derive(Debug, Clone)]
pub struct Evaluated {
    pub f: f64,
    pub g: DenseVector,
}

/// One L-BFGS iteration. On success `theta` moves, the memory gains the new
/// pair and the returned evaluation is at the new iterate.
pub fn lbfgs_step<P: MinimizationProblem + ?Sized>(
    cfg: &SolverConfig,
    mem: &mut LbfgsMemory,
    problem: &mut P,
    theta: &mut [f64],
    at: &Evaluated,
) -> Result<(StepOutcome, Option<Evaluated>)> {
    let mut d = mem.apply(&at.g);
    d.iter_mut().for_each(|v| *v = -*v);
    let mut gd = dot(&at.g, &d);
    if !(gd < 0.0) {
        mem.clear();
        d = DenseVector::from_vec(at.g.iter().map(|v| -v).collect());
        gd = dot(&at.g, &d);
    }
    let ls = armijo_backtrack(problem, &cfg.armijo, theta, at.f, gd, &d)?;
    if !ls.success {
        return Ok((StepOutcome::rejected(0.0, Termination::LineSearchFailed), None));
    }
    let s: Vec<f64> = d.iter().map(|v| ls.lambda * v).collect();
    axpy_in_place(1.0, &s, theta);
    let g_new = problem.gradient(theta)?;
    let y: Vec<f64> = g_new.iter().zip(at.g.iter()).map(|(a, b)| a - b).collect();
    mem.push(DenseVector::from_vec(s), DenseVector::from_vec(y));
    Ok((
        StepOutcome::accepted(ls.lambda).with_objective(ls.f_new),
        Some(Evaluated { f: ls.f_new, g: g_new }),
    ))
}
