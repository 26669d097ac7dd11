use crate::error::Result;
use crate::objective::MinimizationProblem;
use crate::solvers::{SolverConfig, SolverKind, StepOutcome};

/// Moment buffers of the first-order methods.
#[derive(Debug, Clone, Default)]
pub struct FirstOrderState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl FirstOrderState {
    pub fn new(dim: usize) -> Self {
        FirstOrderState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }
}

/// One update with the gradient of the current batch. `epoch` is fractional
/// (`step / steps_per_epoch`) and drives the learning-rate schedule.
pub fn first_order_step<P: MinimizationProblem + ?Sized>(
    cfg: &SolverConfig,
    state: &mut FirstOrderState,
    problem: &mut P,
    theta: &mut [f64],
    epoch: f64,
) -> Result<StepOutcome> {
    let g = problem.gradient(theta)?;
    let lr = cfg.schedule.rate(cfg.learning_rate, epoch);
    apply_update(cfg, state, theta, &g, lr);
    Ok(StepOutcome::accepted(lr))
}

/// The parameter update alone, given the gradient.
pub fn apply_update(cfg: &SolverConfig, state: &mut FirstOrderState, theta: &mut [f64], g: &[f64], lr: f64) {
    if state.m.len() != theta.len() {
        *state = FirstOrderState::new(theta.len());
    }
    match cfg.kind {
        SolverKind::SgdMomentum => {
            for ((t, v), gi) in theta.iter_mut().zip(&mut state.v).zip(g) {
                *v = cfg.momentum * *v + gi + cfg.weight_decay * *t;
                *t -= lr * *v;
            }
        }
        SolverKind::Adam | SolverKind::Adamw => {
            state.t += 1;
            let bc1 = 1.0 - cfg.beta1.powi(state.t);
            let bc2 = 1.0 - cfg.beta2.powi(state.t);
            let decoupled = cfg.kind == SolverKind::Adamw;
            for i in 0..theta.len() {
                let gi = if decoupled { g[i] } else { g[i] + cfg.weight_decay * theta[i] };
                state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * gi;
                state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * gi * gi;
                let mhat = state.m[i] / bc1;
                let vhat = state.v[i] / bc2;
                let mut upd = mhat / (vhat.sqrt() + cfg.epsilon);
                if decoupled {
                    upd += cfg.weight_decay * theta[i];
                }
                theta[i] -= lr * upd;
            }
        }
        other => unreachable!("{other} is not a first-order method"),
    }
}
