use crate::error::Result;
use crate::solvers::{LbfgsMemory, TrNorm};
use crate::tensor::{axpy_in_place, dot, norm2, DenseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Converged,
    NegativeCurvature,
    BoundaryHit,
    MaxIters,
}

impl CgStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CgStatus::Converged => "converged",
            CgStatus::NegativeCurvature => "negative_curvature",
            CgStatus::BoundaryHit => "boundary_hit",
            CgStatus::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Trust-region radius; `None` solves the unconstrained system.
    pub radius: Option<f64>,
    pub rtol: f64,
    pub max_iters: usize,
    pub norm: TrNorm,
}

/// Iterate norm (in the constraint norm) and model value after a CG iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgTracePoint {
    pub step_norm: f64,
    pub model: f64,
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub s: DenseVector,
    /// Number of operator applications.
    pub iters: usize,
    pub status: CgStatus,
    /// `m(s) = g^T s + s^T H s / 2`.
    pub model: f64,
    /// `‖g + H s‖`.
    pub residual_norm: f64,
    pub trace: Vec<CgTracePoint>,
}

/// Preconditioned conjugate gradients on `H s = -g` with Steihaug-Toint
/// termination. The preconditioner approximates `H^-1`; in trust-region mode
/// the constraint is `‖s‖_M <= radius` with `M` its inverse, or Euclidean.
pub fn pcg_steihaug(
    hvp: &mut dyn FnMut(&[f64]) -> Result<DenseVector>,
    g: &[f64],
    opts: &CgOptions,
    precond: Option<&LbfgsMemory>,
) -> Result<CgResult> {
    let n = g.len();
    let precond = precond.filter(|p| !p.is_empty());
    let apply = |r: &[f64]| -> DenseVector {
        match precond {
            Some(m) => m.apply(r),
            None => DenseVector::from_vec(r.to_vec()),
        }
    };
    // Direct dot products are used for the constraint norm whenever it is Euclidean.
    let euclid = precond.is_none() || opts.norm == TrNorm::Euclidean;

    let mut s = DenseVector::zeros(n);
    let mut r = DenseVector::from_vec(g.to_vec());
    let g_norm = norm2(g);
    let mut trace = Vec::new();
    let done = |s: DenseVector, r: DenseVector, iters, status, trace| {
        let model = 0.5 * (dot(g, &s) + dot(&s, &r));
        CgResult {
            residual_norm: norm2(&r),
            s,
            iters,
            status,
            model,
            trace,
        }
    };
    if g_norm == 0.0 {
        return Ok(done(s, r, 0, CgStatus::Converged, trace));
    }
    let tol = opts.rtol * g_norm;
    let mut z = apply(&r);
    let mut rz = dot(&r, &z);
    let mut p: DenseVector = z.iter().map(|v| -v).collect();
    let (mut s_ms, mut s_mp, mut p_mp) = (0.0, 0.0, if euclid { dot(&p, &p) } else { rz });

    for it in 0..opts.max_iters {
        let hp = hvp(&p)?;
        let kappa = dot(&p, &hp);
        let iters = it + 1;
        if !(kappa > 0.0) {
            return Ok(match opts.radius {
                Some(delta) => {
                    let tau = boundary_tau(s_ms, s_mp, p_mp, delta);
                    axpy_in_place(tau, &p, &mut s);
                    axpy_in_place(tau, &hp, &mut r);
                    push_trace(&mut trace, g, &s, &r, delta);
                    done(s, r, iters, CgStatus::NegativeCurvature, trace)
                }
                None if it == 0 => {
                    axpy_in_place(1.0, &p, &mut s);
                    axpy_in_place(1.0, &hp, &mut r);
                    done(s, r, iters, CgStatus::NegativeCurvature, trace)
                }
                None => done(s, r, iters, CgStatus::NegativeCurvature, trace),
            });
        }
        let alpha = rz / kappa;
        let s_ms_next = s_ms + 2.0 * alpha * s_mp + alpha * alpha * p_mp;
        if let Some(delta) = opts.radius {
            if s_ms_next > delta * delta {
                let tau = boundary_tau(s_ms, s_mp, p_mp, delta);
                axpy_in_place(tau, &p, &mut s);
                axpy_in_place(tau, &hp, &mut r);
                push_trace(&mut trace, g, &s, &r, delta);
                return Ok(done(s, r, iters, CgStatus::BoundaryHit, trace));
            }
        }
        axpy_in_place(alpha, &p, &mut s);
        axpy_in_place(alpha, &hp, &mut r);
        let step_norm = if euclid { norm2(&s) } else { s_ms_next.max(0.0).sqrt() };
        trace.push(CgTracePoint {
            step_norm,
            model: 0.5 * (dot(g, &s) + dot(&s, &r)),
        });
        if norm2(&r) <= tol {
            return Ok(done(s, r, iters, CgStatus::Converged, trace));
        }
        z = apply(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(z.iter()) {
            *pi = -zi + beta * *pi;
        }
        if euclid {
            s_ms = dot(&s, &s);
            s_mp = dot(&s, &p);
            p_mp = dot(&p, &p);
        } else {
            s_mp = beta * (s_mp + alpha * p_mp);
            p_mp = rz + beta * beta * p_mp;
            s_ms = s_ms_next;
        }
    }
    Ok(done(s, r, opts.max_iters, CgStatus::MaxIters, trace))
}

/// Positive root of `‖s + tau p‖^2 = delta^2` from the norm recurrences.
fn boundary_tau(s_ms: f64, s_mp: f64, p_mp: f64, delta: f64) -> f64 {
    let disc = (s_mp * s_mp + p_mp * (delta * delta - s_ms)).max(0.0);
    let root = disc.sqrt();
    // Stable form of (-s_mp + root) / p_mp.
    if s_mp <= 0.0 {
        (root - s_mp) / p_mp
    } else {
        (delta * delta - s_ms).max(0.0) / (root + s_mp)
    }
}

fn push_trace(trace: &mut Vec<CgTracePoint>, g: &[f64], s: &[f64], r: &[f64], delta: f64) {
    trace.push(CgTracePoint {
        step_norm: delta,
        model: 0.5 * (dot(g, s) + dot(s, r)),
    });
}
