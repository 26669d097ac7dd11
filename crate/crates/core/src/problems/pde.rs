use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tensor::{DenseMatrix, RngState};

/// Family of advection initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvectionCase {
    /// Box `h 1_[c - w/2, c + w/2]`.
    I,
    /// Box plus the half-ellipse `sqrt(max(d^2 - a^2 (x - b)^2, 0))`.
    II,
}

/// Sampling intervals `[lo, hi]` of the initial-condition parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvectionICSpec {
    pub case: AdvectionCase,
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub c: (f64, f64),
    pub d: (f64, f64),
    pub w: (f64, f64),
    pub h: (f64, f64),
    pub nx: usize,
    pub nt: usize,
}

impl AdvectionICSpec {
    pub fn new(case: AdvectionCase) -> Self {
        AdvectionICSpec {
            case,
            a: (2.0, 6.0),
            b: (0.2, 0.8),
            c: (0.2, 0.8),
            d: (0.1, 0.3),
            w: (0.1, 0.3),
            h: (0.5, 2.0),
            nx: 40,
            nt: 40,
        }
    }

    /// Periodic nodes `x_i = i / nx`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|i| i as f64 / self.nx as f64).collect()
    }
}

/// Draws one initial condition on the periodic grid.
pub fn sample_advection_ic(spec: &AdvectionICSpec, rng: &mut RngState) -> Vec<f64> {
    let mut draw = |(lo, hi): (f64, f64)| rng.uniform(lo, hi);
    let (c, w, h) = (draw(spec.c), draw(spec.w), draw(spec.h));
    let bump = match spec.case {
        AdvectionCase::I => None,
        AdvectionCase::II => Some((draw(spec.a), draw(spec.b), draw(spec.d))),
    };
    spec.nodes()
        .into_iter()
        .map(|x| {
            let mut u = if (x - c).abs() <= 0.5 * w { h } else { 0.0 };
            if let Some((a, b, d)) = bump {
                u += (d * d - a * a * (x - b) * (x - b)).max(0.0).sqrt();
            }
            u
        })
        .collect()
}

/// Unit-speed periodic transport with `dt = dx`: row `j` holds
/// `u(x_i, t_j) = u0(x_{(i - j) mod n})`.
pub fn solve_advection(u0: &[f64], timesteps: usize) -> DenseMatrix {
    let n = u0.len();
    DenseMatrix::from_fn(timesteps, n, |j, i| u0[(i + n * (j / n + 1) - j) % n])
}

/// Solves the tridiagonal system with constant bands `(sub, diag, sup)` by
/// the Thomas algorithm.
pub fn solve_tridiagonal(sub: f64, diag: f64, sup: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    if n == 0 {
        return Vec::new();
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup / diag;
    d[0] = rhs[0] / diag;
    for i in 1..n {
        let m = diag - sub * c[i - 1];
        c[i] = sup / m;
        d[i] = (rhs[i] - sub * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Second-order finite differences for `-u'' = f` on `n` uniform nodes of
/// `[0, 1]` with `u(0) = u(1) = 0`. The boundary entries of `f` are ignored.
pub fn solve_poisson_1d(f: &[f64]) -> Result<Vec<f64>> {
    let n = f.len();
    if n < 3 {
        return Err(Error::Dimension(format!("poisson grid needs at least 3 nodes, got {n}")));
    }
    let h = 1.0 / (n - 1) as f64;
    let rhs: Vec<f64> = f[1..n - 1].iter().map(|v| v * h * h).collect();
    let interior = solve_tridiagonal(-1.0, 2.0, -1.0, &rhs);
    let mut u = vec![0.0; n];
    u[1..n - 1].copy_from_slice(&interior);
    Ok(u)
}

/// Green's function of `-u''` on `[0, 1]` with zero Dirichlet conditions.
pub fn analytic_green_1d(x: f64, y: f64) -> f64 {
    x.min(y) * (1.0 - x.max(y))
}

/// `u_t = D u_xx + k u^2 + f` on `[0, 1] x [0, final_time]`, zero boundary
/// and initial values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionDiffusion {
    pub diffusion: f64,
    pub reaction: f64,
    pub final_time: f64,
}

impl Default for ReactionDiffusion {
    fn default() -> Self {
        ReactionDiffusion {
            diffusion: 0.01,
            reaction: 0.01,
            final_time: 1.0,
        }
    }
}

const BLOW_UP: f64 = 1e10;

/// IMEX time stepping on the grid of `forcing` (`nt x nx`, rows are times
/// `t_j = j T / (nt - 1)`, columns nodes `x_i = i / (nx - 1)`): backward Euler
/// for diffusion, forward Euler for the reaction, forcing taken at the new
/// time level.
pub fn solve_reaction_diffusion(forcing: &DenseMatrix, params: &ReactionDiffusion) -> Result<DenseMatrix> {
    let (nt, nx) = forcing.shape();
    if nt < 3 || nx < 3 {
        return Err(Error::Dimension(format!("reaction-diffusion grid {nt}x{nx} is below 3x3")));
    }
    if params.diffusion < 0.0 || params.reaction < 0.0 {
        return Err(Error::InvalidConfig("diffusion and reaction must be non-negative".into()));
    }
    let dx = 1.0 / (nx - 1) as f64;
    let dt = params.final_time / (nt - 1) as f64;
    let r = params.diffusion * dt / (dx * dx);
    let mut u = DenseMatrix::zeros(nt, nx);
    let mut cur = vec![0.0; nx];
    for j in 1..nt {
        let f = forcing.row(j);
        let rhs: Vec<f64> = (1..nx - 1)
            .map(|i| cur[i] + dt * (params.reaction * cur[i] * cur[i] + f[i]))
            .collect();
        let interior = solve_tridiagonal(-r, 1.0 + 2.0 * r, -r, &rhs);
        cur[1..nx - 1].copy_from_slice(&interior);
        let norm = cur.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm <= BLOW_UP) {
            return Err(Error::BlowUp(norm));
        }
        u.row_mut(j).copy_from_slice(&cur);
    }
    Ok(u)
}

/// Forcing that makes `u*(x, t) = sin(pi x) t` an exact solution.
pub fn manufactured_forcing(nt: usize, nx: usize, params: &ReactionDiffusion) -> DenseMatrix {
    let dt = params.final_time / (nt - 1) as f64;
    let dx = 1.0 / (nx - 1) as f64;
    DenseMatrix::from_fn(nt, nx, |j, i| {
        let (t, s) = (j as f64 * dt, (PI * i as f64 * dx).sin());
        s + params.diffusion * PI * PI * s * t - params.reaction * s * s * t * t
    })
}
