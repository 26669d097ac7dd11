use std::f64::consts::PI;

use crate::tensor::{DenseVector, RngState};

/// Gaussian random field on `[0, 1]` with Fourier-mode variances
/// `amplitude^2 * ((2 pi k)^2 + tau^2)^(-decay)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrfSpec {
    pub n: usize,
    pub decay: f64,
    pub tau: f64,
    pub amplitude: f64,
    /// Periodic grids use `x_j = j / n`; otherwise `x_j = j / (n - 1)` so both
    /// endpoints are sampled.
    pub periodic: bool,
}

impl GrfSpec {
    pub fn new(n: usize) -> Self {
        GrfSpec {
            n,
            decay: 2.0,
            tau: 3.0,
            amplitude: 10.0,
            periodic: true,
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let denom = if self.periodic { self.n } else { self.n.saturating_sub(1).max(1) } as f64;
        (0..self.n).map(|j| j as f64 / denom).collect()
    }

    /// Highest resolved wavenumber; keeps every sine mode nonzero on the grid.
    pub fn max_mode(&self) -> usize {
        self.n.saturating_sub(1) / 2
    }

    /// Standard deviation of the coefficients of mode `k`.
    pub fn mode_std(&self, k: usize) -> f64 {
        let w = 2.0 * PI * k as f64;
        self.amplitude * (w * w + self.tau * self.tau).powf(-0.5 * self.decay)
    }
}

/// One realization: `a_0 xi_0 + sum_k s_k (xi_k cos(2 pi k x) + eta_k sin(2 pi k x))`.
pub fn sample_grf(spec: &GrfSpec, rng: &mut RngState) -> DenseVector {
    let x = spec.nodes();
    let mut u = vec![spec.mode_std(0) * rng.normal(); spec.n];
    for k in 1..=spec.max_mode() {
        let s = spec.mode_std(k);
        let (a, b) = (s * rng.normal(), s * rng.normal());
        let w = 2.0 * PI * k as f64;
        for (uj, xj) in u.iter_mut().zip(&x) {
            let (sn, cs) = (w * xj).sin_cos();
            *uj += a * cs + b * sn;
        }
    }
    DenseVector::from_vec(u)
}
