use crate::solvers::{ForcingChoice, ForcingParams};

/// Eisenstat-Walker forcing terms for the inexact Newton solves.
#[derive(Debug, Clone)]
pub struct ForcingState {
    params: ForcingParams,
    nu: f64,
    g_norm_old: Option<f64>,
    linear_residual: Option<f64>,
}

impl ForcingState {
    pub fn new(params: ForcingParams) -> Self {
        ForcingState {
            params,
            nu: params.nu0,
            g_norm_old: None,
            linear_residual: None,
        }
    }

    pub fn current(&self) -> f64 {
        self.nu
    }

    /// Final residual `‖g + H s‖` of the last inner solve (used by Choice 1).
    pub fn record_linear_residual(&mut self, r: f64) {
        self.linear_residual = Some(r);
    }

    /// Tolerance for the solve at an iterate with gradient norm `g_norm_new`.
    pub fn next(&mut self, g_norm_new: f64) -> f64 {
        let p = self.params;
        let Some(g_old) = self.g_norm_old.replace(g_norm_new) else {
            self.nu = p.nu0;
            return self.nu;
        };
        if g_old == 0.0 {
            self.nu = p.nu_min;
            return self.nu;
        }
        let nu_old = self.nu;
        let (raw, guard) = match p.choice {
            ForcingChoice::Choice2 => (
                p.gamma * (g_norm_new / g_old).powf(p.alpha),
                p.gamma * nu_old.powf(p.alpha),
            ),
            ForcingChoice::Choice1 => {
                let lin = self.linear_residual.unwrap_or(g_old);
                let alpha = 0.5 * (1.0 + 5f64.sqrt());
                ((g_norm_new - lin).abs() / g_old, nu_old.powf(alpha))
            }
        };
        let nu = if guard > 0.1 { raw.max(guard) } else { raw };
        self.nu = if nu.is_finite() { nu.clamp(p.nu_min, p.nu_max) } else { p.nu_max };
        self.nu
    }
}
