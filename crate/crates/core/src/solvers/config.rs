use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    SgdMomentum,
    Adam,
    Adamw,
    Lbfgs,
    NewtonLs,
    NewtonLsGn,
    TrustRegion,
    TrustRegionGn,
}

impl SolverKind {
    pub const ALL: [SolverKind; 8] = [
        SolverKind::SgdMomentum,
        SolverKind::Adam,
        SolverKind::Adamw,
        SolverKind::Lbfgs,
        SolverKind::NewtonLs,
        SolverKind::NewtonLsGn,
        SolverKind::TrustRegion,
        SolverKind::TrustRegionGn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::SgdMomentum => "sgd_momentum",
            SolverKind::Adam => "adam",
            SolverKind::Adamw => "adamw",
            SolverKind::Lbfgs => "lbfgs",
            SolverKind::NewtonLs => "newton_ls",
            SolverKind::NewtonLsGn => "newton_ls_gn",
            SolverKind::TrustRegion => "trust_region",
            SolverKind::TrustRegionGn => "trust_region_gn",
        }
    }

    pub fn is_first_order(self) -> bool {
        matches!(self, SolverKind::SgdMomentum | SolverKind::Adam | SolverKind::Adamw)
    }

    pub fn uses_gauss_newton(self) -> bool {
        matches!(self, SolverKind::NewtonLsGn | SolverKind::TrustRegionGn)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown solver kind '{s}'")))
    }
}

/// Learning-rate schedule, evaluated at a (fractional) epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Constant,
    /// `lr0 * factor^floor(epoch / every_k_epochs)`
    ExpStaircase { factor: f64, every_k_epochs: usize },
    /// `final + (lr0 - final) / (1 + epoch / decay_epochs)`, tending to `final_rate`.
    InverseTimeDecay { final_rate: f64, decay_epochs: f64 },
}

impl Schedule {
    pub fn rate(&self, lr0: f64, epoch: f64) -> f64 {
        match *self {
            Schedule::Constant => lr0,
            Schedule::ExpStaircase { factor, every_k_epochs } => {
                let k = every_k_epochs.max(1) as f64;
                lr0 * factor.powi((epoch / k).floor() as i32)
            }
            Schedule::InverseTimeDecay { final_rate, decay_epochs } => {
                final_rate + (lr0 - final_rate) / (1.0 + epoch / decay_epochs.max(f64::MIN_POSITIVE))
            }
        }
    }

    pub fn kind_str(&self) -> &'static str {
        match self {
            Schedule::Constant => "constant",
            Schedule::ExpStaircase { .. } => "exp_staircase",
            Schedule::InverseTimeDecay { .. } => "inverse_time_decay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoParams {
    pub c1: f64,
    pub factor: f64,
    pub max_trials: usize,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        ArmijoParams {
            c1: 1e-4,
            factor: 0.5,
            max_trials: 40,
        }
    }
}

/// Eisenstat-Walker forcing-term family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingChoice {
    /// `|‖g_new‖ - ‖g_old + H s‖| / ‖g_old‖`
    Choice1,
    /// `gamma * (‖g_new‖ / ‖g_old‖)^alpha`
    Choice2,
}

impl FromStr for ForcingChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "choice1" | "1" => Ok(ForcingChoice::Choice1),
            "choice2" | "2" => Ok(ForcingChoice::Choice2),
            _ => Err(Error::InvalidConfig(format!("unknown forcing choice '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingParams {
    pub nu0: f64,
    pub nu_min: f64,
    pub nu_max: f64,
    pub choice: ForcingChoice,
    pub gamma: f64,
    pub alpha: f64,
}

impl Default for ForcingParams {
    fn default() -> Self {
        ForcingParams {
            nu0: 0.9,
            nu_min: 1e-6,
            nu_max: 0.9,
            choice: ForcingChoice::Choice2,
            gamma: 1.0,
            alpha: 0.5 * (1.0 + 5f64.sqrt()),
        }
    }
}

/// Norm in which the trust-region constraint is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrNorm {
    Preconditioner,
    Euclidean,
}

impl FromStr for TrNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "preconditioner" => Ok(TrNorm::Preconditioner),
            "euclidean" => Ok(TrNorm::Euclidean),
            _ => Err(Error::InvalidConfig(format!("unknown trust-region norm '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRegionParams {
    pub delta0: f64,
    pub delta_max: f64,
    pub accept: f64,
    pub shrink_below: f64,
    pub shrink_factor: f64,
    pub grow_above: f64,
    pub grow_factor: f64,
    pub radius_floor: f64,
    pub inner_rtol: f64,
    pub norm: TrNorm,
}

impl Default for TrustRegionParams {
    fn default() -> Self {
        TrustRegionParams {
            delta0: 0.2,
            delta_max: 10.0,
            accept: 0.001,
            shrink_below: 0.25,
            shrink_factor: 0.25,
            grow_above: 0.75,
            grow_factor: 2.0,
            radius_floor: 1e-12,
            inner_rtol: 1e-4,
            norm: TrNorm::Preconditioner,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub max_epochs: usize,
    /// Stops after the first epoch whose cumulative oracle calls reach this.
    pub max_oracle_calls: Option<f64>,
    pub learning_rate: f64,
    pub schedule: Schedule,
    pub weight_decay: f64,
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub lbfgs_history: usize,
    pub precond_history: usize,
    /// Disables the L-BFGS preconditioner of the Krylov solves.
    pub precondition: bool,
    pub cg_max_iters: usize,
    pub armijo: ArmijoParams,
    pub forcing: ForcingParams,
    pub tr: TrustRegionParams,
    /// Success halt: `‖g‖ <= grad_rtol * max(1, ‖g0‖)`.
    pub grad_rtol: f64,
}

impl SolverConfig {
    pub fn new(kind: SolverKind) -> Self {
        SolverConfig {
            kind,
            max_epochs: 100,
            max_oracle_calls: None,
            learning_rate: 1e-3,
            schedule: Schedule::Constant,
            weight_decay: 0.0,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lbfgs_history: 30,
            precond_history: 5,
            precondition: true,
            cg_max_iters: 100,
            armijo: ArmijoParams::default(),
            forcing: ForcingParams::default(),
            tr: TrustRegionParams::default(),
            grad_rtol: 1e-10,
        }
    }

    pub fn with_max_epochs(mut self, max_epochs: usize) -> Self {
        self.max_epochs = max_epochs;
        self
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::new(SolverKind::TrustRegionGn)
    }
}
