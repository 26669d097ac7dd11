use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

/// Number of coefficients of a degree-(3,2) rational activation.
pub const RATIONAL_COEFFS: usize = 7;

/// Degree-(3,2) rational approximation of relu on [-1, 1] from the rational
/// neural network literature, stored ascending: `[p0, p1, p2, p3, q0, q1, q2]`
/// for `P(x) = p0 + p1 x + p2 x^2 + p3 x^3` and `Q(x) = q0 + q1 x + q2 x^2`.
pub const RATIONAL_RELU_INIT: [f64; RATIONAL_COEFFS] = [0.0218, 0.5, 1.5957, 1.1915, 1.0, 0.0, 2.383];

#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    Relu,
    Tanh,
    /// Exact `x * Phi(x)`.
    Gelu,
    /// `P(x) / Q(x)`; with `trainable` the coefficients live in the parameter
    /// vector (one set per layer) and `coeffs` only seeds initialization.
    Rational {
        coeffs: [f64; RATIONAL_COEFFS],
        trainable: bool,
    },
    Identity,
}

impl Activation {
    pub fn rational() -> Self {
        Activation::Rational {
            coeffs: RATIONAL_RELU_INIT,
            trainable: true,
        }
    }

    pub fn trainable_len(&self) -> usize {
        match self {
            Activation::Rational { trainable: true, .. } => RATIONAL_COEFFS,
            _ => 0,
        }
    }

    /// True when `Q` has no real root, i.e. `q2 > 0` and a negative discriminant.
    pub fn denominator_positive(coeffs: &[f64]) -> bool {
        let (q0, q1, q2) = (coeffs[4], coeffs[5], coeffs[6]);
        q2 > 0.0 && q1 * q1 - 4.0 * q2 * q0 < 0.0
    }

    /// Value with first and second derivatives in the pre-activation.
    /// `coeffs` is only read for rational activations.
    #[inline]
    pub(crate) fn eval(&self, z: f64, coeffs: &[f64]) -> ActEval {
        match self {
            Activation::Identity => ActEval { f: z, d1: 1.0, d2: 0.0 },
            Activation::Relu => {
                if z > 0.0 {
                    ActEval { f: z, d1: 1.0, d2: 0.0 }
                } else {
                    ActEval { f: 0.0, d1: 0.0, d2: 0.0 }
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                let s = 1.0 - t * t;
                ActEval {
                    f: t,
                    d1: s,
                    d2: -2.0 * t * s,
                }
            }
            Activation::Gelu => {
                let cdf = normal_cdf(z);
                let pdf = normal_pdf(z);
                ActEval {
                    f: z * cdf,
                    d1: cdf + z * pdf,
                    d2: pdf * (2.0 - z * z),
                }
            }
            Activation::Rational { .. } => {
                let (f, d1, d2) = RationalParts::value(z, coeffs);
                ActEval { f, d1, d2 }
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Gelu => "gelu",
            Activation::Rational { .. } => "rational",
            Activation::Identity => "identity",
        };
        f.write_str(name)
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "gelu" => Ok(Activation::Gelu),
            "rational" => Ok(Activation::rational()),
            "identity" => Ok(Activation::Identity),
            other => Err(format!(
                "unknown activation `{other}` (expected relu, tanh, gelu, rational, identity)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ActEval {
    pub f: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Standard normal CDF via `erfc` (libm, sub-ulp accurate), stable in both tails.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Value and all first/mixed derivatives of `P(z)/Q(z)` in `z` and the
/// coefficients.
#[derive(Debug, Clone)]
pub(crate) struct RationalParts {
    pub f: f64,
    pub fz: f64,
    pub fzz: f64,
    /// d f / d c_j
    pub fc: [f64; RATIONAL_COEFFS],
    /// d^2 f / (dz dc_j)
    pub fzc: [f64; RATIONAL_COEFFS],
    z: f64,
    q: f64,
}

impl RationalParts {
    /// Value with first and second derivatives in `z` only.
    #[inline]
    pub fn value(z: f64, c: &[f64]) -> (f64, f64, f64) {
        let z2 = z * z;
        let p = c[0] + c[1] * z + c[2] * z2 + c[3] * z2 * z;
        let dp = c[1] + 2.0 * c[2] * z + 3.0 * c[3] * z2;
        let ddp = 2.0 * c[2] + 6.0 * c[3] * z;
        let q = c[4] + c[5] * z + c[6] * z2;
        let dq = c[5] + 2.0 * c[6] * z;
        let iq = 1.0 / q;
        let f = p / q;
        let fz = (dp - f * dq) * iq;
        let fzz = (ddp - 2.0 * fz * dq - 2.0 * c[6] * f) * iq;
        (f, fz, fzz)
    }

    pub fn new(z: f64, c: &[f64]) -> Self {
        let pw = [1.0, z, z * z, z * z * z];
        let (f, fz, fzz) = RationalParts::value(z, c);
        let q = c[4] + c[5] * z + c[6] * pw[2];
        let dq = c[5] + 2.0 * c[6] * z;
        let iq = 1.0 / q;

        let mut fc = [0.0; RATIONAL_COEFFS];
        let mut fzc = [0.0; RATIONAL_COEFFS];
        let dq_iq = dq * iq;
        for i in 0..4 {
            fc[i] = pw[i] * iq;
            let dpw = if i == 0 { 0.0 } else { i as f64 * pw[i - 1] };
            fzc[i] = (dpw - pw[i] * dq_iq) * iq;
        }
        for j in 0..3 {
            fc[4 + j] = -f * pw[j] * iq;
            let dpw = if j == 0 { 0.0 } else { j as f64 * pw[j - 1] };
            fzc[4 + j] = (-(fz * pw[j] + f * dpw) + f * pw[j] * dq_iq) * iq;
        }
        RationalParts {
            f,
            fz,
            fzz,
            fc,
            fzc,
            z,
            q,
        }
    }

    /// `(d^2 f / dc dc) * dc`.
    pub fn fcc_apply(&self, dc: &[f64]) -> [f64; RATIONAL_COEFFS] {
        let z = self.z;
        let pw = [1.0, z, z * z, z * z * z, z * z * z * z];
        let q2 = self.q * self.q;
        let mut out = [0.0; RATIONAL_COEFFS];
        for i in 0..4 {
            out[i] = -(0..3).map(|j| pw_mul(&pw, i, j) * dc[4 + j]).sum::<f64>() / q2;
        }
        for j in 0..3 {
            let cross: f64 = (0..4).map(|i| pw_mul(&pw, i, j) * dc[i]).sum();
            let qq: f64 = (0..3).map(|k| pw_mul(&pw, j, k) * dc[4 + k]).sum();
            out[4 + j] = (-cross + 2.0 * self.f * qq) / q2;
        }
        out
    }
}

#[inline]
fn pw_mul(pw: &[f64; 5], i: usize, j: usize) -> f64 {
    // z^(i+j) for i+j <= 5
    if i + j < 5 {
        pw[i + j]
    } else {
        pw[4] * pw[1]
    }
}
