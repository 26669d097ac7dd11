//! Dense networks and the composite surrogate models, with exact first and
//! second derivatives.
//!
//! Every primitive provides its value plus first and second derivatives so
//! that Hessian-vector products can be formed by running a forward-mode pass
//! through the reverse pass.

mod activation;
mod mlp;
mod model;

pub use activation::{normal_cdf, normal_pdf, Activation, RATIONAL_COEFFS, RATIONAL_RELU_INIT};
pub use mlp::{Mlp, MlpSpec};
pub use model::{init_params, Linearization, Model, ModelSpec, OutputCurvature, Parameters};

#[cfg(test)]
mod tests;
