//! Data generation for the surrogate-learning problems: random input
//! functions, reference PDE solvers, POD bases, and the PMLD container.

mod dataset;
mod grf;
mod pde;
pub mod pmld;
mod pod;

pub use dataset::{build_dataset, shape_of, DatasetSpec, ProblemTag, SurrogateDataset};
pub use grf::{sample_grf, GrfSpec};
pub use pde::{
    analytic_green_1d, manufactured_forcing, sample_advection_ic, solve_advection, solve_poisson_1d,
    solve_reaction_diffusion, solve_tridiagonal, AdvectionCase, AdvectionICSpec, ReactionDiffusion,
};
pub use pmld::{read_params, read_pmld, write_params, write_pmld, PmldFile, PmldHeader};
pub use pod::{compute_pod, select_pod_modes, PodBasis};
