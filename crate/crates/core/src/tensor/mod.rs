//! Dense linear algebra and the small utilities shared by every other module.

mod eig;
mod layout;
mod matrix;
mod rng;
mod vector;

pub use eig::{sym_eig, SymEig};
pub use layout::{fold, flatten, LayoutEntry, ParamLayout, ParamTree, Tensor};
pub use matrix::DenseMatrix;
pub use rng::RngState;
pub use vector::{axpy_in_place, dot, norm2, DenseVector, Precision};
