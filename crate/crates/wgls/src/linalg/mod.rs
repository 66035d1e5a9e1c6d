//! Dense and sparse linear algebra primitives used by the discretization.

mod dense;
mod sparse;

pub use dense::{min_eigenvalue_spd, symmetric_eigenvalues, Cholesky, DenseMatrix};
pub use sparse::{CsrMatrix, TripletBuffer};
