//! Crate-wide error type.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Mesh connectivity or geometry violates an invariant.
    InvalidMesh(String),
    /// A polygon could not be triangulated or a sub-triangle degenerated.
    DegenerateGeometry(String),
    /// A symmetric factorization hit a non-positive pivot.
    NotPositiveDefinite { pivot: usize, value: f64 },
    /// A per-cell mass system could not be solved; signals a broken basis
    /// or quadrature rule rather than bad user input.
    SingularLocalSystem { cell: usize, detail: String },
    /// A required coefficient field (`f`, `g`, ...) was not supplied.
    MissingCoefficient(&'static str),
    /// The global solve failed: the free system is not SPD or is too
    /// ill-conditioned for the requested tolerance. Carries the tail of the
    /// relative-residual history.
    NotSpd {
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },
    /// Attempted to solve a system with no free unknowns.
    EmptySystem,
    /// Invalid study or space configuration.
    InvalidConfig(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidMesh(msg) => write!(f, "invalid mesh: {msg}"),
            Error::DegenerateGeometry(msg) => write!(f, "degenerate geometry: {msg}"),
            Error::NotPositiveDefinite { pivot, value } => write!(
                f,
                "matrix is not positive definite (pivot {pivot} = {value:e})"
            ),
            Error::SingularLocalSystem { cell, detail } => {
                write!(f, "singular local system on cell {cell}: {detail}")
            }
            Error::MissingCoefficient(name) => {
                write!(f, "coefficient field `{name}` is not set")
            }
            Error::NotSpd {
                iterations,
                residual,
                ..
            } => write!(
                f,
                "free system is not SPD or too ill-conditioned: \
                 no convergence after {iterations} iterations (relative residual {residual:e})"
            ),
            Error::EmptySystem => write!(f, "linear system has no free unknowns"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
