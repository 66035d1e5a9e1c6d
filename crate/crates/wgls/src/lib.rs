//! Weak Galerkin least-squares discretization of the first-order linear
//! convection equation
//!
//! ```text
//!     beta . grad(u) + c u = f   in Omega,
//!                        u = g   on the inflow boundary,
//! ```
//!
//! on general polygonal meshes. Unknowns are weak functions: an interior
//! polynomial of degree `k` per cell paired with an independent polynomial
//! of degree `k` per facet. The discrete weak gradient lifts each weak
//! function into `[P_r]^2` per cell; the scheme minimizes the elementwise
//! L2 residual of the PDE plus a facet penalty tying interior and facet
//! values together, which yields a symmetric positive definite system with
//! no coercivity assumption on `beta` or `c`.
//!
//! The crate is `no_std`-compatible (with `alloc`); file formats, the CLI
//! and everything that touches the filesystem live in the companion
//! `wgls-cli` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod assembly;
pub mod basis;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod study;

pub use error::Error;
pub use geometry::{Point, Rect, Vec2};
pub use mesh::PolyMesh;
