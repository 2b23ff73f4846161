//! Staggered discontinuous Galerkin (SDG) and embedded SDG (ESDG) discretizations
//! of the steady convection-diffusion equation
//!
//! ```text
//!   -mu * lap(u) + div(b u) = f   in Omega,     u = g   on the boundary
//! ```
//!
//! on two-level staggered triangulations. The crate is `no_std` (it needs
//! `alloc`) and contains only the numerical core: mesh construction, the
//! finite element spaces, quadrature, assembly of the bilinear forms, static
//! condensation of the auxiliary flux unknowns, and error analysis. The sparse
//! direct solver is pluggable through [`system::LinearSolver`]; a dense LU is
//! provided for small systems.
#![no_std]

extern crate alloc;

pub mod analysis;
pub mod dense;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod mesh;
pub mod method;
pub mod quadrature;
pub mod spaces;
pub mod sparse;
pub mod system;

pub use error::{Error, Result};
pub use geometry::Point;
pub use mesh::{Edge, EdgeKind, MacroRegion, StaggeredMesh};
pub use method::{Discretization, Method};
pub use spaces::{DofSpace, EmbeddingMatrix, SpaceKind};
pub use sparse::SparseMatrix;
