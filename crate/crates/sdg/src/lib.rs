//! Command-line experiments, file formats, and a sparse direct solver for
//! the `sdg-core` discretizations.

pub mod config;
pub mod experiments;
pub mod io;
pub mod solver;
