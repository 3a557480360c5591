//! Parallel Schwarz waveform relaxation for the semilinear heat equation
//! `∂_t u - Δu = f(u)` on a cylinder `D × (a, b)` split into overlapping
//! axial bands.
//!
//! * [`model`] holds the geometry, decomposition, nonlinearity and data.
//! * [`theory`] evaluates the closed-form existence times, bounds and the
//!   contraction constant.
//! * [`solver`] has the implicit finite-difference solver and spectral oracles.
//! * [`swr`] runs the Jacobi waveform relaxation iteration.
//! * [`monitor`] measures the weighted errors and checks the decay bound.

pub mod error;
pub mod io;
pub mod model;
pub mod monitor;
pub mod solver;
pub mod swr;
pub mod theory;

pub use error::{Error, Result};
pub use model::{BoundaryFn, Decomposition, DomainSpec, Grid, Nonlinearity, ProblemData};
pub use solver::{BoundaryTrace, SolverOptions, SpaceTimeField};
