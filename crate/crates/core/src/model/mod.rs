//! Problem data: geometry of the banded cylinder, the reaction term, and the
//! initial/boundary data with the step-0 interface guesses.

mod data;
mod geometry;
mod nonlinearity;

pub use data::{BoundaryFn, BoundaryPreset, DataPreset, ProblemData};
pub use geometry::{Band, Decomposition, DomainSpec, Grid};
pub use nonlinearity::Nonlinearity;
