//! Space-time solvers: the implicit finite-difference Dirichlet solver used on
//! every (sub)domain, the monolithic reference, the barrier `φ_M`, and the
//! spectral oracles.

mod fd;
mod field;
mod linalg;
mod spectral;

pub use fd::{
    monolithic_solve, phi_m_solve, phi_m_solve_unchecked, solve_dirichlet, Barrier,
    DirichletProblem, NonlinearTreatment, SolverOptions, TimeScheme,
};
pub use field::{BoundaryTrace, Divergence, SpaceTimeField};
pub use spectral::{
    duhamel_solve, picard_solve, spectral_semigroup_apply, PicardResult, SineBasis, DEFAULT_MODES,
};
