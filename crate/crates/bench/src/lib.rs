//! Fixtures shared by the criterion benches.

use std::f64::consts::PI;

use swr_core::model::{BoundaryFn, Decomposition, DomainSpec, Nonlinearity, ProblemData};
use swr_core::solver::SolverOptions;
use swr_core::swr::SwrProblem;

/// `u_t - u_zz = u^2` on `(0, 1)` from `amp sin(pi z)`, split into `bands`.
pub fn sine_problem(nz: usize, nt: usize, bands: usize, overlap_fraction: f64) -> SwrProblem {
    let spec = DomainSpec::interval(0.0, 1.0, nz, nt, 0.1).expect("valid interval");
    let decomp = Decomposition::build(&spec, bands, overlap_fraction).expect("valid decomposition");
    let u0 = (0..nz).map(|i| 0.5 * (PI * spec.z_node(i)).sin()).collect();
    let data =
        ProblemData::new(&spec, &decomp, u0, BoundaryFn::constant(0.0)).expect("compatible data");
    SwrProblem {
        spec,
        decomp,
        data,
        f: Nonlinearity::square(),
        solver: SolverOptions::default(),
    }
}

/// Same on the box `(0,1)^2 x (0,1)` with `n` nodes per axis.
pub fn box_problem(n: usize, nt: usize, bands: usize) -> SwrProblem {
    let spec = DomainSpec::new(
        vec![(0.0, 1.0), (0.0, 1.0)],
        (0.0, 1.0),
        vec![n, n],
        n,
        nt,
        0.05,
    )
    .expect("valid box");
    let decomp = Decomposition::build(&spec, bands, 0.2).expect("valid decomposition");
    let grid = spec.grid();
    let mut x = vec![0.0; 3];
    let u0 = (0..grid.len())
        .map(|i| {
            grid.coords(i, &mut x);
            0.5 * x.iter().map(|v| (PI * v).sin()).product::<f64>()
        })
        .collect();
    let data =
        ProblemData::new(&spec, &decomp, u0, BoundaryFn::constant(0.0)).expect("compatible data");
    SwrProblem {
        spec,
        decomp,
        data,
        f: Nonlinearity::square(),
        solver: SolverOptions::default(),
    }
}
