use serde::{Deserialize, Serialize};

use super::field::{BoundaryTrace, Divergence, SpaceTimeField};
use super::linalg::{ImplicitSystem, Stencil};
use crate::error::{Error, Result};
use crate::model::{BoundaryFn, Decomposition, DomainSpec, Grid, Nonlinearity, ProblemData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeScheme {
    BackwardEuler,
    /// Two-step BDF, started with one backward Euler step.
    Bdf2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearTreatment {
    /// Fully implicit; Newton on the whole step system.
    Newton,
    /// Implicit diffusion, explicit (extrapolated) reaction.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub scheme: TimeScheme,
    pub nonlinear: NonlinearTreatment,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub divergence_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            scheme: TimeScheme::Bdf2,
            nonlinear: NonlinearTreatment::Newton,
            newton_tol: 1e-12,
            newton_max_iter: 25,
            divergence_threshold: 1e6,
        }
    }
}

/// One Dirichlet problem `∂_t u - Δu = f(u) + s` on a box grid whose two axial
/// end planes carry `left`/`right` and whose lateral faces carry `lateral`.
#[derive(Debug, Clone)]
pub struct DirichletProblem<'a> {
    pub grid: Grid,
    pub dt: f64,
    pub nt: usize,
    pub u0: &'a [f64],
    pub left: &'a BoundaryTrace,
    pub right: &'a BoundaryTrace,
    pub lateral: &'a BoundaryFn,
    pub source: Option<&'a SpaceTimeField>,
}

struct BoundaryWriter<'a> {
    plane: usize,
    last_plane: usize,
    left: &'a BoundaryTrace,
    right: &'a BoundaryTrace,
    lateral: &'a BoundaryFn,
    lateral_nodes: Vec<(usize, Vec<f64>)>,
}

impl BoundaryWriter<'_> {
    fn write(&self, n: usize, t: f64, u: &mut [f64]) {
        u[..self.plane].copy_from_slice(self.left.level(n));
        u[self.last_plane..self.last_plane + self.plane].copy_from_slice(self.right.level(n));
        for (i, x) in &self.lateral_nodes {
            u[*i] = self.lateral.eval(x, t);
        }
    }
}

/// Integrates one Dirichlet problem over all `nt` steps.
///
/// Blow-up is not an error: when Newton fails or `|u|` passes the divergence
/// threshold the field is returned with `diverged` set and NaN from that
/// level on.
pub fn solve_dirichlet(
    problem: &DirichletProblem<'_>,
    f: &Nonlinearity,
    opts: &SolverOptions,
) -> Result<SpaceTimeField> {
    let grid = &problem.grid;
    let nodes = grid.len();
    let plane = grid.plane_len();
    let levels = problem.nt + 1;
    if grid.shape[0] < 2 || problem.u0.len() != nodes {
        return Err(Error::Config(format!(
            "initial slice has {} values for {nodes} nodes",
            problem.u0.len()
        )));
    }
    for (name, tr) in [("left", problem.left), ("right", problem.right)] {
        if tr.plane_len() != plane || tr.levels() != levels {
            return Err(Error::Config(format!(
                "{name} trace is {}x{}, grid needs {plane}x{levels}",
                tr.plane_len(),
                tr.levels()
            )));
        }
    }
    if let Some(s) = problem.source {
        if !s.grid().same_layout(grid) || s.levels() != levels {
            return Err(Error::Config("source field does not match the grid".into()));
        }
    }

    let last_plane = (grid.shape[0] - 1) * plane;
    let mut x = vec![0.0; grid.ndim()];
    let lateral_nodes: Vec<(usize, Vec<f64>)> = (0..nodes)
        .filter(|&i| grid.is_lateral(i))
        .map(|i| {
            grid.coords(i, &mut x);
            (i, x.clone())
        })
        .collect();
    let writer = BoundaryWriter {
        plane,
        last_plane,
        left: problem.left,
        right: problem.right,
        lateral: problem.lateral,
        lateral_nodes,
    };

    let mut mismatches = Vec::new();
    let mut start = problem.u0.to_vec();
    writer.write(0, 0.0, &mut start);
    for i in 0..nodes {
        if (start[i] - problem.u0[i]).abs() > 1e-12 {
            mismatches.push(format!(
                "node {i}: boundary data {} vs initial {}",
                start[i], problem.u0[i]
            ));
        }
    }
    if !mismatches.is_empty() {
        return Err(Error::Compatibility(mismatches));
    }

    let stencil = Stencil::new(grid);
    let mut field = SpaceTimeField::zeros(grid.clone(), problem.dt, problem.nt);
    field.level_mut(0).copy_from_slice(problem.u0);

    let mut diag = vec![0.0; nodes];
    let mut rhs = vec![0.0; nodes];
    let mut delta = vec![0.0; nodes];
    let mut base = vec![0.0; nodes];
    let mut u = vec![0.0; nodes];

    for n in 1..levels {
        let t = n as f64 * problem.dt;
        let bdf2 = opts.scheme == TimeScheme::Bdf2 && n >= 2;
        let theta = if bdf2 {
            2.0 * problem.dt / 3.0
        } else {
            problem.dt
        };
        {
            let prev = field.level(n - 1);
            let prev2 = if bdf2 { Some(field.level(n - 2)) } else { None };
            for &i in stencil.interior() {
                base[i] = match prev2 {
                    Some(p2) => (4.0 * prev[i] - p2[i]) / 3.0,
                    None => prev[i],
                };
                if let Some(s) = problem.source {
                    base[i] += theta * s.get(n, i);
                }
                if opts.nonlinear == NonlinearTreatment::Explicit && !f.is_zero() {
                    base[i] += theta
                        * match prev2 {
                            Some(p2) => 2.0 * f.eval(prev[i]) - f.eval(p2[i]),
                            None => f.eval(prev[i]),
                        };
                }
            }
            u.copy_from_slice(prev);
        }
        writer.write(n, t, &mut u);

        let implicit_f = opts.nonlinear == NonlinearTreatment::Newton && !f.is_zero();
        let mut sys = ImplicitSystem::new(&stencil, theta, nodes);
        let w = stencil.diag_weight();
        let mut converged = false;
        let max_iter = if implicit_f {
            opts.newton_max_iter.max(1)
        } else {
            1
        };
        for _ in 0..max_iter {
            for &i in stencil.interior() {
                let reaction = if implicit_f { f.eval(u[i]) } else { 0.0 };
                let slope = if implicit_f { f.deriv(u[i]) } else { 0.0 };
                rhs[i] = -(u[i] - theta * stencil.laplacian_at(&u, i) - theta * reaction - base[i]);
                diag[i] = 1.0 + theta * w - theta * slope;
            }
            if !sys.solve(&diag, &rhs, &mut delta) {
                break;
            }
            let mut step = 0.0f64;
            let mut size = 0.0f64;
            for &i in stencil.interior() {
                u[i] += delta[i];
                step = step.max(delta[i].abs());
                size = size.max(u[i].abs());
            }
            if !step.is_finite() {
                break;
            }
            if !implicit_f || step <= opts.newton_tol * (1.0 + size) {
                converged = true;
                break;
            }
        }

        let blown = u
            .iter()
            .any(|v| !v.is_finite() || v.abs() > opts.divergence_threshold);
        if !converged || blown {
            field.diverged = Some(Divergence {
                step: n,
                time: t,
                newton_failure: !converged,
            });
            for m in n..levels {
                field.level_mut(m).iter_mut().for_each(|v| *v = f64::NAN);
            }
            break;
        }
        field.level_mut(n).copy_from_slice(&u);
    }
    Ok(field)
}

/// The reference solve on the whole cylinder.
pub fn monolithic_solve(
    spec: &DomainSpec,
    f: &Nonlinearity,
    data: &ProblemData,
    opts: &SolverOptions,
) -> Result<SpaceTimeField> {
    let left = data.boundary_trace(spec, 0);
    let right = data.boundary_trace(spec, spec.nz - 1);
    let problem = DirichletProblem {
        grid: spec.grid(),
        dt: spec.dt(),
        nt: spec.nt,
        u0: &data.u0,
        left: &left,
        right: &right,
        lateral: &data.boundary,
        source: None,
    };
    solve_dirichlet(&problem, f, opts)
}

/// Barrier `φ_M` (constant data `M`) and `M_underbar`, the max of `φ_M` over
/// `∂Ω × [0, T]` and every band boundary `∂Ω_j × [0, T]`.
#[derive(Debug, Clone)]
pub struct Barrier {
    pub field: SpaceTimeField,
    pub m_underbar: f64,
}

/// Requires a nonnegative nonlinearity.
pub fn phi_m_solve(
    spec: &DomainSpec,
    f: &Nonlinearity,
    level: f64,
    decomp: &Decomposition,
    opts: &SolverOptions,
) -> Result<Barrier> {
    if !f.sign_positive() {
        return Err(Error::Param(format!(
            "barrier comparison needs f >= 0; {} is not",
            f.name()
        )));
    }
    phi_m_solve_unchecked(spec, f, level, decomp, opts)
}

/// As [`phi_m_solve`] without the sign requirement (for sanity checks).
pub fn phi_m_solve_unchecked(
    spec: &DomainSpec,
    f: &Nonlinearity,
    level: f64,
    decomp: &Decomposition,
    opts: &SolverOptions,
) -> Result<Barrier> {
    if !(level > 0.0) {
        return Err(Error::Param(format!(
            "barrier level M must be positive, got {level}"
        )));
    }
    let grid = spec.grid();
    let plane = grid.plane_len();
    let trace = |iz: usize| {
        BoundaryTrace::new(
            iz,
            spec.z_node(iz),
            plane,
            vec![level; plane * (spec.nt + 1)],
        )
    };
    let (left, right) = (trace(0), trace(spec.nz - 1));
    let u0 = vec![level; grid.len()];
    let lateral = BoundaryFn::constant(level);
    let problem = DirichletProblem {
        grid: grid.clone(),
        dt: spec.dt(),
        nt: spec.nt,
        u0: &u0,
        left: &left,
        right: &right,
        lateral: &lateral,
        source: None,
    };
    let field = solve_dirichlet(&problem, f, opts)?;
    let mut planes: Vec<usize> = decomp.bands().iter().flat_map(|b| [b.lo, b.hi]).collect();
    planes.push(0);
    planes.push(spec.nz - 1);
    let lateral_nodes: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_lateral(i)).collect();
    let mut m = f64::NEG_INFINITY;
    for n in 0..field.levels() {
        let lvl = field.level(n);
        for &iz in &planes {
            for v in &lvl[iz * plane..(iz + 1) * plane] {
                m = m.max(*v);
            }
        }
        for &i in &lateral_nodes {
            m = m.max(lvl[i]);
        }
    }
    Ok(Barrier {
        field,
        m_underbar: m,
    })
}
