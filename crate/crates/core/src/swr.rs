//! Jacobi Schwarz waveform relaxation on overlapping axial bands.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Decomposition, DomainSpec, Nonlinearity, ProblemData};
use crate::solver::{
    solve_dirichlet, BoundaryTrace, DirichletProblem, SolverOptions, SpaceTimeField,
};

/// Everything a relaxation run needs.
#[derive(Debug, Clone)]
pub struct SwrProblem {
    pub spec: DomainSpec,
    pub decomp: Decomposition,
    pub data: ProblemData,
    pub f: Nonlinearity,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandDivergence {
    pub band: usize,
    pub step: usize,
    pub time: f64,
    pub newton_failure: bool,
}

/// Iterate `k`: one space-time field per band plus the interface traces
/// each band was solved with.
#[derive(Debug, Clone, PartialEq)]
pub struct SwrState {
    pub k: usize,
    pub fields: Vec<SpaceTimeField>,
    /// Per band: `(trace at a_j, trace at b_j)`.
    pub traces: Vec<(BoundaryTrace, BoundaryTrace)>,
    pub divergence: Option<BandDivergence>,
}

impl SwrState {
    /// State at iteration `k` holding the given band fields; the recorded
    /// traces are those the fields themselves would hand out.
    pub fn from_fields(
        problem: &SwrProblem,
        k: usize,
        fields: Vec<SpaceTimeField>,
    ) -> Result<Self> {
        if fields.len() != problem.decomp.count() {
            return Err(Error::Config(format!(
                "{} fields for {} bands",
                fields.len(),
                problem.decomp.count()
            )));
        }
        let traces = exchange(problem, &fields);
        let divergence = first_divergence(&fields);
        Ok(Self {
            k,
            fields,
            traces,
            divergence,
        })
    }
}

fn first_divergence(fields: &[SpaceTimeField]) -> Option<BandDivergence> {
    fields
        .iter()
        .enumerate()
        .filter_map(|(band, f)| {
            f.diverged.map(|d| BandDivergence {
                band,
                step: d.step,
                time: d.time,
                newton_failure: d.newton_failure,
            })
        })
        .min_by_key(|d| (d.step, d.band))
}

/// Interface data for the next sweep: neighbour planes inside, `g` at the ends.
fn exchange(
    problem: &SwrProblem,
    fields: &[SpaceTimeField],
) -> Vec<(BoundaryTrace, BoundaryTrace)> {
    let bands = problem.decomp.bands();
    let last = bands.len() - 1;
    bands
        .iter()
        .enumerate()
        .map(|(j, band)| {
            let left = if j == 0 {
                problem.data.boundary_trace(&problem.spec, 0)
            } else {
                fields[j - 1].trace(band.lo - bands[j - 1].lo, band.lo)
            };
            let right = if j == last {
                problem
                    .data
                    .boundary_trace(&problem.spec, problem.spec.nz - 1)
            } else {
                fields[j + 1].trace(band.hi - bands[j + 1].lo, band.hi)
            };
            (left, right)
        })
        .collect()
}

fn solve_band(
    problem: &SwrProblem,
    j: usize,
    traces: &(BoundaryTrace, BoundaryTrace),
) -> Result<SpaceTimeField> {
    let band = &problem.decomp.bands()[j];
    let spec = &problem.spec;
    let plane = spec.grid().plane_len();
    let u0 = &problem.data.u0[band.lo * plane..(band.hi + 1) * plane];
    let dp = DirichletProblem {
        grid: spec.band_grid(band.lo, band.hi),
        dt: spec.dt(),
        nt: spec.nt,
        u0,
        left: &traces.0,
        right: &traces.1,
        lateral: &problem.data.boundary,
        source: None,
    };
    solve_dirichlet(&dp, &problem.f, &problem.solver)
}

fn solve_all(
    problem: &SwrProblem,
    traces: &[(BoundaryTrace, BoundaryTrace)],
    pool: &rayon::ThreadPool,
) -> Result<Vec<SpaceTimeField>> {
    pool.install(|| {
        traces
            .par_iter()
            .enumerate()
            .map(|(j, t)| solve_band(problem, j, t))
            .collect()
    })
}

/// Step-0 iterates from the interface guesses; extreme bands inherit `g`.
pub fn init_iterates(problem: &SwrProblem, pool: &rayon::ThreadPool) -> Result<SwrState> {
    problem
        .data
        .check_compatibility(&problem.spec, &problem.decomp)?;
    let last = problem.decomp.count() - 1;
    let traces: Vec<_> = problem
        .data
        .guesses
        .iter()
        .enumerate()
        .map(|(j, (l, r))| {
            let left = if j == 0 {
                problem.data.boundary_trace(&problem.spec, 0)
            } else {
                l.clone()
            };
            let right = if j == last {
                problem
                    .data
                    .boundary_trace(&problem.spec, problem.spec.nz - 1)
            } else {
                r.clone()
            };
            (left, right)
        })
        .collect();
    let fields = solve_all(problem, &traces, pool)?;
    let divergence = first_divergence(&fields);
    Ok(SwrState {
        k: 0,
        fields,
        traces,
        divergence,
    })
}

/// One Jacobi sweep: every band reads only iterate `k`.
pub fn sweep(problem: &SwrProblem, state: &SwrState, pool: &rayon::ThreadPool) -> Result<SwrState> {
    let traces = exchange(problem, &state.fields);
    let fields = solve_all(problem, &traces, pool)?;
    let divergence = first_divergence(&fields);
    Ok(SwrState {
        k: state.k + 1,
        fields,
        traces,
        divergence,
    })
}

/// `max_j max |u_j^{k+1} - u_j^k|` over the nodes each band shares with a neighbour.
pub fn overlap_update(
    decomp: &Decomposition,
    old: &[SpaceTimeField],
    new: &[SpaceTimeField],
) -> f64 {
    let bands = decomp.bands();
    let mut worst = 0.0f64;
    for (j, band) in bands.iter().enumerate() {
        let plane = old[j].grid().plane_len();
        let nodes = old[j].nodes();
        let mut ranges = Vec::new();
        if j > 0 {
            ranges.push((0, bands[j - 1].hi - band.lo));
        }
        if j + 1 < bands.len() {
            ranges.push((bands[j + 1].lo - band.lo, band.hi - band.lo));
        }
        for (lo, hi) in ranges {
            for n in 0..old[j].levels() {
                let a = &old[j].level(n)[lo * plane..(hi + 1) * plane];
                let b = &new[j].level(n)[lo * plane..(hi + 1) * plane];
                for (x, y) in a.iter().zip(b) {
                    let d = (x - y).abs();
                    worst = if d.is_nan() {
                        f64::INFINITY
                    } else {
                        worst.max(d)
                    };
                }
            }
            debug_assert!(hi * plane < nodes);
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    pub max_sweeps: usize,
    pub stop_tol: f64,
    /// Concurrent band solves; 0 lets the pool pick.
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            stop_tol: 1e-10,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxSweeps,
    Diverged(BandDivergence),
}

#[derive(Debug, Clone)]
pub struct SwrRun {
    pub state: SwrState,
    /// Overlap update of sweep `k` (producing iterate `k`), from `k = 1`.
    pub updates: Vec<f64>,
    pub stop: StopReason,
}

pub fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// Sweeps until the overlap update drops to `stop_tol`, the sweep budget is
/// spent, or a band diverges. `observer` sees every iterate including `k = 0`.
pub fn run(
    problem: &SwrProblem,
    opts: &RunOptions,
    mut observer: impl FnMut(&SwrState) -> Result<()>,
) -> Result<SwrRun> {
    if !(opts.stop_tol >= 0.0) {
        return Err(Error::Config(format!(
            "stop tolerance must be >= 0, got {}",
            opts.stop_tol
        )));
    }
    let pool = build_pool(opts.workers)?;
    let mut state = init_iterates(problem, &pool)?;
    observer(&state)?;
    let mut updates = Vec::new();
    if let Some(d) = state.divergence {
        return Ok(SwrRun {
            state,
            updates,
            stop: StopReason::Diverged(d),
        });
    }
    let stop = loop {
        if state.k >= opts.max_sweeps {
            break StopReason::MaxSweeps;
        }
        let next = sweep(problem, &state, &pool)?;
        let update = overlap_update(&problem.decomp, &state.fields, &next.fields);
        updates.push(update);
        state = next;
        observer(&state)?;
        if let Some(d) = state.divergence {
            break StopReason::Diverged(d);
        }
        if update <= opts.stop_tol {
            break StopReason::Converged;
        }
    };
    Ok(SwrRun {
        state,
        updates,
        stop,
    })
}
