use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::geometry::{Decomposition, DomainSpec, Grid};
use crate::error::{Error, Result};
use crate::solver::BoundaryTrace;

/// Dirichlet data `g(x, t)`. Coordinates are ordered `[z, X_1, ..]`.
#[derive(Clone)]
pub struct BoundaryFn(Arc<DataFn>);

type DataFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

impl BoundaryFn {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Self(Arc::new(f))
    }

    pub fn constant(value: f64) -> Self {
        Self::new(move |_, _| value)
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        (self.0)(x, t)
    }
}

impl fmt::Debug for BoundaryFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BoundaryFn(..)")
    }
}

/// Analytic initial-data presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataPreset {
    Constant {
        value: f64,
    },
    /// `amplitude * exp(-|x - centre|² / width²)`.
    Gaussian {
        amplitude: f64,
        centre: Vec<f64>,
        width: f64,
    },
    /// `amplitude * Π_k sin(m_k π (x_k - lo_k) / side_k)`; missing modes default to 1.
    SineProduct {
        amplitude: f64,
        #[serde(default)]
        modes: Vec<u32>,
    },
}

impl DataPreset {
    pub fn eval(&self, spec: &DomainSpec, x: &[f64]) -> f64 {
        match self {
            DataPreset::Constant { value } => *value,
            DataPreset::Gaussian {
                amplitude,
                centre,
                width,
            } => {
                let r2: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(k, xi)| (xi - centre.get(k).copied().unwrap_or(0.0)).powi(2))
                    .sum();
                amplitude * (-r2 / (width * width)).exp()
            }
            DataPreset::SineProduct { amplitude, modes } => {
                let mut v = *amplitude;
                for (k, xi) in x.iter().enumerate() {
                    let (lo, hi) = if k == 0 {
                        spec.axial
                    } else {
                        spec.cross_section[k - 1]
                    };
                    let m = modes.get(k).copied().unwrap_or(1) as f64;
                    let s = (m * PI * (xi - lo) / (hi - lo)).sin();
                    // exact zeros on the box faces
                    v *= if (xi - lo).abs() < 1e-14 * (hi - lo)
                        || (hi - xi).abs() < 1e-14 * (hi - lo)
                    {
                        0.0
                    } else {
                        s
                    };
                }
                v
            }
        }
    }

    pub fn sample(&self, spec: &DomainSpec, grid: &Grid) -> Vec<f64> {
        let mut x = vec![0.0; grid.ndim()];
        (0..grid.len())
            .map(|i| {
                grid.coords(i, &mut x);
                self.eval(spec, &x)
            })
            .collect()
    }
}

/// Boundary-data presets, all compatible with the initial data at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryPreset {
    /// `g(x, t) = u0(x)`.
    Initial,
    /// `g(x, t) = u0(x) exp(-rate t)`.
    Decay { rate: f64 },
}

impl BoundaryPreset {
    pub fn build(&self, spec: &DomainSpec, initial: &DataPreset) -> BoundaryFn {
        let spec = spec.clone();
        let initial = initial.clone();
        match *self {
            BoundaryPreset::Initial => BoundaryFn::new(move |x, _| initial.eval(&spec, x)),
            BoundaryPreset::Decay { rate } => {
                BoundaryFn::new(move |x, t| initial.eval(&spec, x) * (-rate * t).exp())
            }
        }
    }
}

/// Initial data, boundary data and the step-0 interface guesses.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub u0: Vec<f64>,
    pub boundary: BoundaryFn,
    /// Per band: `(g_j⁰ at a_j, h_j⁰ at b_j)`.
    pub guesses: Vec<(BoundaryTrace, BoundaryTrace)>,
}

impl ProblemData {
    /// Guesses default to the constant-in-time extension of `u0` on each band end.
    pub fn new(
        spec: &DomainSpec,
        decomp: &Decomposition,
        u0: Vec<f64>,
        boundary: BoundaryFn,
    ) -> Result<Self> {
        let grid = spec.grid();
        if u0.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "u0 has {} values for {} nodes",
                u0.len(),
                grid.len()
            )));
        }
        let plane = grid.plane_len();
        let levels = spec.nt + 1;
        let extend = |iz: usize| {
            let slice = &u0[iz * plane..(iz + 1) * plane];
            let mut values = Vec::with_capacity(levels * plane);
            for _ in 0..levels {
                values.extend_from_slice(slice);
            }
            BoundaryTrace::new(iz, spec.z_node(iz), plane, values)
        };
        let guesses = decomp
            .bands()
            .iter()
            .map(|b| (extend(b.lo), extend(b.hi)))
            .collect();
        Ok(Self {
            u0,
            boundary,
            guesses,
        })
    }

    pub fn from_presets(
        spec: &DomainSpec,
        decomp: &Decomposition,
        initial: &DataPreset,
        boundary: &BoundaryPreset,
    ) -> Result<Self> {
        let u0 = initial.sample(spec, &spec.grid());
        Self::new(spec, decomp, u0, boundary.build(spec, initial))
    }

    /// Replace the step-0 guesses of one band (0-based).
    pub fn with_guess(mut self, band: usize, left: BoundaryTrace, right: BoundaryTrace) -> Self {
        self.guesses[band] = (left, right);
        self
    }

    /// `g` restricted to the plane `z = z_{iz}`, sampled at every time level.
    pub fn boundary_trace(&self, spec: &DomainSpec, iz: usize) -> BoundaryTrace {
        let grid = spec.grid();
        let plane = grid.plane_len();
        let dt = spec.dt();
        let mut x = vec![0.0; grid.ndim()];
        let mut values = Vec::with_capacity((spec.nt + 1) * plane);
        for n in 0..=spec.nt {
            let t = n as f64 * dt;
            for q in 0..plane {
                grid.coords(iz * plane + q, &mut x);
                values.push(self.boundary.eval(&x, t));
            }
        }
        BoundaryTrace::new(iz, spec.z_node(iz), plane, values)
    }

    /// Nodewise compatibility of `u0` with `g` at `t = 0` on `∂Ω` and with the
    /// interior interface guesses. Every violation is listed.
    pub fn check_compatibility(&self, spec: &DomainSpec, decomp: &Decomposition) -> Result<()> {
        const TOL: f64 = 1e-12;
        let grid = spec.grid();
        let plane = grid.plane_len();
        let mut issues = Vec::new();
        let mut x = vec![0.0; grid.ndim()];
        for i in 0..grid.len() {
            if grid.is_boundary(i) {
                grid.coords(i, &mut x);
                let g = self.boundary.eval(&x, 0.0);
                if (g - self.u0[i]).abs() > TOL {
                    issues.push(format!(
                        "u0 != g at t=0 on boundary node {i} ({} vs {g})",
                        self.u0[i]
                    ));
                }
            }
        }
        let count = decomp.count();
        for (j, (band, (left, right))) in decomp.bands().iter().zip(&self.guesses).enumerate() {
            let checks = [
                (j > 0, left, band.lo, "g"),
                (j + 1 < count, right, band.hi, "h"),
            ];
            for (interior, trace, iz, name) in checks {
                if !interior {
                    continue;
                }
                if trace.plane_len() != plane || trace.levels() != spec.nt + 1 {
                    issues.push(format!("band {}: guess {name} has the wrong shape", j + 1));
                    continue;
                }
                let at0 = trace.level(0);
                for q in 0..plane {
                    let u = self.u0[iz * plane + q];
                    if (at0[q] - u).abs() > TOL {
                        issues.push(format!(
                            "band {}: guess {name} at t=0 differs from u0 at node {q} of plane z={} ({} vs {u})",
                            j + 1,
                            spec.z_node(iz),
                            at0[q]
                        ));
                    }
                }
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Compatibility(issues))
        }
    }

    /// `max(‖u0‖∞, ‖g‖∞, ‖g_j⁰‖∞, ‖h_j⁰‖∞)` over the grid and time levels.
    pub fn sup_norm(&self, spec: &DomainSpec) -> f64 {
        let grid = spec.grid();
        let mut m = self.u0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut x = vec![0.0; grid.ndim()];
        let boundary: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_boundary(i)).collect();
        for n in 0..=spec.nt {
            let t = n as f64 * spec.dt();
            for &i in &boundary {
                grid.coords(i, &mut x);
                m = m.max(self.boundary.eval(&x, t).abs());
            }
        }
        for (l, r) in &self.guesses {
            m = m.max(l.sup_norm()).max(r.sup_norm());
        }
        m
    }
}
