use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Grid;

/// Where a time integration gave up: first time level that could not be
/// computed or exceeded the divergence threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub step: usize,
    pub time: f64,
    pub newton_failure: bool,
}

/// Discrete `u(x, t)` on one (sub)domain grid. Values are stored time-major:
/// level `n` occupies `values[n * nodes..(n + 1) * nodes]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: Grid,
    dt: f64,
    values: Vec<f64>,
    pub diverged: Option<Divergence>,
}

impl SpaceTimeField {
    pub fn zeros(grid: Grid, dt: f64, nt: usize) -> Self {
        let len = grid.len() * (nt + 1);
        Self {
            grid,
            dt,
            values: vec![0.0; len],
            diverged: None,
        }
    }

    pub fn from_values(grid: Grid, dt: f64, values: Vec<f64>) -> Result<Self> {
        let nodes = grid.len();
        if nodes == 0 || !values.len().is_multiple_of(nodes) || values.len() < nodes {
            return Err(Error::GridMismatch(format!(
                "{} values do not tile {} nodes",
                values.len(),
                nodes
            )));
        }
        Ok(Self {
            grid,
            dt,
            values,
            diverged: None,
        })
    }

    /// Field whose value at every level and node is `f(x, t)`.
    pub fn from_fn(grid: Grid, dt: f64, nt: usize, f: impl Fn(&[f64], f64) -> f64) -> Self {
        let nodes = grid.len();
        let mut x = vec![0.0; grid.ndim()];
        let mut values = Vec::with_capacity(nodes * (nt + 1));
        for n in 0..=nt {
            let t = n as f64 * dt;
            for i in 0..nodes {
                grid.coords(i, &mut x);
                values.push(f(&x, t));
            }
        }
        Self {
            grid,
            dt,
            values,
            diverged: None,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    /// Number of time steps `nt`; there are `nt + 1` levels.
    pub fn nt(&self) -> usize {
        self.values.len() / self.grid.len() - 1
    }

    pub fn levels(&self) -> usize {
        self.nt() + 1
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn level(&self, n: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[n * m..(n + 1) * m]
    }

    pub fn level_mut(&mut self, n: usize) -> &mut [f64] {
        let m = self.grid.len();
        &mut self.values[n * m..(n + 1) * m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, n: usize, i: usize) -> f64 {
        self.values[n * self.grid.len() + i]
    }

    /// Sup over every level and node (NaN levels after a divergence are skipped).
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, |a, &v| a.max(v))
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, |a, &v| a.min(v))
    }

    /// Restriction to the axial slab of local axial nodes `lo..=hi`.
    pub fn restrict_axial(&self, lo: usize, hi: usize) -> SpaceTimeField {
        let plane = self.grid.plane_len();
        let mut grid = self.grid.clone();
        grid.shape[0] = hi - lo + 1;
        grid.origin[0] = self.grid.origin[0] + lo as f64 * self.grid.spacing[0];
        let nodes = self.grid.len();
        let mut values = Vec::with_capacity(grid.len() * self.levels());
        for n in 0..self.levels() {
            values.extend_from_slice(
                &self.values[n * nodes + lo * plane..n * nodes + (hi + 1) * plane],
            );
        }
        SpaceTimeField {
            grid,
            dt: self.dt,
            values,
            diverged: self.diverged,
        }
    }

    /// The plane at local axial node `iz`, tagged with global index `global_iz`.
    pub fn trace(&self, iz: usize, global_iz: usize) -> BoundaryTrace {
        let plane = self.grid.plane_len();
        let nodes = self.grid.len();
        let mut values = Vec::with_capacity(plane * self.levels());
        for n in 0..self.levels() {
            values.extend_from_slice(
                &self.values[n * nodes + iz * plane..n * nodes + (iz + 1) * plane],
            );
        }
        let z = self.grid.origin[0] + iz as f64 * self.grid.spacing[0];
        BoundaryTrace::new(global_iz, z, plane, values)
    }

    pub fn check_same_layout(&self, other: &SpaceTimeField) -> Result<()> {
        if !self.grid.same_layout(&other.grid)
            || self.levels() != other.levels()
            || (self.dt - other.dt).abs() > 1e-15 * self.dt
        {
            return Err(Error::GridMismatch(format!(
                "fields on {:?}x{} and {:?}x{} levels",
                self.grid.shape,
                self.levels(),
                other.grid.shape,
                other.levels()
            )));
        }
        Ok(())
    }
}

/// Dirichlet data on one cross-section plane over all time levels.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    /// Global axial node index of the plane.
    pub plane: usize,
    pub z: f64,
    plane_len: usize,
    values: Vec<f64>,
}

impl BoundaryTrace {
    pub fn new(plane: usize, z: f64, plane_len: usize, values: Vec<f64>) -> Self {
        assert!(plane_len > 0 && values.len().is_multiple_of(plane_len));
        Self {
            plane,
            z,
            plane_len,
            values,
        }
    }

    pub fn plane_len(&self) -> usize {
        self.plane_len
    }

    pub fn levels(&self) -> usize {
        self.values.len() / self.plane_len
    }

    pub fn level(&self, n: usize) -> &[f64] {
        &self.values[n * self.plane_len..(n + 1) * self.plane_len]
    }

    pub fn level_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.values[n * self.plane_len..(n + 1) * self.plane_len]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}
