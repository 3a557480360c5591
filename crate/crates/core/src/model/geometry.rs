use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cylinder `D × (a, b)` with an axis-aligned box cross-section and its
/// space-time discretisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Cross-section sides `[lo, hi]`, one per transverse axis (empty in 1D).
    pub cross_section: Vec<(f64, f64)>,
    pub axial: (f64, f64),
    pub nx_cross: Vec<usize>,
    pub nz: usize,
    pub nt: usize,
    pub horizon: f64,
}

impl DomainSpec {
    pub fn interval(a: f64, b: f64, nz: usize, nt: usize, horizon: f64) -> Result<Self> {
        Self::new(Vec::new(), (a, b), Vec::new(), nz, nt, horizon)
    }

    pub fn new(
        cross_section: Vec<(f64, f64)>,
        axial: (f64, f64),
        nx_cross: Vec<usize>,
        nz: usize,
        nt: usize,
        horizon: f64,
    ) -> Result<Self> {
        let spec = Self {
            cross_section,
            axial,
            nx_cross,
            nz,
            nt,
            horizon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if !(self.axial.0 < self.axial.1) {
            issues.push(format!(
                "axial interval ({}, {}) needs a < b",
                self.axial.0, self.axial.1
            ));
        }
        if self.nz < 2 {
            issues.push(format!("nz = {} must be >= 2", self.nz));
        }
        if self.nt < 1 {
            issues.push("nt must be >= 1".to_string());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            issues.push(format!("horizon {} must be positive", self.horizon));
        }
        if self.cross_section.len() != self.nx_cross.len() {
            issues.push(format!(
                "{} cross-section sides but {} grid counts",
                self.cross_section.len(),
                self.nx_cross.len()
            ));
        }
        for (k, (&(lo, hi), &n)) in self.cross_section.iter().zip(&self.nx_cross).enumerate() {
            if !(lo < hi) {
                issues.push(format!("cross-section axis {k}: [{lo}, {hi}] is empty"));
            }
            if n < 2 {
                issues.push(format!(
                    "cross-section axis {k}: grid count {n} must be >= 2"
                ));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Geometry(issues.join("; ")))
        }
    }

    pub fn dim(&self) -> usize {
        self.cross_section.len() + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }

    pub fn hz(&self) -> f64 {
        (self.axial.1 - self.axial.0) / (self.nz - 1) as f64
    }

    pub fn z_node(&self, i: usize) -> f64 {
        if i + 1 == self.nz {
            self.axial.1
        } else {
            self.axial.0 + i as f64 * self.hz()
        }
    }

    /// Product of the side lengths.
    pub fn measure(&self) -> f64 {
        self.cross_measure() * (self.axial.1 - self.axial.0)
    }

    pub fn cross_measure(&self) -> f64 {
        self.cross_section.iter().map(|(lo, hi)| hi - lo).product()
    }

    /// The global tensor grid.
    pub fn grid(&self) -> Grid {
        self.band_grid(0, self.nz - 1)
    }

    /// Grid of the slab between axial node indices `lo..=hi`.
    pub fn band_grid(&self, lo: usize, hi: usize) -> Grid {
        let mut shape = vec![hi - lo + 1];
        let mut origin = vec![self.z_node(lo)];
        let mut spacing = vec![self.hz()];
        for (&(a, b), &n) in self.cross_section.iter().zip(&self.nx_cross) {
            shape.push(n);
            origin.push(a);
            spacing.push((b - a) / (n - 1) as f64);
        }
        Grid {
            shape,
            origin,
            spacing,
        }
    }
}

/// Tensor grid stored row-major. Axis 0 is the axial coordinate `z` and is the
/// slowest index, so every fixed-`z` plane is a contiguous block and every
/// axial slab is a contiguous range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub shape: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    /// Number of nodes in one fixed-`z` plane.
    pub fn plane_len(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.shape.len()];
        for k in (0..self.shape.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.shape[k + 1];
        }
        strides
    }

    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for k in (0..self.shape.len()).rev() {
            out[k] = idx % self.shape[k];
            idx /= self.shape[k];
        }
    }

    pub fn coords(&self, idx: usize, out: &mut [f64]) {
        let mut mi = vec![0; self.shape.len()];
        self.multi_index(idx, &mut mi);
        for k in 0..self.shape.len() {
            out[k] = self.origin[k] + mi[k] as f64 * self.spacing[k];
        }
    }

    /// True for nodes on the boundary of the box along any axis.
    pub fn is_boundary(&self, idx: usize) -> bool {
        let mut idx = idx;
        for k in (0..self.shape.len()).rev() {
            let i = idx % self.shape[k];
            idx /= self.shape[k];
            if i == 0 || i + 1 == self.shape[k] {
                return true;
            }
        }
        false
    }

    /// True for nodes on the lateral boundary (transverse axes only).
    pub fn is_lateral(&self, idx: usize) -> bool {
        let mut idx = idx;
        for k in (1..self.shape.len()).rev() {
            let i = idx % self.shape[k];
            idx /= self.shape[k];
            if i == 0 || i + 1 == self.shape[k] {
                return true;
            }
        }
        false
    }

    pub fn same_layout(&self, other: &Grid) -> bool {
        self.shape == other.shape
            && self
                .spacing
                .iter()
                .zip(&other.spacing)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs())
            && self
                .origin
                .iter()
                .zip(&other.origin)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
    }
}

/// One axial slab `D × (a_j, b_j)`, addressed by its global axial node range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: usize,
    pub hi: usize,
    pub a: f64,
    pub b: f64,
}

impl Band {
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn node_count(&self) -> usize {
        self.hi - self.lo + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    bands: Vec<Band>,
}

impl Decomposition {
    /// `count` near-equal bands whose consecutive overlaps are
    /// `overlap_fraction * (b - a) / count`, snapped to axial nodes.
    pub fn build(spec: &DomainSpec, count: usize, overlap_fraction: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Geometry("band count must be >= 1".into()));
        }
        if count == 1 {
            return Self::from_node_ranges(spec, vec![(0, spec.nz - 1)]);
        }
        if !(overlap_fraction > 0.0 && overlap_fraction < 1.0) {
            return Err(Error::Geometry(format!(
                "overlap fraction {overlap_fraction} outside (0, 1)"
            )));
        }
        let intervals = (spec.nz - 1) as f64;
        let overlap_nodes = (overlap_fraction * intervals / count as f64).round() as isize;
        if overlap_nodes <= 0 {
            return Err(Error::Geometry(format!(
                "overlap {} snaps to zero grid intervals",
                overlap_fraction * (spec.axial.1 - spec.axial.0) / count as f64
            )));
        }
        let mut lows = vec![0isize];
        let mut highs = Vec::new();
        for j in 1..count {
            let centre = (j as f64 * intervals / count as f64).round() as isize;
            let lo = centre - overlap_nodes / 2;
            lows.push(lo);
            highs.push(lo + overlap_nodes);
        }
        highs.push(spec.nz as isize - 1);
        if lows
            .iter()
            .chain(&highs)
            .any(|&i| i < 0 || i > spec.nz as isize - 1)
        {
            return Err(Error::Geometry(
                "overlaps do not fit on the axial grid".into(),
            ));
        }
        let ranges = lows
            .into_iter()
            .zip(highs)
            .map(|(l, h)| (l as usize, h as usize))
            .collect();
        Self::from_node_ranges(spec, ranges)
    }

    /// Bands given by their endpoints; every endpoint must be an axial node.
    pub fn from_bands(spec: &DomainSpec, bands: &[(f64, f64)]) -> Result<Self> {
        let hz = spec.hz();
        let snap = |x: f64| -> Result<usize> {
            let pos = (x - spec.axial.0) / hz;
            let i = pos.round();
            if (pos - i).abs() > 1e-9 || i < 0.0 || i > (spec.nz - 1) as f64 {
                Err(Error::Geometry(format!(
                    "band endpoint {x} is not an axial grid node"
                )))
            } else {
                Ok(i as usize)
            }
        };
        let ranges = bands
            .iter()
            .map(|&(a, b)| Ok((snap(a)?, snap(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_node_ranges(spec, ranges)
    }

    pub fn from_node_ranges(spec: &DomainSpec, ranges: Vec<(usize, usize)>) -> Result<Self> {
        let mut issues = Vec::new();
        if ranges.is_empty() {
            return Err(Error::Geometry("no bands".into()));
        }
        if ranges[0].0 != 0 {
            issues.push("first band must start at a".to_string());
        }
        if ranges[ranges.len() - 1].1 != spec.nz - 1 {
            issues.push("last band must end at b".to_string());
        }
        for (j, &(lo, hi)) in ranges.iter().enumerate() {
            if hi < lo + 2 {
                issues.push(format!("band {} has no interior node", j + 1));
            }
        }
        for j in 0..ranges.len().saturating_sub(1) {
            let (a_j, b_j) = ranges[j];
            let (a_next, b_next) = ranges[j + 1];
            if !(a_next < b_j) {
                issues.push(format!("bands {} and {} do not overlap", j + 1, j + 2));
            }
            if !(b_j < b_next) {
                issues.push(format!("band {} is not left of band {}", j + 1, j + 2));
            }
            if !(a_j < a_next) {
                issues.push(format!("band {} starts before band {}", j + 2, j + 1));
            }
        }
        if !issues.is_empty() {
            return Err(Error::Geometry(issues.join("; ")));
        }
        let bands = ranges
            .into_iter()
            .map(|(lo, hi)| Band {
                lo,
                hi,
                a: spec.z_node(lo),
                b: spec.z_node(hi),
            })
            .collect();
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn count(&self) -> usize {
        self.bands.len()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.bands.iter().map(Band::length).collect()
    }

    /// `S_j = b_j - a_{j+1}` for consecutive bands.
    pub fn overlaps(&self) -> Vec<f64> {
        self.bands.windows(2).map(|w| w[0].b - w[1].a).collect()
    }

    /// Band measures `m(D) (b_j - a_j)`.
    pub fn measures(&self, spec: &DomainSpec) -> Vec<f64> {
        let cross = spec.cross_measure();
        self.bands.iter().map(|b| cross * b.length()).collect()
    }
}
