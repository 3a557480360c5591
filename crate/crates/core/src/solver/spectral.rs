//! Eigenfunction-expansion oracles on Dirichlet boxes: the heat semigroup,
//! the variation-of-constants formula and the Picard map built on it.

use std::f64::consts::PI;

use super::field::SpaceTimeField;
use crate::error::{Error, Result};
use crate::model::{Grid, Nonlinearity};

/// Default truncation per axis.
pub const DEFAULT_MODES: usize = 64;

/// Discrete sine basis of one axis: rows are modes `k = 1..=K`, columns are
/// grid nodes (boundary columns are zero).
#[derive(Debug, Clone)]
struct AxisBasis {
    modes: usize,
    nodes: usize,
    synth: Vec<f64>,
    eigen: Vec<f64>,
}

impl AxisBasis {
    fn new(nodes: usize, spacing: f64, modes: usize) -> Self {
        let intervals = nodes - 1;
        let modes = modes.min(intervals.saturating_sub(1)).max(1);
        let length = intervals as f64 * spacing;
        let mut synth = vec![0.0; modes * nodes];
        for k in 0..modes {
            for i in 1..intervals {
                synth[k * nodes + i] = (((k + 1) * i) as f64 * PI / intervals as f64).sin();
            }
        }
        let eigen = (0..modes)
            .map(|k| ((k + 1) as f64 * PI / length).powi(2))
            .collect();
        Self {
            modes,
            nodes,
            synth,
            eigen,
        }
    }
}

/// Tensor-product sine transform of a box grid.
#[derive(Debug, Clone)]
pub struct SineBasis {
    axes: Vec<AxisBasis>,
    shape: Vec<usize>,
}

fn apply_axis(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    mat: &[f64],
    rows: usize,
    transpose: bool,
) -> (Vec<f64>, Vec<usize>) {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let cols = shape[axis];
    let mut out_shape = shape.to_vec();
    out_shape[axis] = rows;
    let mut out = vec![0.0; outer * rows * inner];
    for o in 0..outer {
        for r in 0..rows {
            for c in 0..cols {
                let m = if transpose {
                    mat[c * rows + r]
                } else {
                    mat[r * cols + c]
                };
                if m == 0.0 {
                    continue;
                }
                let src = &data[(o * cols + c) * inner..(o * cols + c + 1) * inner];
                let dst = &mut out[(o * rows + r) * inner..(o * rows + r + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += m * s;
                }
            }
        }
    }
    (out, out_shape)
}

impl SineBasis {
    pub fn new(grid: &Grid, modes_per_axis: usize) -> Result<Self> {
        if grid.shape.iter().any(|&n| n < 3) {
            return Err(Error::Config(
                "spectral oracle needs at least one interior node per axis".into(),
            ));
        }
        let axes = grid
            .shape
            .iter()
            .zip(&grid.spacing)
            .map(|(&n, &h)| AxisBasis::new(n, h, modes_per_axis))
            .collect();
        Ok(Self {
            axes,
            shape: grid.shape.clone(),
        })
    }

    pub fn mode_count(&self) -> usize {
        self.axes.iter().map(|a| a.modes).product()
    }

    /// Eigenvalues `Σ (n_i π / side_i)²`, in coefficient order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        for a in &self.axes {
            out = out
                .iter()
                .flat_map(|base| a.eigen.iter().map(move |e| base + e))
                .collect();
        }
        out
    }

    pub fn analyse(&self, u: &[f64]) -> Vec<f64> {
        let mut data = u.to_vec();
        let mut shape = self.shape.clone();
        for (k, a) in self.axes.iter().enumerate() {
            let scale = 2.0 / (a.nodes - 1) as f64;
            let (d, s) = apply_axis(&data, &shape, k, &a.synth, a.modes, false);
            data = d.into_iter().map(|v| v * scale).collect();
            shape = s;
        }
        data
    }

    pub fn synthesise(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        let mut shape: Vec<usize> = self.axes.iter().map(|a| a.modes).collect();
        for (k, a) in self.axes.iter().enumerate() {
            let (d, s) = apply_axis(&data, &shape, k, &a.synth, a.nodes, true);
            data = d;
            shape = s;
        }
        data
    }
}

fn check_homogeneous(grid: &Grid, u: &[f64], what: &str) -> Result<()> {
    let scale = u.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    for (i, v) in u.iter().enumerate() {
        if grid.is_boundary(i) && v.abs() > 1e-12 * scale {
            return Err(Error::Config(format!("{what} is nonzero ({v}) on boundary node {i}; only homogeneous Dirichlet data is supported")));
        }
    }
    Ok(())
}

/// `S(t) ζ₀ = Σ_k e^{-t λ_k} ⟨ζ₀, w_k⟩ w_k`, truncated to `modes` per axis.
pub fn spectral_semigroup_apply(
    zeta0: &[f64],
    t: f64,
    grid: &Grid,
    modes: usize,
) -> Result<Vec<f64>> {
    if zeta0.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} values for {} nodes",
            zeta0.len(),
            grid.len()
        )));
    }
    if t < 0.0 {
        return Err(Error::Param(format!(
            "semigroup time must be >= 0, got {t}"
        )));
    }
    check_homogeneous(grid, zeta0, "initial data")?;
    let basis = SineBasis::new(grid, modes)?;
    let mut c = basis.analyse(zeta0);
    for (ck, lam) in c.iter_mut().zip(basis.eigenvalues()) {
        *ck *= (-t * lam).exp();
    }
    Ok(basis.synthesise(&c))
}

/// Weights of the exact one-step update for `c' = -λ c + g(t)` with `g`
/// linear over the step: returns `(e^{-λ dt}, w_old, w_new)`.
fn step_weights(lam: f64, dt: f64) -> (f64, f64, f64) {
    let x = lam * dt;
    let decay = (-x).exp();
    let (phi1, i1) = if x < 0.1 {
        // series of (1 - e^{-x})/x and (x - 1 + e^{-x})/x²
        let mut a = 0.0;
        let mut b = 0.0;
        let mut term = 1.0;
        for k in 0..12 {
            // term = (-x)^k / (k+1)!  then / (k+2)
            a += term;
            b += term / (k + 2) as f64;
            term *= -x / (k + 2) as f64;
        }
        (dt * a, dt * b)
    } else {
        let phi1 = -(-x).exp_m1() / lam;
        (phi1, (dt - phi1) / x)
    };
    (decay, phi1 - i1, i1)
}

/// `ρ(t) = S(t) ρ₀ + ∫₀ᵗ S(t - s) g(s) ds`, evaluated mode by mode with the
/// source linear in time over each step.
pub fn duhamel_solve(
    source: &SpaceTimeField,
    rho0: &[f64],
    modes: usize,
) -> Result<SpaceTimeField> {
    let grid = source.grid().clone();
    if rho0.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} values for {} nodes",
            rho0.len(),
            grid.len()
        )));
    }
    check_homogeneous(&grid, rho0, "initial data")?;
    let basis = SineBasis::new(&grid, modes)?;
    let eigen = basis.eigenvalues();
    let dt = source.dt();
    let weights: Vec<(f64, f64, f64)> = eigen.iter().map(|&l| step_weights(l, dt)).collect();
    let mut out = SpaceTimeField::zeros(grid, dt, source.nt());
    let mut c = basis.analyse(rho0);
    let mut g_old = basis.analyse(source.level(0));
    out.level_mut(0).copy_from_slice(&basis.synthesise(&c));
    for n in 1..source.levels() {
        let g_new = basis.analyse(source.level(n));
        for k in 0..c.len() {
            let (e, w0, w1) = weights[k];
            c[k] = e * c[k] + w0 * g_old[k] + w1 * g_new[k];
        }
        out.level_mut(n).copy_from_slice(&basis.synthesise(&c));
        g_old = g_new;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PicardResult {
    pub w: SpaceTimeField,
    /// `‖w_{k} - w_{k-1}‖∞` per iteration.
    pub differences: Vec<f64>,
    /// Successive difference ratios, from the second iteration on.
    pub ratios: Vec<f64>,
    pub converged: bool,
    /// Set when three consecutive ratios exceed 1.
    pub no_contraction: bool,
}

/// Iterates `w ← ∫₀ᵗ S(t - s) f(w + v)(s) ds` from `w ≡ 0`.
pub fn picard_solve(
    v: &SpaceTimeField,
    f: &Nonlinearity,
    modes: usize,
    max_iter: usize,
    tol: f64,
) -> Result<PicardResult> {
    let zero = vec![0.0; v.nodes()];
    let mut w = SpaceTimeField::zeros(v.grid().clone(), v.dt(), v.nt());
    let mut differences = Vec::new();
    let mut ratios = Vec::new();
    let mut converged = false;
    let mut no_contraction = false;
    let mut above_one = 0;
    for _ in 0..max_iter {
        let mut source = w.clone();
        for (s, vv) in source.values_mut().iter_mut().zip(v.values()) {
            *s = f.eval(*s + vv);
        }
        let next = duhamel_solve(&source, &zero, modes)?;
        let diff = next
            .values()
            .iter()
            .zip(w.values())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        if let Some(&prev) = differences.last() {
            let ratio = if prev > 0.0 { diff / prev } else { 0.0 };
            ratios.push(ratio);
            above_one = if ratio > 1.0 { above_one + 1 } else { 0 };
            if above_one >= 3 {
                no_contraction = true;
            }
        }
        differences.push(diff);
        w = next;
        if diff <= tol {
            converged = true;
            break;
        }
        if !diff.is_finite() {
            break;
        }
    }
    Ok(PicardResult {
        w,
        differences,
        ratios,
        converged,
        no_contraction,
    })
}
