use crate::model::Grid;

/// Second-order centred Laplacian on a tensor grid, applied at interior nodes.
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    strides: Vec<usize>,
    inv_h2: Vec<f64>,
    interior: Vec<usize>,
    shape: Vec<usize>,
}

impl Stencil {
    pub fn new(grid: &Grid) -> Self {
        let interior = (0..grid.len()).filter(|&i| !grid.is_boundary(i)).collect();
        Self {
            strides: grid.strides(),
            inv_h2: grid.spacing.iter().map(|h| 1.0 / (h * h)).collect(),
            interior,
            shape: grid.shape.clone(),
        }
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// `sum_k 2 / h_k²`, the diagonal weight of `-Δ`.
    pub fn diag_weight(&self) -> f64 {
        2.0 * self.inv_h2.iter().sum::<f64>()
    }

    #[inline]
    pub fn laplacian_at(&self, u: &[f64], i: usize) -> f64 {
        let mut acc = 0.0;
        for (s, w) in self.strides.iter().zip(&self.inv_h2) {
            acc += (u[i + s] - 2.0 * u[i] + u[i - s]) * w;
        }
        acc
    }

    /// Sum of neighbour values weighted by `1 / h²`, skipping boundary
    /// neighbours (their correction is zero).
    #[inline]
    fn neighbour_sum_interior(&self, v: &[f64], mask: &[bool], i: usize) -> f64 {
        let mut acc = 0.0;
        for (s, w) in self.strides.iter().zip(&self.inv_h2) {
            if mask[i + s] {
                acc += v[i + s] * w;
            }
            if mask[i - s] {
                acc += v[i - s] * w;
            }
        }
        acc
    }

    pub fn is_1d(&self) -> bool {
        self.shape.len() == 1
    }
}

/// Solves `(diag - θ L_off) x = rhs` on interior nodes, where `diag` is given
/// per node and `L_off` is the off-diagonal part of the Laplacian. Boundary
/// entries of `x` are left at zero. Returns `false` on breakdown.
pub(crate) struct ImplicitSystem<'a> {
    pub stencil: &'a Stencil,
    pub theta: f64,
    mask: Vec<bool>,
    work: Vec<f64>,
}

impl<'a> ImplicitSystem<'a> {
    pub fn new(stencil: &'a Stencil, theta: f64, nodes: usize) -> Self {
        let mut mask = vec![false; nodes];
        for &i in stencil.interior() {
            mask[i] = true;
        }
        Self {
            stencil,
            theta,
            mask,
            work: Vec::new(),
        }
    }

    pub fn solve(&mut self, diag: &[f64], rhs: &[f64], x: &mut [f64]) -> bool {
        if self.stencil.is_1d() {
            self.thomas(diag, rhs, x)
        } else {
            self.pcg(diag, rhs, x)
        }
    }

    fn thomas(&mut self, diag: &[f64], rhs: &[f64], x: &mut [f64]) -> bool {
        let n = x.len();
        if n < 3 {
            return true;
        }
        let off = -self.theta * self.stencil.inv_h2[0];
        let m = n - 2;
        self.work.clear();
        self.work.resize(2 * m, 0.0);
        let (c, d) = self.work.split_at_mut(m);
        let mut b = diag[1];
        if b == 0.0 || !b.is_finite() {
            return false;
        }
        c[0] = off / b;
        d[0] = rhs[1] / b;
        for k in 1..m {
            b = diag[k + 1] - off * c[k - 1];
            if b == 0.0 || !b.is_finite() {
                return false;
            }
            c[k] = off / b;
            d[k] = (rhs[k + 1] - off * d[k - 1]) / b;
        }
        x[0] = 0.0;
        x[n - 1] = 0.0;
        x[m] = d[m - 1];
        for k in (0..m - 1).rev() {
            x[k + 1] = d[k] - c[k] * x[k + 2];
        }
        true
    }

    fn apply(&self, diag: &[f64], v: &[f64], out: &mut [f64]) {
        for &i in self.stencil.interior() {
            out[i] =
                diag[i] * v[i] - self.theta * self.stencil.neighbour_sum_interior(v, &self.mask, i);
        }
    }

    /// Jacobi-preconditioned conjugate gradients to relative residual 1e-12.
    fn pcg(&mut self, diag: &[f64], rhs: &[f64], x: &mut [f64]) -> bool {
        let n = x.len();
        let interior = self.stencil.interior();
        x.iter_mut().for_each(|v| *v = 0.0);
        let mut r = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut ap = vec![0.0; n];
        let mut rhs_norm = 0.0;
        for &i in interior {
            r[i] = rhs[i];
            rhs_norm += rhs[i] * rhs[i];
        }
        let rhs_norm = rhs_norm.sqrt();
        if rhs_norm == 0.0 {
            return true;
        }
        for &i in interior {
            if !(diag[i] > 0.0) {
                return false;
            }
            z[i] = r[i] / diag[i];
            p[i] = z[i];
        }
        let mut rz: f64 = interior.iter().map(|&i| r[i] * z[i]).sum();
        let max_iter = 10 * interior.len() + 100;
        for _ in 0..max_iter {
            self.apply(diag, &p, &mut ap);
            let pap: f64 = interior.iter().map(|&i| p[i] * ap[i]).sum();
            if !(pap > 0.0) {
                return false;
            }
            let alpha = rz / pap;
            let mut rr = 0.0;
            for &i in interior {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                rr += r[i] * r[i];
            }
            if rr.sqrt() <= 1e-12 * rhs_norm {
                return true;
            }
            for &i in interior {
                z[i] = r[i] / diag[i];
            }
            let rz_new: f64 = interior.iter().map(|&i| r[i] * z[i]).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for &i in interior {
                p[i] = z[i] + beta * p[i];
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DomainSpec;

    fn check_solution(grid: &Grid) {
        let stencil = Stencil::new(grid);
        let theta = 0.01;
        let n = grid.len();
        let diag: Vec<f64> = (0..n)
            .map(|i| 1.0 + theta * stencil.diag_weight() + 0.01 * (i % 3) as f64)
            .collect();
        let truth: Vec<f64> = (0..n)
            .map(|i| {
                if grid.is_boundary(i) {
                    0.0
                } else {
                    ((i * 7) % 11) as f64 - 5.0
                }
            })
            .collect();
        let mut sys = ImplicitSystem::new(&stencil, theta, n);
        let mut rhs = vec![0.0; n];
        sys.apply(&diag, &truth, &mut rhs);
        let mut x = vec![0.0; n];
        assert!(sys.solve(&diag, &rhs, &mut x));
        for i in 0..n {
            assert!(
                (x[i] - truth[i]).abs() < 1e-9,
                "node {i}: {} vs {}",
                x[i],
                truth[i]
            );
        }
    }

    #[test]
    fn tridiagonal_solve_recovers_vector() {
        check_solution(&DomainSpec::interval(0.0, 1.0, 17, 1, 1.0).unwrap().grid());
    }

    #[test]
    fn cg_solve_recovers_vector() {
        let spec = DomainSpec::new(
            vec![(0.0, 1.0), (0.0, 2.0)],
            (0.0, 1.0),
            vec![6, 9],
            8,
            1,
            1.0,
        )
        .unwrap();
        check_solution(&spec.grid());
    }

    #[test]
    fn laplacian_of_quadratic_is_exact() {
        let spec = DomainSpec::new(vec![(0.0, 1.0)], (0.0, 1.0), vec![7], 9, 1, 1.0).unwrap();
        let grid = spec.grid();
        let stencil = Stencil::new(&grid);
        let mut x = [0.0; 2];
        let u: Vec<f64> = (0..grid.len())
            .map(|i| {
                grid.coords(i, &mut x);
                x[0] * x[0] + 3.0 * x[1] * x[1]
            })
            .collect();
        for &i in stencil.interior() {
            assert!((stencil.laplacian_at(&u, i) - 8.0).abs() < 1e-9);
        }
    }
}
