//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub const ABS_TOL: f64 = 1e-12;
pub const REL_TOL: f64 = 1e-14;
pub const MAX_SUBINTERVALS: usize = 1_000_000;

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// `∫_a^b f` until the error estimate is below `tol` and below
/// `REL_TOL · |∫|`. The endpoints are never evaluated.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (value, error) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let (mut total, mut err) = (value, error);
    let mut panels = 1;
    while err > tol || err > REL_TOL * total.abs() {
        if !total.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if panels >= MAX_SUBINTERVALS {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}] after {panels} subintervals (error estimate {err:e})"
            )));
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature(format!(
                "subinterval at {mid} cannot be split further (error estimate {err:e})"
            )));
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        panels += 1;
        // periodic resummation keeps the running totals honest
        if panels % 4096 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
        }
    }
    let mut parts: Vec<&Panel> = heap.iter().collect();
    parts.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(parts.iter().map(|p| p.value).sum())
}

/// `∫_0^∞ f` through `ζ = s / (1 - s)`.
pub fn integrate_half_line(f: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    integrate(
        |s| {
            let w = 1.0 - s;
            f(s / w) / (w * w)
        },
        0.0,
        1.0,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        assert!((integrate(|x| x * x, 0.0, 3.0, 1e-13).unwrap() - 9.0).abs() < 1e-13);
        assert!(
            (integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-13).unwrap() - 2.0).abs() < 1e-13
        );
    }

    #[test]
    fn endpoint_singularity() {
        let v = integrate(|x| x.powf(-0.5), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn half_line() {
        let v = integrate_half_line(|x| 1.0 / (1.0 + x * x), 1e-13).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn divergent_integral_is_reported() {
        assert!(integrate(|x| 1.0 / x, 0.0, 1.0, 1e-12).is_err());
    }
}
