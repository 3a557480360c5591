//! One-dimensional maximisation and monotone root finding.

use crate::error::{Error, Result};

const SAMPLES: usize = 4096;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of `g` on `[a, b]`.
pub fn golden_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
    }
    if gc >= gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

/// `max_{|ζ| ≤ m} |f(ζ)|` by dense sampling plus golden-section refinement
/// around the best sample. Endpoints are always sampled.
pub fn max_abs_on(f: impl Fn(f64) -> f64, m: f64) -> f64 {
    if m == 0.0 {
        return f(0.0).abs();
    }
    let g = |x: f64| f(x).abs();
    let step = 2.0 * m / (SAMPLES - 1) as f64;
    let node = |i: usize| {
        if i == SAMPLES - 1 {
            m
        } else {
            -m + i as f64 * step
        }
    };
    let (mut best_i, mut best) = (0, g(-m));
    for i in 1..SAMPLES {
        let v = g(node(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = node(best_i.saturating_sub(1));
    let hi = node((best_i + 1).min(SAMPLES - 1));
    let (_, refined) = golden_max(g, lo, hi);
    best.max(refined)
}

/// Solves `g(x) = target` for nondecreasing `g` with `g(lo) ≤ target ≤ g(hi)`.
pub fn bisect_increasing(
    g: impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    target: f64,
) -> Result<f64> {
    if !(lo <= hi) {
        return Err(Error::Domain(format!("empty bracket [{lo}, {hi}]")));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi.abs() {
            break;
        }
        if g(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_maximum() {
        let v = max_abs_on(|x| x * (1.0 - x) * (x + 1.0) - 0.1, 1.0);
        // x - x³ - 0.1 has |·| max at x = -1/√3 on [-1, 1]
        let x = -1.0 / 3f64.sqrt();
        let exact = (x - x * x * x - 0.1).abs();
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn endpoint_maximum() {
        assert_eq!(max_abs_on(|x| x * x, 1.0), 1.0);
        assert_eq!(max_abs_on(|x| 2.0 * x, 1.5), 3.0);
    }

    #[test]
    fn bisection() {
        let r = bisect_increasing(|x| Ok(x * x * x), 0.0, 4.0, 8.0).unwrap();
        assert!((r - 2.0).abs() < 1e-14);
    }
}
