//! Iteration error functionals, the decay-bound check, decay-rate fits and
//! barrier bounds.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Decomposition;
use crate::solver::SpaceTimeField;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Convex weight `P` applied to the error inside the weighted norm.
#[derive(Clone)]
pub struct ControllingFunction {
    name: String,
    eval: ScalarFn,
    d1: ScalarFn,
    d2: ScalarFn,
    k: ScalarFn,
}

impl fmt::Debug for ControllingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ControllingFunction({})", self.name)
    }
}

impl ControllingFunction {
    pub fn custom(
        name: &str,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        k_of: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            k: Arc::new(k_of),
        }
    }

    /// `x²`, with `x P'/P ≡ 2`.
    pub fn square() -> Self {
        Self::custom("x^2", |x| x * x, |x| 2.0 * x, |_| 2.0, |_| 2.0)
    }

    /// `x⁴`, with `x P'/P ≡ 4`.
    pub fn quartic() -> Self {
        Self::custom(
            "x^4",
            |x| x.powi(4),
            |x| 4.0 * x.powi(3),
            |x| 12.0 * x * x,
            |_| 4.0,
        )
    }

    /// `|x|`: not twice differentiable at 0.
    pub fn abs() -> Self {
        Self::custom(
            "|x|",
            f64::abs,
            f64::signum,
            |x| if x == 0.0 { f64::NAN } else { 0.0 },
            |_| 1.0,
        )
    }

    /// `x² + 1`: positive at 0.
    pub fn shifted_square() -> Self {
        Self::custom(
            "x^2+1",
            |x| x * x + 1.0,
            |x| 2.0 * x,
            |_| 2.0,
            |m| 2.0 * m * m / (m * m + 1.0),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        (self.d1)(x)
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }

    /// `K(M)` bounding `|x P'(x) / P(x)|` on `0 < |x| ≤ M`.
    pub fn k_of(&self, m: f64) -> f64 {
        (self.k)(m)
    }

    /// Checks the four structural conditions on a sample of `[-10³, 10³]`;
    /// condition (iv) is checked for `|x| ≤ m`. Every failure is listed.
    pub fn validate(&self, m: f64) -> Result<()> {
        let mut samples = vec![0.0];
        for i in 0..=600 {
            let x = 10f64.powf(-3.0 + 6.0 * i as f64 / 600.0);
            samples.push(x);
            samples.push(-x);
        }
        for i in 1..=200 {
            let x = m * i as f64 / 200.0;
            samples.push(x);
            samples.push(-x);
        }
        let mut issues = Vec::new();
        let mut note = |cond: &str, x: f64, what: String| {
            if issues.len() < 16 {
                issues.push(format!("({cond}) at x = {x}: {what}"));
            }
        };
        for &x in &samples {
            let (p, d2) = (self.eval(x), self.deriv2(x));
            if !p.is_finite() || !self.deriv(x).is_finite() || !d2.is_finite() {
                note("i", x, "P is not twice continuously differentiable".into());
            }
            if p < 0.0 {
                note("ii", x, format!("P = {p} < 0"));
            }
            if d2 < 0.0 {
                note("ii", x, format!("P'' = {d2} < 0"));
            }
            if x == 0.0 {
                if p != 0.0 {
                    note("iii", x, format!("P(0) = {p}"));
                }
                if self.deriv(0.0) != 0.0 {
                    note("iii", x, format!("P'(0) = {}", self.deriv(0.0)));
                }
            } else {
                if !(p > 0.0) {
                    note("iii", x, format!("P = {p} vanishes away from 0"));
                }
                if x.abs() <= m && p > 0.0 {
                    let ratio = (x * self.deriv(x) / p).abs();
                    let k = self.k_of(m);
                    if ratio > k * (1.0 + 1e-12) {
                        note("iv", x, format!("|x P'/P| = {ratio} exceeds K({m}) = {k}"));
                    }
                }
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Param(format!(
                "controlling function {} rejected: {}",
                self.name,
                issues.join("; ")
            )))
        }
    }
}

/// `e = iterate - reference`, nodewise.
pub fn error_field(iterate: &SpaceTimeField, reference: &SpaceTimeField) -> Result<SpaceTimeField> {
    iterate.check_same_layout(reference)?;
    let values = iterate
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| a - b)
        .collect();
    let mut out = SpaceTimeField::from_values(iterate.grid().clone(), iterate.dt(), values)?;
    out.diverged = iterate.diverged.or(reference.diverged);
    Ok(out)
}

/// `max_j max_{n,i} P(e_j) e^{-γ t_n}`; infinite when any error is not finite.
pub fn weighted_error(errors: &[SpaceTimeField], ctrl: &ControllingFunction, gamma: f64) -> f64 {
    let mut out = 0.0f64;
    for e in errors {
        for n in 0..e.levels() {
            let w = (-gamma * e.time(n)).exp();
            for &v in e.level(n) {
                if !v.is_finite() {
                    return f64::INFINITY;
                }
                out = out.max(ctrl.eval(v) * w);
            }
        }
    }
    out
}

/// Offsets `j` in `Ē_k = max_j E_{k+j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowConvention {
    /// `j ∈ {0, .., I-2}`, so that `Ē_k ≥ E_k`.
    #[default]
    Lagging,
    /// `j ∈ {1, .., I-1}`.
    Literal,
}

impl WindowConvention {
    pub fn offsets(self, bands: usize) -> std::ops::RangeInclusive<usize> {
        let span = bands.max(2) - 2;
        match self {
            WindowConvention::Lagging => 0..=span,
            WindowConvention::Literal => 1..=span + 1,
        }
    }
}

pub fn windowed_error(
    series: &[f64],
    bands: usize,
    k: usize,
    window: WindowConvention,
) -> Result<f64> {
    let offsets = window.offsets(bands);
    let last = k + offsets.end();
    if last >= series.len() {
        return Err(Error::Range(format!(
            "window at k = {k} needs E_{last}, only {} recorded",
            series.len()
        )));
    }
    Ok(offsets
        .map(|j| series[k + j])
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `Ē_k` for every `k` whose window is fully recorded.
pub fn windowed_series(series: &[f64], bands: usize, window: WindowConvention) -> Vec<f64> {
    let end = *window.offsets(bands).end();
    (0..series.len().saturating_sub(end))
        .map(|k| windowed_error(series, bands, k, window).expect("in range"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub value: f64,
    pub bound: f64,
    /// `bound / value`; infinite when the value is 0.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub epsilon_bar: f64,
    /// Per-window reading `Ē_n ≤ Ē_0 e^{-⌊n/(I-1)⌋ ε̄}`.
    pub holds: bool,
    pub first_failure: Option<usize>,
    /// Stronger per-sweep reading `Ē_n ≤ Ē_0 e^{-n ε̄}`.
    pub holds_per_sweep: bool,
    pub first_failure_per_sweep: Option<usize>,
    pub per_window: Vec<BoundRow>,
    pub per_sweep: Vec<BoundRow>,
}

const BOUND_SLACK: f64 = 1e-9;

fn bound_rows(windowed: &[f64], rate: impl Fn(usize) -> f64) -> (Vec<BoundRow>, Option<usize>) {
    let e0 = windowed.first().copied().unwrap_or(0.0);
    let mut failure = None;
    let rows = windowed
        .iter()
        .enumerate()
        .map(|(n, &value)| {
            let bound = e0 * (-rate(n)).exp();
            let margin = if value == 0.0 {
                f64::INFINITY
            } else {
                bound / value
            };
            if !(margin >= 1.0 - BOUND_SLACK) && failure.is_none() {
                failure = Some(n);
            }
            BoundRow {
                n,
                value,
                bound,
                margin,
            }
        })
        .collect();
    (rows, failure)
}

/// Checks `Ē_n ≤ Ē_0 e^{-n ε̄}` under both readings of the exponent.
pub fn check_linear_bound(windowed: &[f64], epsilon_bar: f64, bands: usize) -> BoundReport {
    let per_window_len = (bands.max(2) - 1) as f64;
    let (per_window, first_failure) = bound_rows(windowed, |n| {
        (n as f64 / per_window_len).floor() * epsilon_bar
    });
    let (per_sweep, first_failure_per_sweep) = bound_rows(windowed, |n| n as f64 * epsilon_bar);
    BoundReport {
        epsilon_bar,
        holds: first_failure.is_none(),
        first_failure,
        holds_per_sweep: first_failure_per_sweep.is_none(),
        first_failure_per_sweep,
        per_window,
        per_sweep,
    }
}

/// Which points enter a decay-rate fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitWindow {
    pub burn_in: usize,
    /// Last iteration included (inclusive); `None` means all.
    pub last: Option<usize>,
    /// Values at or below this are treated as converged and excluded.
    pub floor: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            burn_in: 2,
            last: Some(15),
            floor: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `-slope` of `ln Ē_n` against `n`.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub used: Vec<usize>,
    pub excluded: Vec<usize>,
}

pub fn fit_decay_rate(series: &[f64], window: &FitWindow) -> Result<DecayFit> {
    let last = window
        .last
        .unwrap_or(usize::MAX)
        .min(series.len().saturating_sub(1));
    let (mut used, mut excluded) = (Vec::new(), Vec::new());
    for n in window.burn_in..=last {
        if n >= series.len() {
            break;
        }
        let v = series[n];
        if v > window.floor && v.is_finite() && v > 0.0 {
            used.push(n);
        } else {
            excluded.push(n);
        }
    }
    if used.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs 5 positive points after burn-in {}, got {}",
            window.burn_in,
            used.len()
        )));
    }
    let m = used.len() as f64;
    let xs: Vec<f64> = used.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = used.iter().map(|&n| series[n].ln()).collect();
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ym).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    Ok(DecayFit {
        rate: -slope,
        intercept,
        r_squared,
        used,
        excluded,
    })
}

/// Error history of one relaxation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSeries {
    pub gamma: f64,
    /// `‖e_j^k‖∞` per iteration and band.
    pub band_sup: Vec<Vec<f64>>,
    /// `E_k`.
    pub weighted: Vec<f64>,
    pub diverged: Vec<bool>,
}

impl ErrorSeries {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            band_sup: Vec::new(),
            weighted: Vec::new(),
            diverged: Vec::new(),
        }
    }

    /// Records iterate `k = len()` against the band restrictions of `reference`.
    pub fn record(
        &mut self,
        fields: &[SpaceTimeField],
        reference: &SpaceTimeField,
        decomp: &Decomposition,
        ctrl: &ControllingFunction,
    ) -> Result<()> {
        let mut errors = Vec::with_capacity(fields.len());
        for (field, band) in fields.iter().zip(decomp.bands()) {
            errors.push(error_field(
                field,
                &reference.restrict_axial(band.lo, band.hi),
            )?);
        }
        self.band_sup.push(errors.iter().map(sup_abs).collect());
        self.weighted
            .push(weighted_error(&errors, ctrl, self.gamma));
        self.diverged
            .push(fields.iter().any(|f| f.diverged.is_some()));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weighted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weighted.is_empty()
    }

    pub fn windowed(&self, bands: usize, window: WindowConvention) -> Vec<f64> {
        windowed_series(&self.weighted, bands, window)
    }
}

fn sup_abs(e: &SpaceTimeField) -> f64 {
    e.values().iter().fold(0.0f64, |a, v| {
        if v.is_finite() {
            a.max(v.abs())
        } else {
            f64::INFINITY
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandBarrier {
    pub band: usize,
    /// `min u + M`; negative means the lower bound is violated.
    pub lower_slack: f64,
    /// `min (φ_M - u)` over band nodes.
    pub upper_slack: f64,
    /// `max φ_M - max u`.
    pub upper_slack_max: f64,
    /// `(level, node)` of the worst lower and upper readings.
    pub lower_at: (usize, usize),
    pub upper_at: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub tolerance: f64,
    /// `-M - tol ≤ u ≤ φ_M + tol` nodewise on every band.
    pub passed: bool,
    /// `-M - tol ≤ u ≤ max φ_M + tol` on every band.
    pub passed_max: bool,
    pub bands: Vec<BandBarrier>,
}

pub const BARRIER_TOL: f64 = 1e-6;

pub fn barrier_check(
    fields: &[SpaceTimeField],
    decomp: &Decomposition,
    phi: &SpaceTimeField,
    m_level: f64,
) -> Result<BarrierReport> {
    let phi_max = phi.max_value();
    let mut bands = Vec::with_capacity(fields.len());
    let (mut passed, mut passed_max) = (true, true);
    for (j, (field, band)) in fields.iter().zip(decomp.bands()).enumerate() {
        let local = phi.restrict_axial(band.lo, band.hi);
        field.check_same_layout(&local)?;
        let nodes = field.nodes();
        let (mut lower, mut upper, mut top) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        let (mut lower_at, mut upper_at) = ((0, 0), (0, 0));
        for (idx, (&u, &b)) in field.values().iter().zip(local.values()).enumerate() {
            let at = (idx / nodes, idx % nodes);
            let u = if u.is_finite() { u } else { f64::INFINITY };
            if u + m_level < lower {
                lower = u + m_level;
                lower_at = at;
            }
            if b - u < upper {
                upper = b - u;
                upper_at = at;
            }
            top = top.max(u);
        }
        passed &= lower >= -BARRIER_TOL && upper >= -BARRIER_TOL;
        passed_max &= lower >= -BARRIER_TOL && phi_max - top >= -BARRIER_TOL;
        bands.push(BandBarrier {
            band: j,
            lower_slack: lower,
            upper_slack: upper,
            upper_slack_max: phi_max - top,
            lower_at,
            upper_at,
        });
    }
    Ok(BarrierReport {
        tolerance: BARRIER_TOL,
        passed,
        passed_max,
        bands,
    })
}
