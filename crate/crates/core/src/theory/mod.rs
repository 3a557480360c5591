//! Closed-form constants: existence times, a-priori bounds and the
//! contraction constant of the waveform relaxation.

mod quad;
mod search;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Decomposition, DomainSpec, Nonlinearity};
use crate::monitor::ControllingFunction;

pub use quad::{integrate, integrate_half_line};
pub use search::{bisect_increasing, golden_max, max_abs_on};

/// Exponents derived from the growth power `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    pub p: f64,
    pub p1: f64,
    pub alpha: f64,
    pub l1: f64,
    pub l2: f64,
}

pub fn growth_params(p: f64) -> Result<GrowthParams> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Param(format!("growth power p must be > 1, got {p}")));
    }
    let p1 = 3.0 * (p - 1.0) / (4.0 * p);
    let alpha = 0.5 * (1.0 / (p - 1.0) - 3.0 / (4.0 * p));
    let l1 = 0.5 * (1.0 + 1.0 / p1);
    let l2 = l1 / (l1 - 1.0);
    debug_assert!(l1 * p1 < 1.0);
    Ok(GrowthParams {
        p,
        p1,
        alpha,
        l1,
        l2,
    })
}

impl GrowthParams {
    /// `1 - (p1 + pα)`, in the cancellation-free form `(p+3)(p-2) / (8p(p-1))`.
    pub fn tau_denominator(&self) -> f64 {
        let p = self.p;
        (p + 3.0) * (p - 2.0) / (8.0 * p * (p - 1.0))
    }

    /// `1 + α - pα - p1 = (p+3) / (8p)`.
    pub fn time_exponent(&self) -> f64 {
        (self.p + 3.0) / (8.0 * self.p)
    }

    /// `C_f max(1, 2^{p-2})`.
    pub fn growth_factor(&self, c_f: f64) -> f64 {
        c_f * 1f64.max(2f64.powf(self.p - 2.0))
    }

    fn check_holder(&self) -> Result<()> {
        if self.l1 * self.p1 >= 1.0 || self.l1 <= 1.0 {
            return Err(Error::Param(format!(
                "need l1 > 1 and l1 p1 < 1, got l1 = {}, l1 p1 = {}",
                self.l1,
                self.l1 * self.p1
            )));
        }
        Ok(())
    }
}

/// Local existence time `τ(r, m)`.
pub fn tau(r: f64, m: f64, gp: &GrowthParams, c_f: f64) -> Result<f64> {
    let den = gp.tau_denominator();
    if !(den > 0.0) {
        return Err(Error::Param(format!(
            "tau needs 1 - (p1 + p alpha) > 0; it equals {den} at p = {}, so tau is undefined for p <= 2",
            gp.p
        )));
    }
    if !(r >= 0.0 && m >= 0.0) {
        return Err(Error::Domain(format!(
            "tau needs r, m >= 0, got r = {r}, m = {m}"
        )));
    }
    if r + m == 0.0 {
        return Err(Error::Domain(
            "tau(0, 0) is infinite; cap it with the min(.., 1) clause".into(),
        ));
    }
    let base = (4.0 * PI).powf(-gp.p1) * 2f64.powf(gp.p1 + gp.p * gp.alpha) / den
        * gp.growth_factor(c_f)
        * 4.0
        * (r + m);
    Ok(base.powf(-8.0 * gp.p / (3.0 + gp.p)))
}

pub fn r1(m_level: f64, f: &Nonlinearity, measure: f64, t0: f64, gp: &GrowthParams) -> f64 {
    let max_f = max_abs_on(|z| f.eval(z), m_level);
    r1_from_max(max_f, measure, t0, gp)
}

fn r1_from_max(max_f: f64, measure: f64, t0: f64, gp: &GrowthParams) -> f64 {
    2.0 * max_f * measure.sqrt() * t0.powf((gp.p + 3.0) / (4.0 * gp.p)) / gp.p1
}

pub fn r2(f_of_v_norm: f64, t0: f64, gp: &GrowthParams) -> f64 {
    2.0 * t0.powf((gp.p + 3.0) / (4.0 * gp.p)) / gp.p1 * f_of_v_norm
}

/// The saturating function `G(r; T, m1, m2)` and its inverse.
#[derive(Debug, Clone, Copy)]
pub struct GFunction {
    scale: f64,
    c: f64,
    m1: f64,
    m2: f64,
    gp: GrowthParams,
}

impl GFunction {
    pub fn new(horizon: f64, m1: f64, m2: f64, gp: &GrowthParams, c_f: f64) -> Result<Self> {
        gp.check_holder()?;
        if !(horizon > 0.0) {
            return Err(Error::Param(format!(
                "G horizon must be positive, got {horizon}"
            )));
        }
        if !(m1 >= 0.0 && m2 >= 0.0) {
            return Err(Error::Param(format!("G needs m1, m2 >= 0, got {m1}, {m2}")));
        }
        let e = gp.p1 * gp.l1;
        let inner = (4.0 * PI).powf(-e) * horizon.powf(1.0 - e) / (1.0 - e);
        Ok(Self {
            scale: inner.powf(-gp.l2 / gp.l1),
            c: gp.growth_factor(c_f),
            m1,
            m2,
            gp: *gp,
        })
    }

    fn integrand(&self, z: f64) -> f64 {
        let l2 = self.gp.l2;
        let inner =
            self.c * (self.m1 + z.powf((self.gp.p - 1.0) / l2)) * z.powf(1.0 / l2) + self.m2;
        inner.powf(-l2)
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("G needs r >= 0, got {r}")));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        if self.m2 == 0.0 {
            return Err(Error::Quadrature(format!(
                "with m2 = 0 the G integrand behaves like {} near 0 and is not integrable",
                if self.m1 > 0.0 { "1/zeta" } else { "zeta^-p" }
            )));
        }
        let raw = integrate(|z| self.integrand(z), 0.0, r, quad::ABS_TOL)?;
        Ok(self.scale * raw)
    }

    /// `lim_{r→∞} G(r)`, finite because the integrand decays like `ζ^{-p}`.
    pub fn supremum(&self) -> Result<f64> {
        if self.m2 == 0.0 {
            return self.value(1.0);
        }
        let raw = integrate_half_line(|z| self.integrand(z), quad::ABS_TOL)?;
        Ok(self.scale * raw)
    }

    pub fn inverse(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("G inverse needs t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let sup = self.supremum()?;
        if t >= sup {
            return Err(Error::Saturation {
                requested: t,
                supremum: sup,
            });
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while self.value(hi)? < t {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::Saturation {
                    requested: t,
                    supremum: sup,
                });
            }
        }
        bisect_increasing(|r| self.value(r), lo, hi, t)
    }
}

pub fn g_of_r(r: f64, horizon: f64, m1: f64, m2: f64, gp: &GrowthParams, c_f: f64) -> Result<f64> {
    GFunction::new(horizon, m1, m2, gp, c_f)?.value(r)
}

pub fn g_inverse(
    t: f64,
    horizon: f64,
    m1: f64,
    m2: f64,
    gp: &GrowthParams,
    c_f: f64,
) -> Result<f64> {
    GFunction::new(horizon, m1, m2, gp, c_f)?.inverse(t)
}

/// Power carried by the trailing `G⁻¹(T_*)` factor of `M_*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MStarVariant {
    /// `(p - 1) / l2`, the exponent in the closed form.
    #[default]
    AsPrinted,
    /// `1 / l2`.
    Restated,
}

#[derive(Debug, Clone)]
pub struct MStarInputs<'a> {
    pub t_star: f64,
    pub m_level: f64,
    pub measure: f64,
    pub f: &'a Nonlinearity,
    pub gp: GrowthParams,
    pub variant: MStarVariant,
}

/// `(m1, m2) = (M^{p-1} m^{(p-1)/(2p)}, m^{1/2} max_{|ζ|≤M} |f|)`.
pub fn level_terms(m_level: f64, measure: f64, max_f: f64, gp: &GrowthParams) -> (f64, f64) {
    let p = gp.p;
    (
        m_level.powf(p - 1.0) * measure.powf((p - 1.0) / (2.0 * p)),
        measure.sqrt() * max_f,
    )
}

/// The a-priori sup bound `M_*`. `G` is evaluated with horizon `T_*`.
pub fn m_star(inputs: &MStarInputs<'_>) -> Result<f64> {
    let gp = &inputs.gp;
    let max_f = max_abs_on(|z| inputs.f.eval(z), inputs.m_level);
    let (m1, m2) = level_terms(inputs.m_level, inputs.measure, max_f, gp);
    let ginv = g_inverse(inputs.t_star, inputs.t_star, m1, m2, gp, inputs.f.c_f())?;
    let e = match inputs.variant {
        MStarVariant::AsPrinted => (gp.p - 1.0) / gp.l2,
        MStarVariant::Restated => 1.0 / gp.l2,
    };
    let lead = (4.0 * inputs.t_star / PI.powi(3)).powf(0.25);
    Ok(lead
        * (gp.growth_factor(inputs.f.c_f())
            * (ginv.powf((gp.p - 1.0) / gp.l2) + m1)
            * ginv.powf(e)
            + m2))
}

/// `T_* = min(T0, 1, τ(R1, M^{p-1} m^{(p-1)/(2p)}))`.
pub fn t_star(
    m_level: f64,
    f: &Nonlinearity,
    measure: f64,
    t0: f64,
    gp: &GrowthParams,
) -> Result<f64> {
    let max_f = max_abs_on(|z| f.eval(z), m_level);
    let r = r1_from_max(max_f, measure, t0, gp);
    let (m1, _) = level_terms(m_level, measure, max_f, gp);
    Ok(t0.min(1.0).min(tau(r, m1, gp, f.c_f())?))
}

/// Common existence time of all iterates: `R1` and the `τ` second argument
/// are formed per band at level `M_underbar`.
pub fn t_star_common(
    m_underbar: f64,
    band_measures: &[f64],
    f: &Nonlinearity,
    gp: &GrowthParams,
    t0: f64,
    t_star: f64,
) -> Result<f64> {
    if band_measures.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::Param("band measures must be positive".into()));
    }
    let max_f = max_abs_on(|z| f.eval(z), m_underbar);
    let mut out = t0.min(1.0).min(t_star);
    for &mj in band_measures {
        let r = r1_from_max(max_f, mj, t0, gp);
        let (m1, _) = level_terms(m_underbar, mj, max_f, gp);
        out = out.min(tau(r, m1, gp, f.c_f())?);
    }
    Ok(out)
}

/// `√(γ/2) Π_{j<I} S_j / Π_{1<j<I} L_j`.
pub fn epsilon_bar(gamma: f64, decomp: &Decomposition) -> Result<f64> {
    epsilon_bar_from(gamma, &decomp.overlaps(), &decomp.lengths())
}

pub fn epsilon_bar_from(gamma: f64, overlaps: &[f64], lengths: &[f64]) -> Result<f64> {
    let count = lengths.len();
    if count < 2 {
        return Err(Error::Geometry(format!(
            "the contraction constant needs at least 2 bands, got {count}"
        )));
    }
    if overlaps.len() != count - 1 {
        return Err(Error::Geometry(format!(
            "{} overlaps for {count} bands",
            overlaps.len()
        )));
    }
    if !(gamma >= 0.0) {
        return Err(Error::Param(format!("gamma must be >= 0, got {gamma}")));
    }
    let num: f64 = overlaps.iter().product();
    let den: f64 = lengths[1..count - 1].iter().product();
    Ok((gamma / 2.0).sqrt() * num / den)
}

/// Smallest certified weight `γ = 2 (1 + margin) K(C2) max_{|ζ|≤C2} |f'|`.
pub fn choose_gamma(
    error_bound: f64,
    f: &Nonlinearity,
    ctrl: &ControllingFunction,
    margin: f64,
) -> Result<f64> {
    if !(error_bound > 0.0) {
        return Err(Error::Param(format!(
            "error bound C2 must be positive, got {error_bound}"
        )));
    }
    if !(margin >= 0.0) {
        return Err(Error::Param(format!(
            "gamma margin must be >= 0, got {margin}"
        )));
    }
    let slope = max_abs_on(|z| f.deriv(z), error_bound);
    Ok(2.0 * (1.0 + margin) * ctrl.k_of(error_bound) * slope)
}

/// Everything needed to evaluate a [`TheoryReport`].
#[derive(Debug, Clone)]
pub struct TheoryInputs {
    pub f: Nonlinearity,
    pub spec: DomainSpec,
    pub decomp: Decomposition,
    /// Bound `M` on the data.
    pub m_level: f64,
    pub t0: f64,
    /// Max of `φ_M` on all band boundaries, when a barrier solve is available.
    pub m_underbar: Option<f64>,
    pub error_bound: f64,
    pub margin: f64,
    pub ctrl: ControllingFunction,
    pub variant: MStarVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub nonlinearity: String,
    pub p: f64,
    pub c_f: f64,
    pub dimension: usize,
    pub m_level: f64,
    pub t0: f64,
    pub measure: f64,
    pub band_measures: Vec<f64>,
    pub lengths: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub max_abs_f: f64,
    pub f_of_v_norm: f64,
    pub m_underbar: Option<f64>,
    pub error_bound: f64,
    pub margin: f64,
    pub controlling_function: String,
    pub k_of_error_bound: f64,
    pub m_star_variant: MStarVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityError {
    pub quantity: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub growth: Option<GrowthParams>,
    pub tau_denominator: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub tau: Option<f64>,
    pub t_star: Option<f64>,
    pub t_star_common: Option<f64>,
    pub m_star: Option<f64>,
    pub gamma: Option<f64>,
    pub epsilon_bar: Option<f64>,
    pub provenance: Provenance,
    pub notes: Vec<String>,
    pub errors: Vec<QuantityError>,
}

impl TheoryReport {
    pub fn compute(inputs: &TheoryInputs) -> Self {
        let f = &inputs.f;
        let measure = inputs.spec.measure();
        let max_f = max_abs_on(|z| f.eval(z), inputs.m_level);
        let ctrl = &inputs.ctrl;
        let mut errors = Vec::new();
        let provenance = Provenance {
            nonlinearity: f.name(),
            p: f.p(),
            c_f: f.c_f(),
            dimension: inputs.spec.dim(),
            m_level: inputs.m_level,
            t0: inputs.t0,
            measure,
            band_measures: inputs.decomp.measures(&inputs.spec),
            lengths: inputs.decomp.lengths(),
            overlaps: inputs.decomp.overlaps(),
            max_abs_f: max_f,
            f_of_v_norm: measure.sqrt() * max_f,
            m_underbar: inputs.m_underbar,
            error_bound: inputs.error_bound,
            margin: inputs.margin,
            controlling_function: ctrl.name().to_string(),
            k_of_error_bound: ctrl.k_of(inputs.error_bound),
            m_star_variant: inputs.variant,
        };
        let mut notes = vec![format!(
            "R2 uses the bound m(Omega)^(1/2) max_(|z|<=M) |f(z)| = {} for the norm of f(v)",
            provenance.f_of_v_norm
        )];
        if inputs.spec.dim() != 3 {
            notes.push("constants as printed; N-dependence not adjusted".into());
        }
        let (mut r1v, mut r2v, mut tauv, mut tsv, mut tscv, mut msv) =
            (None, None, None, None, None, None);
        let gpv = keep(&mut errors, "growth", growth_params(f.p()));
        if let Some(gp) = gpv {
            r1v = Some(r1_from_max(max_f, measure, inputs.t0, &gp));
            r2v = Some(r2(provenance.f_of_v_norm, inputs.t0, &gp));
            let (m1, _) = level_terms(inputs.m_level, measure, max_f, &gp);
            tauv = keep(&mut errors, "tau", tau(r1v.unwrap(), m1, &gp, f.c_f()));
            tsv = tauv.map(|t| inputs.t0.min(1.0).min(t));
            if let Some(ts) = tsv {
                let mi = MStarInputs {
                    t_star: ts,
                    m_level: inputs.m_level,
                    measure,
                    f,
                    gp,
                    variant: inputs.variant,
                };
                msv = keep(&mut errors, "m_star", m_star(&mi));
                match inputs.m_underbar {
                    Some(mu) => {
                        tscv = keep(
                            &mut errors,
                            "t_star_common",
                            t_star_common(mu, &provenance.band_measures, f, &gp, inputs.t0, ts),
                        )
                    }
                    None => {
                        notes.push("t_star_common needs M_underbar from a barrier solve".into())
                    }
                }
            } else {
                errors.push(QuantityError {
                    quantity: "t_star".into(),
                    message: "depends on tau".into(),
                });
                errors.push(QuantityError {
                    quantity: "m_star".into(),
                    message: "depends on t_star".into(),
                });
                errors.push(QuantityError {
                    quantity: "t_star_common".into(),
                    message: "depends on t_star".into(),
                });
            }
        }
        let gamma = keep(
            &mut errors,
            "gamma",
            choose_gamma(inputs.error_bound, f, ctrl, inputs.margin),
        );
        let eps =
            gamma.and_then(|g| keep(&mut errors, "epsilon_bar", epsilon_bar(g, &inputs.decomp)));
        if provenance.band_measures.len() >= 2 {
            notes.push("epsilon_bar is applied per window advance of I - 1 sweeps; the per-sweep reading is reported alongside".into());
        }
        Self {
            growth: gpv,
            tau_denominator: gpv.map(|g| g.tau_denominator()),
            r1: r1v,
            r2: r2v,
            tau: tauv,
            t_star: tsv,
            t_star_common: tscv,
            m_star: msv,
            gamma,
            epsilon_bar: eps,
            provenance,
            notes,
            errors,
        }
    }

    /// `true` when some entry could not be evaluated.
    pub fn has_errors(&self) -> bool {
        !self.errors.is_empty()
    }
}

fn keep<T>(errors: &mut Vec<QuantityError>, quantity: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(QuantityError {
                quantity: quantity.into(),
                message: e.to_string(),
            });
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents() {
        let g = growth_params(2.0).unwrap();
        assert_eq!(g.p1, 3.0 / 8.0);
        assert_eq!(g.alpha, 5.0 / 16.0);
        let g = growth_params(3.0).unwrap();
        assert_eq!(g.p1, 0.5);
        assert!((g.l1 - 1.5).abs() < 1e-15 && (g.l2 - 3.0).abs() < 1e-14);
        assert!((g.l1 * g.p1 - 0.75).abs() < 1e-15);
        assert!(growth_params(1.0).is_err());
        assert!(growth_params(0.5).is_err());
    }

    #[test]
    fn tau_denominator_matches_direct_form() {
        for p in [1.5, 2.0, 2.5, 3.0, 7.0] {
            let g = growth_params(p).unwrap();
            assert!((g.tau_denominator() - (1.0 - (g.p1 + p * g.alpha))).abs() < 1e-15);
            assert!((g.time_exponent() - (1.0 + g.alpha - p * g.alpha - g.p1)).abs() < 1e-15);
        }
    }

    #[test]
    fn tau_is_undefined_up_to_quadratic_growth() {
        let g = growth_params(2.0).unwrap();
        assert!(matches!(tau(1.0, 0.0, &g, 2.0), Err(Error::Param(_))));
        let g = growth_params(3.0).unwrap();
        assert!(matches!(tau(0.0, 0.0, &g, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn epsilon_bar_examples() {
        assert!((epsilon_bar_from(8.0, &[0.1], &[0.55, 0.55]).unwrap() - 0.2).abs() < 1e-15);
        assert!(
            (epsilon_bar_from(8.0, &[0.1, 0.1], &[0.4, 0.5, 0.4]).unwrap() - 0.04).abs() < 1e-15
        );
        assert!(matches!(
            epsilon_bar_from(8.0, &[], &[1.0]),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn gamma_for_square() {
        let ctrl = ControllingFunction::square();
        let f = Nonlinearity::square();
        assert_eq!(choose_gamma(1.0, &f, &ctrl, 0.0).unwrap(), 8.0);
        assert!((choose_gamma(1.0, &f, &ctrl, 1.0).unwrap() - 16.0).abs() < 1e-14);
    }
}
