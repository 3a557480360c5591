use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Zero,
    Square,
    /// u |u|^{p-1}
    OddPower(f64),
    /// |u|^p
    AbsPower(f64),
    Sine,
    Custom {
        name: String,
        eval: ScalarFn,
        deriv: ScalarFn,
    },
}

/// A reaction term `f` together with the growth data `|f'(x)| <= c_f |x|^{p-1}`.
#[derive(Clone)]
pub struct Nonlinearity {
    kind: Kind,
    c_f: f64,
    p: f64,
    sign_positive: bool,
    in_growth_class: bool,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt.debug_struct("Nonlinearity")
            .field("name", &self.name())
            .field("c_f", &self.c_f)
            .field("p", &self.p)
            .field("sign_positive", &self.sign_positive)
            .finish()
    }
}

/// Log-spaced sample points in [1e-3, 1e3], both signs.
pub(crate) fn growth_sample_grid() -> Vec<f64> {
    let n = 601;
    let mut xs = Vec::with_capacity(2 * n);
    for i in 0..n {
        let e = -3.0 + 6.0 * i as f64 / (n - 1) as f64;
        let x = 10f64.powf(e);
        xs.push(x);
        xs.push(-x);
    }
    xs
}

impl Nonlinearity {
    /// f ≡ 0. Growth data is nominal; it never binds.
    pub fn zero() -> Self {
        Self {
            kind: Kind::Zero,
            c_f: 1.0,
            p: 2.0,
            sign_positive: false,
            in_growth_class: true,
        }
    }

    /// f(u) = u², with p = 2 and C_f = 2.
    pub fn square() -> Self {
        Self {
            kind: Kind::Square,
            c_f: 2.0,
            p: 2.0,
            sign_positive: true,
            in_growth_class: true,
        }
    }

    /// f(u) = u|u|^{p-1}, odd, with C_f = p.
    pub fn odd_power(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self {
            kind: Kind::OddPower(p),
            c_f: p,
            p,
            sign_positive: false,
            in_growth_class: true,
        })
    }

    /// f(u) = |u|^p, nonnegative, with C_f = p.
    pub fn abs_power(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self {
            kind: Kind::AbsPower(p),
            c_f: p,
            p,
            sign_positive: true,
            in_growth_class: true,
        })
    }

    /// f(u) = sin(u). Bounded, so it lies outside the superlinear growth class;
    /// usable by the solvers only.
    pub fn sine() -> Self {
        Self {
            kind: Kind::Sine,
            c_f: 1.0,
            p: 1.0,
            sign_positive: false,
            in_growth_class: false,
        }
    }

    /// A user supplied nonlinearity. The growth bound and positivity claim are
    /// checked on the sample grid.
    pub fn custom<F, D>(
        name: &str,
        eval: F,
        deriv: D,
        c_f: f64,
        p: f64,
        sign_positive: bool,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_exponent(p)?;
        if !(c_f > 0.0) {
            return Err(Error::Param(format!("c_f must be positive, got {c_f}")));
        }
        let nl = Self {
            kind: Kind::Custom {
                name: name.to_string(),
                eval: Arc::new(eval),
                deriv: Arc::new(deriv),
            },
            c_f,
            p,
            sign_positive,
            in_growth_class: true,
        };
        nl.validate()?;
        Ok(nl)
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::Zero => "zero".into(),
            Kind::Square => "square".into(),
            Kind::OddPower(p) => format!("odd-power(p={p})"),
            Kind::AbsPower(p) => format!("abs-power(p={p})"),
            Kind::Sine => "sine".into(),
            Kind::Custom { name, .. } => name.clone(),
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Square => u * u,
            Kind::OddPower(p) => u * u.abs().powf(p - 1.0),
            Kind::AbsPower(p) => u.abs().powf(*p),
            Kind::Sine => u.sin(),
            Kind::Custom { eval, .. } => eval(u),
        }
    }

    #[inline]
    pub fn deriv(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Square => 2.0 * u,
            Kind::OddPower(p) => p * u.abs().powf(p - 1.0),
            Kind::AbsPower(p) => p * u.abs().powf(p - 1.0) * u.signum(),
            Kind::Sine => u.cos(),
            Kind::Custom { deriv, .. } => deriv(u),
        }
    }

    pub fn c_f(&self) -> f64 {
        self.c_f
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sign_positive(&self) -> bool {
        self.sign_positive
    }

    /// Whether the growth condition with p > 1 applies, i.e. the closed-form
    /// constants can be evaluated for this nonlinearity.
    pub fn in_growth_class(&self) -> bool {
        self.in_growth_class
    }

    /// True when f is identically zero; the implicit step then needs no Newton loop.
    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    /// Check the growth bound and the positivity claim on the sample grid.
    pub fn validate(&self) -> Result<()> {
        if !self.in_growth_class {
            return Ok(());
        }
        for x in growth_sample_grid() {
            let bound = self.c_f * x.abs().powf(self.p - 1.0) * (1.0 + 1e-12);
            let d = self.deriv(x).abs();
            if !(d <= bound) {
                return Err(Error::Param(format!(
                    "{}: |f'({x:e})| = {d:e} exceeds c_f |x|^(p-1) = {bound:e}",
                    self.name()
                )));
            }
            if self.sign_positive && !(self.eval(x) > 0.0) {
                return Err(Error::Param(format!(
                    "{}: f({x:e}) is not positive",
                    self.name()
                )));
            }
        }
        Ok(())
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Param(format!(
            "growth exponent p must be > 1, got {p}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_satisfies_growth_condition() {
        Nonlinearity::square().validate().unwrap();
        Nonlinearity::odd_power(3.0).unwrap().validate().unwrap();
        Nonlinearity::odd_power(1.5).unwrap().validate().unwrap();
        Nonlinearity::abs_power(3.0).unwrap().validate().unwrap();
        Nonlinearity::zero().validate().unwrap();
    }

    #[test]
    fn square_is_canonical() {
        let f = Nonlinearity::square();
        assert_eq!(f.p(), 2.0);
        assert_eq!(f.c_f(), 2.0);
        assert!(f.sign_positive());
        assert_eq!(f.eval(0.0), 0.0);
    }

    #[test]
    fn rejects_bad_exponent() {
        assert!(Nonlinearity::odd_power(1.0).is_err());
        assert!(Nonlinearity::abs_power(0.5).is_err());
    }

    #[test]
    fn custom_with_too_small_constant_is_rejected() {
        let err = Nonlinearity::custom("cube", |u| u * u * u, |u| 3.0 * u * u, 2.0, 3.0, false);
        assert!(matches!(err, Err(Error::Param(_))));
        let ok = Nonlinearity::custom("cube", |u| u * u * u, |u| 3.0 * u * u, 3.0, 3.0, false);
        assert!(ok.is_ok());
    }

    #[test]
    fn false_positivity_claim_is_rejected() {
        let err = Nonlinearity::custom("odd", |u| u * u.abs(), |u| 2.0 * u.abs(), 2.0, 2.0, true);
        assert!(err.is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cases = [
            Nonlinearity::square(),
            Nonlinearity::odd_power(2.5).unwrap(),
            Nonlinearity::abs_power(3.0).unwrap(),
            Nonlinearity::sine(),
        ];
        for f in &cases {
            for &x in &[-1.7, -0.3, 0.4, 2.2] {
                let h = 1e-6;
                let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
                assert!((fd - f.deriv(x)).abs() < 1e-6, "{} at {x}", f.name());
            }
        }
    }
}
