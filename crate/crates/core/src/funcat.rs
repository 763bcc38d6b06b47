//! Test functions `f` with first derivatives.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Closed interval `[a, b]` with `a < b`, optionally carrying an
/// evaluation point `x` in `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
    pub x: Option<f64>,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInterval { a, b, x: None });
        }
        Ok(Self { a, b, x: None })
    }

    pub fn with_point(a: f64, b: f64, x: f64) -> Result<Self> {
        Self::new(a, b)?.at(x)
    }

    /// Same interval with the evaluation point replaced.
    pub fn at(self, x: f64) -> Result<Self> {
        if !(x.is_finite() && self.a <= x && x <= self.b) {
            return Err(Error::InvalidInterval {
                a: self.a,
                b: self.b,
                x: Some(x),
            });
        }
        Ok(Self { x: Some(x), ..self })
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.a <= other.a && other.b <= self.b
    }

    /// Slack used by domain checks so that convex combinations rounded one
    /// ulp past an endpoint are still accepted.
    fn slack(&self) -> f64 {
        1e-12 * self.a.abs().max(self.b.abs()).max(1.0)
    }
}

pub type UserFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum FunctionKind {
    /// `x^n`
    Power(i32),
    /// `1/x`
    Reciprocal,
    /// `e^x`
    Exponent,
    /// `c0 + c1 x`
    Affine(f64, f64),
    /// Arbitrary closure, identified by `name` in reports.
    User { name: String, func: UserFn },
}

impl fmt::Debug for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionKind::Power(n) => write!(f, "poly:{n}"),
            FunctionKind::Reciprocal => f.write_str("recip"),
            FunctionKind::Exponent => f.write_str("exp"),
            FunctionKind::Affine(c0, c1) => write!(f, "affine:{c0},{c1}"),
            FunctionKind::User { name, .. } => f.write_str(name),
        }
    }
}

impl FromStr for FunctionKind {
    type Err = Error;

    /// Accepts `poly:n`, `recip`, `exp` and `affine:c0,c1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("poly", Some(n)) => n
                .trim()
                .parse::<i32>()
                .map(FunctionKind::Power)
                .map_err(|e| Error::parse("function", s, e.to_string())),
            ("recip", None) => Ok(FunctionKind::Reciprocal),
            ("exp", None) => Ok(FunctionKind::Exponent),
            ("affine", Some(args)) => {
                let parts: Vec<&str> = args.split(',').collect();
                if parts.len() != 2 {
                    return Err(Error::parse("function", s, "expected affine:c0,c1"));
                }
                let c0 = parts[0].trim().parse::<f64>();
                let c1 = parts[1].trim().parse::<f64>();
                match (c0, c1) {
                    (Ok(c0), Ok(c1)) if c0.is_finite() && c1.is_finite() => {
                        Ok(FunctionKind::Affine(c0, c1))
                    }
                    _ => Err(Error::parse("function", s, "coefficients must be finite reals")),
                }
            }
            _ => Err(Error::parse(
                "function",
                s,
                "expected one of poly:n, recip, exp, affine:c0,c1",
            )),
        }
    }
}

impl FunctionKind {
    fn value(&self, u: f64) -> f64 {
        match self {
            FunctionKind::Power(n) => u.powi(*n),
            FunctionKind::Reciprocal => 1.0 / u,
            FunctionKind::Exponent => u.exp(),
            FunctionKind::Affine(c0, c1) => c0 + c1 * u,
            FunctionKind::User { func, .. } => func(u),
        }
    }

    fn closed_form_derivative(&self, u: f64) -> Option<f64> {
        Some(match self {
            FunctionKind::Power(0) => 0.0,
            FunctionKind::Power(n) => f64::from(*n) * u.powi(n - 1),
            FunctionKind::Reciprocal => -1.0 / (u * u),
            FunctionKind::Exponent => u.exp(),
            FunctionKind::Affine(_, c1) => *c1,
            FunctionKind::User { .. } => return None,
        })
    }

    fn needs_positive_domain(&self) -> bool {
        matches!(self, FunctionKind::Reciprocal) || matches!(self, FunctionKind::Power(n) if *n < 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    ClosedForm,
    CentralDifference(f64),
}

/// An evaluable function on a closed domain together with how its
/// derivative is obtained.
#[derive(Debug, Clone)]
pub struct FunctionSpec {
    kind: FunctionKind,
    domain: Interval,
    derivative_mode: DerivativeMode,
}

impl FunctionSpec {
    /// Catalog function with a closed-form derivative. User closures get
    /// a central difference with step `1e-6 (b - a)` instead.
    pub fn new(kind: FunctionKind, domain: Interval) -> Result<Self> {
        let mode = match kind {
            FunctionKind::User { .. } => DerivativeMode::CentralDifference(1e-6 * domain.width()),
            _ => DerivativeMode::ClosedForm,
        };
        Self::with_mode(kind, domain, mode)
    }

    pub fn with_mode(kind: FunctionKind, domain: Interval, mode: DerivativeMode) -> Result<Self> {
        if kind.needs_positive_domain() && domain.a <= 0.0 {
            return Err(Error::DomainViolation {
                u: domain.a,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        match mode {
            DerivativeMode::CentralDifference(step) if !(step > 0.0 && step.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "central difference step must be positive, got {step}"
                )));
            }
            DerivativeMode::ClosedForm if matches!(kind, FunctionKind::User { .. }) => {
                return Err(Error::InvalidParameter(
                    "user functions carry no closed-form derivative".into(),
                ));
            }
            _ => {}
        }
        domain_bounds_ok(&domain)?;
        Ok(Self {
            kind,
            domain: Interval { x: None, ..domain },
            derivative_mode: mode,
        })
    }

    /// Parse a catalog spec string (`poly:2`, `recip`, ...) on `[a, b]`.
    pub fn parse(spec: &str, domain: Interval) -> Result<Self> {
        Self::new(spec.parse()?, domain)
    }

    pub fn user(
        name: impl Into<String>,
        func: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain: Interval,
    ) -> Result<Self> {
        Self::new(
            FunctionKind::User {
                name: name.into(),
                func: Arc::new(func),
            },
            domain,
        )
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.derivative_mode
    }

    pub fn label(&self) -> String {
        self.kind.to_string()
    }

    fn check(&self, u: f64) -> Result<()> {
        let slack = self.domain.slack();
        if u.is_finite() && self.domain.a - slack <= u && u <= self.domain.b + slack {
            Ok(())
        } else {
            Err(Error::DomainViolation {
                u,
                lo: self.domain.a,
                hi: self.domain.b,
            })
        }
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        self.check(u)?;
        let v = self.kind.value(u);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { at: u, value: v })
        }
    }

    /// First derivative on the closed domain. In difference mode the
    /// stencil is shifted inward near an endpoint (second-order one-sided
    /// formula) so the function is never sampled outside its domain.
    pub fn eval_deriv(&self, u: f64) -> Result<f64> {
        self.check(u)?;
        let d = match self.derivative_mode {
            DerivativeMode::ClosedForm => self
                .kind
                .closed_form_derivative(u)
                .expect("closed form checked at construction"),
            DerivativeMode::CentralDifference(step) => {
                let f = |v: f64| self.kind.value(v);
                let Interval { a, b, .. } = self.domain;
                if u - step >= a && u + step <= b {
                    (f(u + step) - f(u - step)) / (2.0 * step)
                } else if u + 2.0 * step <= b {
                    (-3.0 * f(u) + 4.0 * f(u + step) - f(u + 2.0 * step)) / (2.0 * step)
                } else {
                    (3.0 * f(u) - 4.0 * f(u - step) + f(u - 2.0 * step)) / (2.0 * step)
                }
            }
        };
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::NonFinite { at: u, value: d })
        }
    }

    /// `|f'(u)|^q`.
    pub fn abs_deriv_pow(&self, u: f64, q: f64) -> Result<f64> {
        Ok(self.eval_deriv(u)?.abs().powf(q))
    }
}

fn domain_bounds_ok(domain: &Interval) -> Result<()> {
    Interval::new(domain.a, domain.b).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn on(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn evaluations() {
        let sq = FunctionSpec::parse("poly:2", on(0.0, 5.0)).unwrap();
        assert_eq!(sq.eval(3.0).unwrap(), 9.0);
        assert_eq!(sq.eval_deriv(0.5).unwrap(), 1.0);
        let r = FunctionSpec::parse("recip", on(1.0, 3.0)).unwrap();
        assert_eq!(r.eval(2.0).unwrap(), 0.5);
        assert_eq!(r.eval_deriv(2.0).unwrap(), -0.25);
        let e = FunctionSpec::parse("exp", on(0.0, 1.0)).unwrap();
        assert!((e.eval(1.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        let aff = FunctionSpec::parse("affine:2,-3", on(0.0, 1.0)).unwrap();
        assert_eq!(aff.eval(1.0).unwrap(), -1.0);
        assert_eq!(aff.eval_deriv(0.3).unwrap(), -3.0);
    }

    #[test]
    fn central_difference_cubic() {
        let f = FunctionSpec::with_mode(
            FunctionKind::Power(3),
            on(0.0, 4.0),
            DerivativeMode::CentralDifference(1e-5),
        )
        .unwrap();
        assert!((f.eval_deriv(2.0).unwrap() - 12.0).abs() < 1e-8);
    }

    #[test]
    fn one_sided_at_endpoints() {
        let f = FunctionSpec::user("shifted", |x| (x - 0.5) * (x - 0.5), on(0.0, 1.0)).unwrap();
        assert!((f.eval_deriv(0.0).unwrap() + 1.0).abs() < 1e-8);
        assert!((f.eval_deriv(1.0).unwrap() - 1.0).abs() < 1e-8);
        assert!(f.eval_deriv(0.5).unwrap().abs() < 1e-9);
    }

    #[test]
    fn domain_guards() {
        assert!(matches!(
            FunctionSpec::parse("recip", on(0.0, 1.0)),
            Err(Error::DomainViolation { .. })
        ));
        assert!(matches!(
            FunctionSpec::parse("poly:-2", on(-1.0, 1.0)),
            Err(Error::DomainViolation { .. })
        ));
        assert!(FunctionSpec::parse("poly:-2", on(0.5, 1.0)).is_ok());
        let sq = FunctionSpec::parse("poly:2", on(0.0, 1.0)).unwrap();
        assert!(matches!(sq.eval(1.5), Err(Error::DomainViolation { .. })));
        assert!(FunctionSpec::with_mode(
            FunctionKind::Exponent,
            on(0.0, 1.0),
            DerivativeMode::CentralDifference(0.0)
        )
        .is_err());
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::with_point(0.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["poly:2", "poly:-3", "recip", "exp", "affine:0,1"] {
            assert_eq!(s.parse::<FunctionKind>().unwrap().to_string(), s);
        }
        for bad in ["poly", "poly:x", "sin", "affine:1", "recip:2"] {
            assert!(bad.parse::<FunctionKind>().is_err(), "{bad}");
        }
    }

    #[test]
    fn difference_agrees_with_closed_form() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let catalog = [
            (FunctionKind::Power(2), on(0.0, 2.0)),
            (FunctionKind::Power(4), on(-1.0, 1.0)),
            (FunctionKind::Power(-2), on(0.5, 3.0)),
            (FunctionKind::Reciprocal, on(1.0, 2.0)),
            (FunctionKind::Exponent, on(0.0, 1.0)),
            (FunctionKind::Affine(1.0, -2.0), on(-3.0, 3.0)),
        ];
        for (kind, dom) in catalog {
            let exact = FunctionSpec::new(kind.clone(), dom).unwrap();
            let fd = FunctionSpec::with_mode(
                kind,
                dom,
                DerivativeMode::CentralDifference(1e-6 * dom.width()),
            )
            .unwrap();
            for _ in 0..100 {
                let u = rng.gen_range(dom.a..dom.b);
                let e = exact.eval_deriv(u).unwrap();
                let d = fd.eval_deriv(u).unwrap();
                assert!((e - d).abs() < 1e-6, "{} at {u}: {e} vs {d}", exact.label());
            }
        }
    }
}
