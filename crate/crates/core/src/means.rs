//! Two-point means and the closed-form proposition bounds built on them.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bounds::{BoundReport, ReportInputs, StatementId};
use crate::error::{Error, Result};

/// Relative width below which `L` and `L_p` use their `a = b` branch.
pub const DEGENERATE_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanKind {
    Quadratic,
    Arithmetic,
    Geometric,
    Logarithmic,
    PLogarithmic(f64),
}

impl MeanKind {
    pub fn symbol(&self) -> String {
        match self {
            MeanKind::Quadratic => "K".into(),
            MeanKind::Arithmetic => "A".into(),
            MeanKind::Geometric => "G".into(),
            MeanKind::Logarithmic => "L".into(),
            MeanKind::PLogarithmic(p) => format!("L_{p}"),
        }
    }
}

impl fmt::Display for MeanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanKind::Quadratic => f.write_str("quadratic"),
            MeanKind::Arithmetic => f.write_str("arithmetic"),
            MeanKind::Geometric => f.write_str("geometric"),
            MeanKind::Logarithmic => f.write_str("logarithmic"),
            MeanKind::PLogarithmic(p) => write!(f, "p_logarithmic:{p}"),
        }
    }
}

impl Serialize for MeanKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for MeanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "K" | "quadratic" => MeanKind::Quadratic,
            "A" | "arithmetic" => MeanKind::Arithmetic,
            "G" | "geometric" => MeanKind::Geometric,
            "L" | "logarithmic" => MeanKind::Logarithmic,
            _ => {
                let p = s
                    .strip_prefix("p_logarithmic:")
                    .or_else(|| s.strip_prefix("L_"))
                    .ok_or_else(|| Error::parse("mean", s, "unknown mean kind"))?;
                MeanKind::PLogarithmic(
                    p.parse()
                        .map_err(|_| Error::parse("mean", s, "bad exponent"))?,
                )
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanValue {
    pub kind: MeanKind,
    pub a: f64,
    pub b: f64,
    pub value: f64,
}

fn check_nonneg(a: f64, b: f64) -> Result<()> {
    for u in [a, b] {
        if !(u.is_finite() && u >= 0.0) {
            return Err(Error::DomainViolation {
                u,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
    }
    Ok(())
}

fn check_pos(a: f64, b: f64) -> Result<()> {
    check_nonneg(a, b)?;
    for u in [a, b] {
        if u == 0.0 {
            return Err(Error::DomainViolation {
                u,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !p.is_finite() || p == 0.0 || p == -1.0 {
        return Err(Error::BadExponent(format!(
            "p-logarithmic mean needs p outside {{-1, 0}}, got {p}"
        )));
    }
    Ok(())
}

fn degenerate(lo: f64, hi: f64) -> bool {
    hi - lo < DEGENERATE_REL * hi
}

/// `L_p(a, b)^p` for `0 < a <= b`, avoiding the cancellation in
/// `b^(p+1) - a^(p+1)` when `b` is close to `a`.
fn p_log_pow(lo: f64, hi: f64, p: f64) -> f64 {
    if degenerate(lo, hi) {
        return lo.powf(p);
    }
    let r = (hi - lo) / lo;
    let ratio = ((p + 1.0) * r.ln_1p()).exp_m1() / ((p + 1.0) * r);
    lo.powf(p) * ratio
}

/// Value of `kind` at `(a, b)`. The means are symmetric, so the order of
/// `a` and `b` does not matter.
pub fn mean(kind: MeanKind, a: f64, b: f64) -> Result<f64> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    match kind {
        MeanKind::Quadratic => {
            check_nonneg(a, b)?;
            Ok(lo.hypot(hi) / std::f64::consts::SQRT_2)
        }
        MeanKind::Arithmetic => {
            check_nonneg(a, b)?;
            Ok(lo + (hi - lo) / 2.0)
        }
        MeanKind::Geometric => {
            check_pos(a, b)?;
            Ok((lo * hi).sqrt())
        }
        MeanKind::Logarithmic => {
            check_pos(a, b)?;
            if degenerate(lo, hi) {
                return Ok(lo);
            }
            Ok((hi - lo) / ((hi - lo) / lo).ln_1p())
        }
        MeanKind::PLogarithmic(p) => {
            check_p(p)?;
            check_pos(a, b)?;
            if degenerate(lo, hi) {
                return Ok(lo);
            }
            let r = (hi - lo) / lo;
            let ratio = ((p + 1.0) * r.ln_1p()).exp_m1() / ((p + 1.0) * r);
            Ok(lo * ratio.powf(1.0 / p))
        }
    }
}

pub fn mean_value(kind: MeanKind, a: f64, b: f64) -> Result<MeanValue> {
    Ok(MeanValue {
        kind,
        a,
        b,
        value: mean(kind, a, b)?,
    })
}

fn check_prop_interval(a: f64, b: f64) -> Result<()> {
    check_pos(a, b)?;
    if a < b {
        Ok(())
    } else {
        Err(Error::InvalidInterval { a, b, x: None })
    }
}

fn check_n(n: Option<i32>, id: StatementId) -> Result<i32> {
    let name = match id {
        StatementId::P301 => "p301",
        StatementId::P303 => "p303",
        _ => "p305",
    };
    let n = n.ok_or(Error::MissingInput(name, "the integer exponent n"))?;
    match n {
        0 => Err(Error::BadExponent("n must satisfy |n| >= 1".into())),
        -1 => Err(Error::ExcludedExponent(n)),
        _ => Ok(n),
    }
}

/// `|A(a^n, b^n) - L_n^n(a, b)|`
fn power_lhs(a: f64, b: f64, n: i32) -> f64 {
    let arith = (a.powi(n) + b.powi(n)) / 2.0;
    (arith - p_log_pow(a, b, f64::from(n))).abs()
}

/// `|A(1/a, 1/b) - 1/L(a, b)|`
fn reciprocal_lhs(a: f64, b: f64) -> Result<f64> {
    let l = mean(MeanKind::Logarithmic, a, b)?;
    Ok(((1.0 / a + 1.0 / b) / 2.0 - 1.0 / l).abs())
}

/// `2K^2 / G^4`, which equals `1/a^2 + 1/b^2`.
fn k2_over_g4(a: f64, b: f64) -> f64 {
    (a * a + b * b) / (a * b).powi(2)
}

/// Closed-form proposition bound for `f(x) = x^n` or `f(x) = 1/x` with
/// `h(t) = t` at the midpoint of `[a, b]`. `n` is ignored by `p302`/`p304`;
/// `q` is only used by `p305`.
pub fn prop_bound(id: StatementId, a: f64, b: f64, n: Option<i32>, q: Option<f64>) -> Result<BoundReport> {
    if !id.is_proposition() {
        return Err(Error::InvalidParameter(format!("{id} is not a proposition")));
    }
    check_prop_interval(a, b)?;
    let w = b - a;
    let am = mean(MeanKind::Arithmetic, a, b)?;
    let mut inputs = ReportInputs {
        h: Some("id".into()),
        a,
        b,
        x: Some(a + w / 2.0),
        ..ReportInputs::default()
    };
    let (lhs, rhs) = match id {
        StatementId::P301 | StatementId::P303 | StatementId::P305 => {
            let n = check_n(n, id)?;
            inputs.f = Some(format!("poly:{n}"));
            inputs.n = Some(n);
            let nf = f64::from(n.unsigned_abs());
            let lhs = power_lhs(a, b, n);
            let rhs = match id {
                StatementId::P301 => {
                    let mean_pow = (a.powi(n - 1) + b.powi(n - 1)) / 2.0;
                    nf * w / 12.0 * (am.powi(n - 1) + 2.0 * mean_pow)
                }
                StatementId::P303 => w / 4.0 * nf * (a.powi(n - 1) + b.powi(n - 1)) / 2.0,
                _ => {
                    let q = q.ok_or(Error::MissingInput("p305", "the exponent q"))?;
                    if !(q > 1.0 && q.is_finite()) {
                        return Err(Error::BadExponent(format!("q must be > 1, got {q}")));
                    }
                    inputs.q = Some(q);
                    inputs.p = Some(q / (q - 1.0));
                    let k = f64::from(n - 1);
                    let half = am.powf(q * k) / 2.0;
                    nf * w
                        * 2f64.powf(1.0 / q - 3.0)
                        * 3f64.powf(-1.0 / q)
                        * ((half + a.powf(q * k)).powf(1.0 / q) + (half + b.powf(q * k)).powf(1.0 / q))
                }
            };
            (lhs, rhs)
        }
        StatementId::P302 => {
            inputs.f = Some("recip".into());
            let rhs = w / 12.0 * (1.0 / (am * am) + k2_over_g4(a, b));
            (reciprocal_lhs(a, b)?, rhs)
        }
        StatementId::P304 => {
            inputs.f = Some("recip".into());
            (reciprocal_lhs(a, b)?, w / 8.0 * k2_over_g4(a, b))
        }
        _ => unreachable!("checked above"),
    };
    Ok(BoundReport::assemble(id, inputs, lhs, rhs, Vec::new(), 0.0, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn mean_examples() {
        close(mean(MeanKind::Arithmetic, 2.0, 8.0).unwrap(), 5.0, 0.0);
        close(mean(MeanKind::Geometric, 2.0, 8.0).unwrap(), 4.0, 1e-15);
        close(mean(MeanKind::Quadratic, 3.0, 3.0).unwrap(), 3.0, 1e-15);
        close(mean(MeanKind::Logarithmic, 2.5, 2.5).unwrap(), 2.5, 0.0);
        close(mean(MeanKind::PLogarithmic(2.0), 1.0, 2.0).unwrap(), (7.0f64 / 3.0).sqrt(), 1e-15);
        close(mean(MeanKind::PLogarithmic(-2.0), 1.0, 2.0).unwrap(), 2f64.sqrt(), 1e-15);
        close(
            mean(MeanKind::Logarithmic, 1.0, 2.0).unwrap(),
            1.0 / std::f64::consts::LN_2,
            1e-15,
        );
    }

    #[test]
    fn mean_errors() {
        assert!(matches!(mean(MeanKind::PLogarithmic(-1.0), 1.0, 2.0), Err(Error::BadExponent(_))));
        assert!(matches!(mean(MeanKind::PLogarithmic(0.0), 1.0, 2.0), Err(Error::BadExponent(_))));
        assert!(matches!(mean(MeanKind::Geometric, 0.0, 2.0), Err(Error::DomainViolation { .. })));
        assert!(matches!(mean(MeanKind::Arithmetic, -1.0, 2.0), Err(Error::DomainViolation { .. })));
        close(mean(MeanKind::Arithmetic, 0.0, 2.0).unwrap(), 1.0, 0.0);
    }

    #[test]
    fn near_degenerate_is_stable() {
        let a = 2.0;
        let b = 2.0 + 1e-9;
        let l = mean(MeanKind::Logarithmic, a, b).unwrap();
        assert!(l > a && l < b);
        let lp = mean(MeanKind::PLogarithmic(3.0), a, b).unwrap();
        assert!(lp > a && lp < b, "{lp}");
        assert_eq!(mean(MeanKind::PLogarithmic(3.0), a, a + 1e-13).unwrap(), a);
    }

    #[test]
    fn ordering_grid() {
        let vals: Vec<f64> = (0..10).map(|i| 0.1 + 0.7 * f64::from(i)).collect();
        let mut pairs = 0;
        for (i, &a) in vals.iter().enumerate() {
            for &b in &vals[i + 1..] {
                let g = mean(MeanKind::Geometric, a, b).unwrap();
                let l = mean(MeanKind::Logarithmic, a, b).unwrap();
                let am = mean(MeanKind::Arithmetic, a, b).unwrap();
                let k = mean(MeanKind::Quadratic, a, b).unwrap();
                assert!(g <= l + 1e-12 && l <= am + 1e-12 && am <= k + 1e-12);
                close(g * g, a * b, 1e-12 * a * b);
                pairs += 1;
            }
        }
        assert!(pairs >= 45);
    }

    #[test]
    fn prop_examples() {
        let r = prop_bound(StatementId::P301, 1.0, 3.0, Some(2), None).unwrap();
        close(r.lhs, 2.0 / 3.0, 1e-12);
        close(r.rhs, 2.0, 1e-12);
        assert!(r.holds);
        let r = prop_bound(StatementId::P302, 1.0, 2.0, None, None).unwrap();
        close(r.lhs, 0.75 - std::f64::consts::LN_2, 1e-12);
        close(r.rhs, (1.0 / 2.25 + 1.25) / 12.0, 1e-12);
        assert!(r.holds);
        let r = prop_bound(StatementId::P304, 1.0, 2.0, Some(7), None).unwrap();
        close(r.rhs, 0.15625, 1e-15);
        assert!(r.holds);
    }

    #[test]
    fn prop_errors() {
        assert!(matches!(
            prop_bound(StatementId::P301, 1.0, 2.0, Some(-1), None),
            Err(Error::ExcludedExponent(-1))
        ));
        assert!(matches!(
            prop_bound(StatementId::P303, 1.0, 2.0, Some(0), None),
            Err(Error::BadExponent(_))
        ));
        assert!(matches!(
            prop_bound(StatementId::P305, 1.0, 2.0, Some(2), Some(1.0)),
            Err(Error::BadExponent(_))
        ));
        assert!(matches!(
            prop_bound(StatementId::P305, 1.0, 2.0, Some(2), None),
            Err(Error::MissingInput(..))
        ));
        assert!(prop_bound(StatementId::P301, 0.0, 2.0, Some(2), None).is_err());
        assert!(prop_bound(StatementId::P301, 2.0, 1.0, Some(2), None).is_err());
        assert!(prop_bound(StatementId::Th3, 1.0, 2.0, Some(2), None).is_err());
    }

    #[test]
    fn props_hold_on_grid() {
        let ids = [
            StatementId::P301,
            StatementId::P302,
            StatementId::P303,
            StatementId::P304,
            StatementId::P305,
        ];
        for (a, b) in [(1.0, 2.0), (1.0, 3.0), (0.5, 4.0), (2.0, 2.001)] {
            for n in [2, 3, 4, -2] {
                for q in [1.5, 2.0, 3.0] {
                    for id in ids {
                        let r = prop_bound(id, a, b, Some(n), Some(q)).unwrap();
                        assert!(r.gap >= -1e-9, "{id} a={a} b={b} n={n} q={q}: {}", r.gap);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn bounded_by_endpoints(a in 0.01f64..100.0, b in 0.01f64..100.0, p in prop::sample::select(vec![-3.0, -0.5, 0.5, 2.0, 4.5])) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let kinds = [
                MeanKind::Quadratic,
                MeanKind::Arithmetic,
                MeanKind::Geometric,
                MeanKind::Logarithmic,
                MeanKind::PLogarithmic(p),
            ];
            for k in kinds {
                let v = mean(k, a, b).unwrap();
                prop_assert!(v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12), "{k}: {v} not in [{lo}, {hi}]");
                prop_assert_eq!(v, mean(k, b, a).unwrap());
            }
        }
    }
}
