//! Evaluators for the trapezoid-type bounds.
//!
//! Every evaluator computes the left side
//! `|((b-x)f(b) + (x-a)f(a))/(b-a) - mean(f)|` (or one of its endpoint
//! forms), the statement's right side, and the hypothesis checks the
//! statement assumes. Hypotheses are recorded in the report, never used to
//! refuse evaluation. Kernels with divergent moments are refused.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::classes::{test_membership_fn, ClassName, GridCounts};
use crate::error::{Error, Result};
use crate::funcat::{FunctionSpec, Interval};
use crate::hkernel::{
    check_dominates_identity, check_supermultiplicative, HKernel, Moments, DEFAULT_GRID,
};
use crate::means;
use crate::quadrature::{integrate, mean_value_with_error, DEFAULT_TOL};

/// Gaps at or above `-CERTIFY_TOL` certify the inequality.
pub const CERTIFY_TOL: f64 = 1e-9;
/// `|f'((a+b)/2)|` below this counts as a vanishing midpoint derivative.
pub const FPRIME_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementId {
    Lemma110,
    Eq109,
    Eq111,
    Eq112,
    Th1Eq21,
    Cor1,
    Cor2,
    Cor3,
    Th2Eq22,
    Cor4,
    Cor5,
    Cor6,
    RemXa,
    RemXb,
    RemXmid,
    RemFprime0,
    Th3,
    Cor7,
    RemTh3Ht,
    Cor8,
    P301,
    P302,
    P303,
    P304,
    P305,
}

/// Which evaluation point a statement uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointRole {
    /// Needs a user-supplied `x` in `[a, b]`.
    Free,
    /// Fixed by the statement (endpoint or midpoint) or not used.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelRole {
    None,
    Any,
    Identity,
    One,
    /// `h(t) = t^s` with `s` in `(0, 1]`.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentRole {
    None,
    /// Hölder exponent `p > 1`; `q = p/(p-1)`.
    P,
    /// Power-mean exponent `q > 1`.
    Q,
}

impl StatementId {
    pub const ALL: [StatementId; 25] = [
        StatementId::Lemma110,
        StatementId::Eq109,
        StatementId::Eq111,
        StatementId::Eq112,
        StatementId::Th1Eq21,
        StatementId::Cor1,
        StatementId::Cor2,
        StatementId::Cor3,
        StatementId::Th2Eq22,
        StatementId::Cor4,
        StatementId::Cor5,
        StatementId::Cor6,
        StatementId::RemXa,
        StatementId::RemXb,
        StatementId::RemXmid,
        StatementId::RemFprime0,
        StatementId::Th3,
        StatementId::Cor7,
        StatementId::RemTh3Ht,
        StatementId::Cor8,
        StatementId::P301,
        StatementId::P302,
        StatementId::P303,
        StatementId::P304,
        StatementId::P305,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StatementId::Lemma110 => "lemma110",
            StatementId::Eq109 => "eq109",
            StatementId::Eq111 => "eq111",
            StatementId::Eq112 => "eq112",
            StatementId::Th1Eq21 => "th1_eq21",
            StatementId::Cor1 => "cor1",
            StatementId::Cor2 => "cor2",
            StatementId::Cor3 => "cor3",
            StatementId::Th2Eq22 => "th2_eq22",
            StatementId::Cor4 => "cor4",
            StatementId::Cor5 => "cor5",
            StatementId::Cor6 => "cor6",
            StatementId::RemXa => "rem_xa",
            StatementId::RemXb => "rem_xb",
            StatementId::RemXmid => "rem_xmid",
            StatementId::RemFprime0 => "rem_fprime0",
            StatementId::Th3 => "th3",
            StatementId::Cor7 => "cor7",
            StatementId::RemTh3Ht => "rem_th3_ht",
            StatementId::Cor8 => "cor8",
            StatementId::P301 => "p301",
            StatementId::P302 => "p302",
            StatementId::P303 => "p303",
            StatementId::P304 => "p304",
            StatementId::P305 => "p305",
        }
    }

    pub fn is_proposition(self) -> bool {
        matches!(
            self,
            StatementId::P301
                | StatementId::P302
                | StatementId::P303
                | StatementId::P304
                | StatementId::P305
        )
    }

    pub fn point_role(self) -> PointRole {
        use StatementId::*;
        match self {
            Lemma110 | Eq111 | Eq112 | Th1Eq21 | Th2Eq22 | Cor4 | Cor5 | Cor6 | Th3 => {
                PointRole::Free
            }
            _ => PointRole::Fixed,
        }
    }

    pub fn kernel_role(self) -> KernelRole {
        use StatementId::*;
        match self {
            Th1Eq21 | Cor1 | Cor2 | Th2Eq22 | RemXa | RemXb | RemXmid | RemFprime0 | Th3 | Cor7 => {
                KernelRole::Any
            }
            Cor3 | Cor4 | RemTh3Ht => KernelRole::Identity,
            Cor6 | Cor8 => KernelRole::One,
            Cor5 | Eq112 => KernelRole::Power,
            Lemma110 | Eq109 | Eq111 | P301 | P302 | P303 | P304 | P305 => KernelRole::None,
        }
    }

    pub fn exponent_role(self) -> ExponentRole {
        use StatementId::*;
        match self {
            Eq111 | Eq112 | Th2Eq22 | Cor4 | Cor5 | Cor6 | RemXa | RemXb | RemXmid | RemFprime0 => {
                ExponentRole::P
            }
            Th3 | Cor7 | RemTh3Ht | Cor8 | P305 => ExponentRole::Q,
            _ => ExponentRole::None,
        }
    }
}

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatementId {
    type Err = Error;

    /// Canonical ids plus the short aliases `th1`, `th2`, `eq21`, `eq22`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "th1" | "eq21" => return Ok(StatementId::Th1Eq21),
            "th2" | "eq22" => return Ok(StatementId::Th2Eq22),
            _ => {}
        }
        StatementId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::parse("statement", s, "unknown statement id"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportInputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    pub a: f64,
    pub b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl HypothesisCheck {
    fn new(name: impl Into<String>, holds: bool, detail: Option<String>) -> Self {
        Self {
            name: name.into(),
            holds,
            detail,
        }
    }
}

/// A secondary right-hand side computed for comparison (printed variant,
/// classical bound, chained estimate, ...).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

impl NamedValue {
    fn new(name: &str, value: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub statement_id: StatementId,
    pub inputs: ReportInputs,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub holds: bool,
    pub hypothesis_checks: Vec<HypothesisCheck>,
    pub quadrature_error: f64,
    pub alternates: Vec<NamedValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundReport {
    pub(crate) fn assemble(
        statement_id: StatementId,
        inputs: ReportInputs,
        lhs: f64,
        rhs: f64,
        hypothesis_checks: Vec<HypothesisCheck>,
        quadrature_error: f64,
        alternates: Vec<NamedValue>,
    ) -> Self {
        let gap = rhs - lhs;
        let holds = gap >= -CERTIFY_TOL;
        let note = (holds && gap < 0.0).then(|| "negative gap within roundoff tolerance".to_string());
        Self {
            statement_id,
            inputs,
            lhs,
            rhs,
            gap,
            holds,
            hypothesis_checks,
            quadrature_error,
            alternates,
            note,
        }
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.hypothesis_checks.iter().all(|c| c.holds)
    }

    pub fn alternate(&self, name: &str) -> Option<f64> {
        self.alternates.iter().find(|v| v.name == name).map(|v| v.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions {
    /// Quadrature tolerance for the integral mean and the lemma integrals.
    pub tol: f64,
    /// Grid for the `|f'|^q`-in-class hypothesis checks.
    pub class_grid: GridCounts,
    /// Grid for kernel property checks.
    pub kernel_grid: usize,
    /// Use the printed single-term display of the `h = 1` corollary of
    /// The th2 bound as the right side.
    pub cor6_printed: bool,
    /// Use `(∫(1-t)dt)^(1-1/q)` instead of `(∫h(1-t)dt)^(1-1/q)` as the
    /// leading factor of the th3 bound and its midpoint corollary.
    pub th3_proof_factor: bool,
    /// Use the printed `(1/2)^(1/p)` factor in the classical Hölder bound.
    pub eq111_printed: bool,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            class_grid: GridCounts::default(),
            kernel_grid: DEFAULT_GRID,
            cor6_printed: false,
            th3_proof_factor: false,
            eq111_printed: false,
        }
    }
}

impl BoundOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Everything a statement may need. Unused fields are ignored.
#[derive(Debug, Clone, Copy)]
pub struct BoundRequest<'a> {
    pub statement: StatementId,
    pub f: Option<&'a FunctionSpec>,
    pub iv: Interval,
    pub h: Option<&'a HKernel>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub n: Option<i32>,
}

/// Evaluates statements and caches hypothesis checks, which dominate the
/// cost of a sweep. Shareable across threads.
#[derive(Default)]
pub struct Verifier {
    opts: BoundOptions,
    cache: Mutex<HashMap<String, Arc<OnceLock<HypothesisCheck>>>>,
}

impl fmt::Debug for Verifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Verifier").field("opts", &self.opts).finish()
    }
}

fn check_p(p: f64) -> Result<f64> {
    if p > 1.0 && p.is_finite() {
        Ok(p / (p - 1.0))
    } else {
        Err(Error::BadExponent(format!("p must be > 1, got {p}")))
    }
}

fn check_q(q: f64) -> Result<f64> {
    if q > 1.0 && q.is_finite() {
        Ok(q / (q - 1.0))
    } else {
        Err(Error::BadExponent(format!("q must be > 1, got {q}")))
    }
}

fn point(iv: &Interval, statement: &'static str) -> Result<f64> {
    iv.x.ok_or(Error::MissingInput(statement, "an interior point x"))
}

fn require<T>(v: Option<T>, statement: &'static str, what: &'static str) -> Result<T> {
    v.ok_or(Error::MissingInput(statement, what))
}

/// Absolute derivative values at the points a bound needs.
#[derive(Debug, Clone, Copy)]
struct Slopes {
    a: f64,
    b: f64,
    x: f64,
    mid: f64,
}

impl Slopes {
    fn new(f: &FunctionSpec, iv: &Interval) -> Result<Self> {
        let x = iv.x.unwrap_or_else(|| iv.midpoint());
        Ok(Self {
            a: f.eval_deriv(iv.a)?.abs(),
            b: f.eval_deriv(iv.b)?.abs(),
            x: f.eval_deriv(x)?.abs(),
            mid: f.eval_deriv(iv.midpoint())?.abs(),
        })
    }
}

/// `(1/(1+p))^(1/p)`
fn holder_factor(p: f64) -> f64 {
    (1.0 / (1.0 + p)).powf(1.0 / p)
}

// ---------------------------------------------------------------------------
// Closed-form right sides. These take plain numbers so tests and the
// proposition cross-checks can call them directly.

/// Right side of the th1 bound.
pub fn th1_rhs(a: f64, b: f64, x: f64, da: f64, db: f64, dx: f64, m: &Moments) -> f64 {
    let w = b - a;
    (x - a).powi(2) / w * (dx * m.m_prod + da * m.m_sq)
        + (b - x).powi(2) / w * (dx * m.m_prod + db * m.m_sq)
}

/// Right side of the th2 bound for Hölder exponent `p`.
#[allow(clippy::too_many_arguments)]
pub fn th2_rhs(a: f64, b: f64, x: f64, da: f64, db: f64, dx: f64, p: f64, m_t: f64, m_1mt: f64) -> f64 {
    let q = p / (p - 1.0);
    let w = b - a;
    let left = (dx.powf(q) * m_t + da.powf(q) * m_1mt).powf(1.0 / q);
    let right = (dx.powf(q) * m_t + db.powf(q) * m_1mt).powf(1.0 / q);
    holder_factor(p) * ((x - a).powi(2) / w * left + (b - x).powi(2) / w * right)
}

/// Right side of the th3 bound for power-mean exponent `q`, with the leading
/// factor `lead^(1-1/q)`.
#[allow(clippy::too_many_arguments)]
pub fn th3_rhs(a: f64, b: f64, x: f64, da: f64, db: f64, dx: f64, q: f64, lead: f64, m_prod: f64, m_sq: f64) -> f64 {
    let w = b - a;
    let left = (dx.powf(q) * m_prod + da.powf(q) * m_sq).powf(1.0 / q);
    let right = (dx.powf(q) * m_prod + db.powf(q) * m_sq).powf(1.0 / q);
    lead.powf(1.0 - 1.0 / q) * ((x - a).powi(2) / w * left + (b - x).powi(2) / w * right)
}

/// Classical Hölder-type bound for convex `|f'|^q`; `printed` selects the
/// `(1/2)^(1/p)` factor as printed instead of `(1/2)^(1/q)`.
pub fn eq111_rhs(a: f64, b: f64, x: f64, da: f64, db: f64, dx: f64, p: f64, printed: bool) -> f64 {
    let q = p / (p - 1.0);
    let half = if printed { 0.5f64.powf(1.0 / p) } else { 0.5f64.powf(1.0 / q) };
    let w = b - a;
    holder_factor(p)
        * half
        * ((x - a).powi(2) * (da.powf(q) + dx.powf(q)).powf(1.0 / q)
            + (b - x).powi(2) * (dx.powf(q) + db.powf(q)).powf(1.0 / q))
        / w
}

/// Classical bound for `|f'|^q` s-convex in the second sense.
#[allow(clippy::too_many_arguments)]
pub fn eq112_rhs(a: f64, b: f64, x: f64, da: f64, db: f64, dx: f64, p: f64, s: f64) -> f64 {
    let q = p / (p - 1.0);
    let w = b - a;
    holder_factor(p)
        * (1.0 / (s + 1.0)).powf(1.0 / q)
        * ((x - a).powi(2) / w * (dx.powf(q) + da.powf(q)).powf(1.0 / q)
            + (b - x).powi(2) / w * (dx.powf(q) + db.powf(q)).powf(1.0 / q))
}

// ---------------------------------------------------------------------------

/// `|((b-x)f(b) + (x-a)f(a))/(b-a) - mean(f)|` and its quadrature error.
fn trapezoid_lhs(f: &FunctionSpec, a: f64, b: f64, x: f64, tol: f64) -> Result<(f64, f64)> {
    let (mean, err) = mean_value_with_error(|u| f.eval(u).unwrap_or(f64::NAN), a, b, tol)?;
    let fa = f.eval(a)?;
    let fb = f.eval(b)?;
    let weighted = ((b - x) * fb + (x - a) * fa) / (b - a);
    Ok(((weighted - mean).abs(), err))
}

fn ensure_within(f: &FunctionSpec, iv: &Interval) -> Result<()> {
    let dom = f.domain();
    if dom.contains(iv) {
        Ok(())
    } else {
        Err(Error::DomainViolation {
            u: if iv.a < dom.a { iv.a } else { iv.b },
            lo: dom.a,
            hi: dom.b,
        })
    }
}

/// Left side of the general trapezoid inequality at `iv.x`.
pub fn lhs_trapezoid_general(f: &FunctionSpec, iv: &Interval, tol: f64) -> Result<f64> {
    ensure_within(f, iv)?;
    let x = point(iv, "lhs_trapezoid_general")?;
    trapezoid_lhs(f, iv.a, iv.b, x, tol).map(|(v, _)| v)
}

/// The two sides of the trapezoid identity at `iv.x`, with the combined
/// quadrature error.
pub fn lemma_identity_sides(f: &FunctionSpec, iv: &Interval, tol: f64) -> Result<(f64, f64, f64)> {
    ensure_within(f, iv)?;
    let x = point(iv, "lemma110")?;
    let Interval { a, b, .. } = *iv;
    let w = b - a;
    let (mean, mean_err) = mean_value_with_error(|u| f.eval(u).unwrap_or(f64::NAN), a, b, tol)?;
    let left = ((b - x) * f.eval(b)? + (x - a) * f.eval(a)?) / w - mean;

    let deriv = |u: f64| f.eval_deriv(u).unwrap_or(f64::NAN);
    let mut right = 0.0;
    let mut err = mean_err;
    if x > a {
        let r = integrate(|t| (t - 1.0) * deriv(t * x + (1.0 - t) * a), 0.0, 1.0, tol)?;
        if !r.converged {
            return Err(Error::NoConvergence {
                estimate: r.value,
                error: r.abs_error_estimate,
            });
        }
        let scale = (x - a).powi(2) / w;
        right += scale * r.value;
        err += scale * r.abs_error_estimate;
    }
    if x < b {
        let r = integrate(|t| (1.0 - t) * deriv(t * x + (1.0 - t) * b), 0.0, 1.0, tol)?;
        if !r.converged {
            return Err(Error::NoConvergence {
                estimate: r.value,
                error: r.abs_error_estimate,
            });
        }
        let scale = (b - x).powi(2) / w;
        right += scale * r.value;
        err += scale * r.abs_error_estimate;
    }
    Ok((left, right, err))
}

/// `|LHS - RHS|` of the trapezoid identity.
pub fn lemma_identity_residual(f: &FunctionSpec, iv: &Interval, tol: f64) -> Result<f64> {
    lemma_identity_sides(f, iv, tol).map(|(l, r, _)| (l - r).abs())
}

impl Verifier {
    pub fn new(opts: BoundOptions) -> Self {
        Self {
            opts,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn options(&self) -> &BoundOptions {
        &self.opts
    }

    fn cached(&self, key: String, compute: impl FnOnce() -> HypothesisCheck) -> HypothesisCheck {
        let cell = {
            let mut map = self.cache.lock().expect("hypothesis cache poisoned");
            map.entry(key).or_default().clone()
        };
        cell.get_or_init(compute).clone()
    }

    /// `|f'|^q` belongs to `class` on `[a, b]`.
    fn deriv_class_check(
        &self,
        name: &str,
        f: &FunctionSpec,
        iv: &Interval,
        q: f64,
        class: ClassName,
        h: Option<&HKernel>,
        s: Option<f64>,
    ) -> HypothesisCheck {
        let key = format!(
            "{name}|{}|{:?}|{}|{}|{q}|{:?}|{s:?}|{:?}",
            f.label(),
            f.derivative_mode(),
            iv.a,
            iv.b,
            h.map(HKernel::label),
            self.opts.class_grid
        );
        self.cached(key, || {
            let dom = Interval { x: None, ..*iv };
            match test_membership_fn(|u| f.abs_deriv_pow(u, q), dom, class, h, s, self.opts.class_grid) {
                Ok(v) => {
                    let detail = v
                        .witness
                        .map(|w| format!("violated at x={}, y={}, t={}", w.x, w.y, w.t))
                        .or_else(|| {
                            let g = v.resolution;
                            Some(format!("no counterexample on a {}x{}x{} grid", g.x, g.y, g.t))
                        });
                    HypothesisCheck::new(name, v.holds, detail)
                }
                Err(e) => HypothesisCheck::new(name, false, Some(e.to_string())),
            }
        })
    }

    fn supermultiplicative(&self, h: &HKernel) -> HypothesisCheck {
        let grid = self.opts.kernel_grid;
        self.cached(format!("supermult|{}|{grid}", h.label()), || {
            match check_supermultiplicative(h, grid) {
                Ok(c) => HypothesisCheck::new(
                    "h_supermultiplicative",
                    c.holds,
                    c.witness.map(|(x, y)| format!("h(xy) < h(x)h(y) at x={x}, y={y}")),
                ),
                Err(e) => HypothesisCheck::new("h_supermultiplicative", false, Some(e.to_string())),
            }
        })
    }

    fn dominates_identity(&self, h: &HKernel) -> HypothesisCheck {
        let grid = self.opts.kernel_grid;
        self.cached(format!("dominance|{}|{grid}", h.label()), || {
            match check_dominates_identity(h, grid) {
                Ok(c) => HypothesisCheck::new(
                    "h_dominates_identity",
                    c.holds,
                    c.witness.map(|a| format!("h(α) < α at α={a}")),
                ),
                Err(e) => HypothesisCheck::new("h_dominates_identity", false, Some(e.to_string())),
            }
        })
    }

    fn kernel_checks(&self, h: &HKernel) -> Vec<HypothesisCheck> {
        vec![self.supermultiplicative(h), self.dominates_identity(h)]
    }

    fn prepare(&self, f: &FunctionSpec, iv: &Interval, h: Option<&HKernel>) -> Result<Option<Moments>> {
        ensure_within(f, iv)?;
        h.map(HKernel::convergent_moments).transpose()
    }

    fn inputs(f: &FunctionSpec, iv: &Interval, h: Option<&HKernel>) -> ReportInputs {
        ReportInputs {
            f: Some(f.label()),
            h: h.map(HKernel::label),
            a: iv.a,
            b: iv.b,
            x: iv.x,
            ..ReportInputs::default()
        }
    }

    // -- Lemma and classical bounds ----------------------------------------

    pub fn lemma(&self, f: &FunctionSpec, iv: &Interval) -> Result<BoundReport> {
        let (left, right, err) = lemma_identity_sides(f, iv, self.opts.tol)?;
        Ok(BoundReport::assemble(
            StatementId::Lemma110,
            Self::inputs(f, iv, None),
            (left - right).abs(),
            10.0 * self.opts.tol,
            Vec::new(),
            err,
            vec![NamedValue::new("identity_lhs", left), NamedValue::new("identity_rhs", right)],
        ))
    }

    pub fn eq109(&self, f: &FunctionSpec, iv: &Interval) -> Result<BoundReport> {
        self.prepare(f, iv, None)?;
        let iv = iv.at(iv.midpoint())?;
        let d = Slopes::new(f, &iv)?;
        let (lhs, err) = trapezoid_lhs(f, iv.a, iv.b, iv.midpoint(), self.opts.tol)?;
        let rhs = iv.width() * (d.a + d.b) / 8.0;
        let checks = vec![self.deriv_class_check("abs_fprime_convex", f, &iv, 1.0, ClassName::Convex, None, None)];
        Ok(BoundReport::assemble(StatementId::Eq109, Self::inputs(f, &iv, None), lhs, rhs, checks, err, Vec::new()))
    }

    pub fn eq111(&self, f: &FunctionSpec, iv: &Interval, p: f64) -> Result<BoundReport> {
        let q = check_p(p)?;
        self.prepare(f, iv, None)?;
        let x = point(iv, "eq111")?;
        let d = Slopes::new(f, iv)?;
        let (lhs, err) = trapezoid_lhs(f, iv.a, iv.b, x, self.opts.tol)?;
        let corrected = eq111_rhs(iv.a, iv.b, x, d.a, d.b, d.x, p, false);
        let printed = eq111_rhs(iv.a, iv.b, x, d.a, d.b, d.x, p, true);
        let rhs = if self.opts.eq111_printed { printed } else { corrected };
        let checks = vec![self.deriv_class_check("abs_fprime_pow_q_convex", f, iv, q, ClassName::Convex, None, None)];
        let mut inputs = Self::inputs(f, iv, None);
        inputs.p = Some(p);
        inputs.q = Some(q);
        Ok(BoundReport::assemble(
            StatementId::Eq111,
            inputs,
            lhs,
            rhs,
            checks,
            err,
            vec![NamedValue::new("half_pow_1_over_q", corrected), NamedValue::new("printed_half_pow_1_over_p", printed)],
        ))
    }

    pub fn eq112(&self, f: &FunctionSpec, iv: &Interval, p: f64, s: f64) -> Result<BoundReport> {
        let q = check_p(p)?;
        self.prepare(f, iv, None)?;
        let x = point(iv, "eq112")?;
        let d = Slopes::new(f, iv)?;
        let (lhs, err) = trapezoid_lhs(f, iv.a, iv.b, x, self.opts.tol)?;
        let rhs = eq112_rhs(iv.a, iv.b, x, d.a, d.b, d.x, p, s);
        let s_ok = s > 0.0 && s <= 1.0;
        let mut checks = vec![HypothesisCheck::new(
            "s_in_unit_interval",
            s_ok,
            (!s_ok).then(|| format!("s = {s}")),
        )];
        if s_ok {
            checks.push(self.deriv_class_check("abs_fprime_pow_q_s_convex", f, iv, q, ClassName::SConvex, None, Some(s)));
        }
        let mut inputs = Self::inputs(f, iv, None);
        inputs.p = Some(p);
        inputs.q = Some(q);
        inputs.s = Some(s);
        Ok(BoundReport::assemble(StatementId::Eq112, inputs, lhs, rhs, checks, err, Vec::new()))
    }

    // -- th1 family ---------------------------------------------------

    fn th1_checks(&self, f: &FunctionSpec, iv: &Interval, h: &HKernel) -> Vec<HypothesisCheck> {
        let mut checks = vec![self.deriv_class_check("abs_fprime_h_convex", f, iv, 1.0, ClassName::HConvex, Some(h), None)];
        checks.extend(self.kernel_checks(h));
        checks
    }

    pub fn th1(&self, f: &FunctionSpec, iv: &Interval, h: &HKernel) -> Result<BoundReport> {
        let m = self.prepare(f, iv, Some(h))?.expect("kernel given");
        let x = point(iv, "th1_eq21")?;
        let d = Slopes::new(f, iv)?;
        let (lhs, err) = trapezoid_lhs(f, iv.a, iv.b, x, self.opts.tol)?;
        let rhs = th1_rhs(iv.a, iv.b, x, d.a, d.b, d.x, &m);
        Ok(BoundReport::assemble(
            StatementId::Th1Eq21,
            Self::inputs(f, iv, Some(h)),
            lhs,
            rhs,
            self.th1_checks(f, iv, h),
            err + m.error,
            Vec::new(),
        ))
    }

    /// The th1 bound at the midpoint.
    pub fn cor1(&self, f: &FunctionSpec, iv: &Interval, h: &HKernel) -> Result<BoundReport> {
        let m = self.prepare(f, iv, Some(h))?.expect("kernel given");
        let iv = iv.at(iv.midpoint())?;
        let d = Slopes::new(f, &iv)?;
        let (lhs, err) = trapezoid_lhs(f, iv.a, iv.b, iv.midpoint(), self.opts.tol)?;
        let rhs = iv.width() / 4.0 * (2.0 * d.mid * m.m_prod + (d.a + d.b) * m.m_sq);
        Ok(BoundReport::assemble(
            StatementId::Cor1,
            Self::inputs(f, &iv, Some(h)),
            lhs,
            rhs,
            self.th1_checks(f, &iv, h),
            err + m.error,
            vec![NamedValue::new("th1_at_midpoint", th1_rhs(iv.a, iv.b, iv.midpoint(), d.a, d.b, d.mid, &m))],
        ))
    }

    /// Midpoint bound with `|f'((a+b)/2)|` replaced via h-convexity.
    pub fn cor2(&self, f: &FunctionSpec, iv: &Interval, h: &HKernel) -> Result<BoundReport> {
        self.cor2_as(StatementId::Cor2, f, iv, h)
    }

    fn cor2_as(&self, id: StatementId, f: &FunctionSpec, iv: &Interval, h: &HKernel) -> Result<BoundReport> {
        let m = self.prepare(f, iv, Some(h))?.expect("kernel given");
        let iv = iv.at(iv.midpoint())?;
        let d = Slopes::new(f, &iv)?;
        let (lhs, err) = trapezoid_lhs(f, iv.a, iv.b, iv.midpoint(), self.opts.tol)?;
        let cor2 = iv.width() / 4.0 * (d.a + d.b) * (2.0 * h.eval(0.5) * m.m_prod + m.m_sq);
        let classical = iv.width() / 8.0 * (d.a + d.b);
        let (rhs, alternates) = if id == StatementId::Cor3 {
            (classical, vec![NamedValue::new("cor2_identity", cor2)])
        } else {
            (cor2, Vec::new())
        };
        Ok(BoundReport::assemble(id, Self::inputs(f, &iv, Some(h)), lhs, rhs, self.th1_checks(f, &iv, h), err + m.error, alternates))
    }

    /// The `h(t) = t` case of [`Verifier::cor2`]: `(b-a)/8 (|f'(a)| + |f'(b)|)`.
    pub fn cor3(&self, f: &FunctionSpec, iv: &Interval) -> Result<BoundReport> {
        self.cor2_as(StatementId::Cor3, f, iv, &HKernel::identity())
    }

    // -- th2 family ---------------------------------------------------

    fn th2_checks(&self, f: &FunctionSpec, iv: &Interval, h: &HKernel, q: f64) -> Vec<HypothesisCheck> {
        vec![self.deriv_class_check("abs_fprime_pow_q_h_convex", f, iv, q, ClassName::HConvex, Some(h), None)]
    }

    fn th2_as(&self, id: StatementId, f: &FunctionSpec, iv: &Interval, h: &HKernel, p: f64) -> Result<BoundReport> {
        let q = check_p(p)?;
        let m = self.prepare(f, iv, Some(h))?.expect("kernel given");
        let x = point(iv, id.as_str_static())?;
        let d = Slopes::new(f, iv)?;
        let (lhs, err) = trapezoid_lhs(f, iv.a, iv.b, x, self.opts.tol)?;
        let derived = th2_rhs(iv.a, iv.b, x, d.a, d.b, d.x, p, m.m_t, m.m_1mt);
        let mut alternates = Vec::new();
        let mut rhs = derived;
        match id {
            StatementId::Cor4 => alternates.push(NamedValue::new("eq111", eq111_rhs(iv.a, iv.b, x, d.a, d.b, d.x, p, false))),
            StatementId::Cor5 => {
                let s = h.power_exponent().ok_or(Error::MissingInput("cor5", "a power kernel h(t) = t^s"))?;
                alternates.push(NamedValue::new("eq112", eq112_rhs(iv.a, iv.b, x, d.a, d.b, d.x, p, s)));
            }
            StatementId::Cor6 => {
                let w = iv.width();
                let printed = holder_factor(p)
                    * (((x - iv.a).powi(2) + (iv.b - x).powi(2)) / w)
                    * (d.x.powf(q) + d.a.powf(q)).powf(1.0 / q);
                alternates.push(NamedValue::new("derived", derived));
                alternates.push(NamedValue::new("printed", printed));
                if self.opts.cor6_printed {
                    rhs = printed;
                }
            }
            _ => {}
        }
        let mut inputs = Self::inputs(f, iv, Some(h));
        inputs.p = Some(p);
        inputs.q = Some(q);
        if id == StatementId::Cor5 {
            inputs.s = h.power_exponent();
        }
        Ok(BoundReport::assemble(id, inputs, lhs, rhs, self.th2_checks(f, iv, h, q), err + m.error, alternates))
    }

    pub fn th2(&self, f: &FunctionSpec, iv: &Interval, h: &HKernel, p: f64) -> Result<BoundReport> {
        self.th2_as(StatementId::Th2Eq22, f, iv, h, p)
    }

    /// The th2 bound with `h(t) = t`, cross-referenced with the classical
    /// Hölder bound.
    pub fn cor4(&self, f: &FunctionSpec, iv: &Interval, p: f64) -> Result<BoundReport> {
        self.th2_as(StatementId::Cor4, f, iv, &HKernel::identity(), p)
    }

    /// The th2 bound with `h(t) = t^s`, cross-referenced with the classical
    /// s-convex bound.
    pub fn cor5(&self, f: &FunctionSpec, iv: &Interval, h: &HKernel, p: f64) -> Result<BoundReport> {
        match h.power_exponent() {
            Some(s) if s > 0.0 && s <= 1.0 => self.th2_as(StatementId::Cor5, f, iv, h, p),
            _ => Err(Error::InvalidParameter(format!(
                "cor5 needs h(t) = t^s with s in (0, 1], got {}",
                h.label()
            ))),
        }
    }

    /// The th2 bound with `h = 1`. The right side is the direct substitution
    /// unless `cor6_printed` is set; both are in `alternates`.
    pub fn cor6(&self, f: &FunctionSpec, iv: &Interval, p: f64) -> Result<BoundReport> {
        self.th2_as(StatementId::Cor6, f, iv, &HKernel::one(), p)
    }

    pub fn th2_specialization(
        &self,
        f: &FunctionSpec,
        iv: &Interval,
        h: &HKernel,
        p: f64,
        which: Th2Point,
    ) -> Result<BoundReport> {
        let q = check_p(p)?;
        let m = self.prepare(f, iv, Some(h))?.expect("kernel given");
        let (a, b) = (iv.a, iv.b);
        let w = b - a;
        let c = holder_factor(p);
        let d = Slopes::new(f, &iv.at(iv.midpoint())?)?;
        let fa = f.eval(a)?;
        let fb = f.eval(b)?;
        let mut checks = self.th2_checks(f, iv, h, q);
        let mut alternates = Vec::new();
        let (id, x, lhs, err, rhs) = match which {
            Th2Point::A => {
                let (mean, err) = mean_value_with_error(|u| f.eval(u).unwrap_or(f64::NAN), a, b, self.opts.tol)?;
                let rhs = w * c * (d.a.powf(q) * m.m_t + d.b.powf(q) * m.m_1mt).powf(1.0 / q);
                (StatementId::RemXa, a, (fb - mean).abs(), err, rhs)
            }
            Th2Point::B => {
                let (mean, err) = mean_value_with_error(|u| f.eval(u).unwrap_or(f64::NAN), a, b, self.opts.tol)?;
                let rhs = w * c * (d.b.powf(q) * m.m_t + d.a.powf(q) * m.m_1mt).powf(1.0 / q);
                (StatementId::RemXb, b, (fa - mean).abs(), err, rhs)
            }
            Th2Point::Mid => {
                let (lhs, err) = trapezoid_lhs(f, a, b, iv.midpoint(), self.opts.tol)?;
                let rhs = w / 4.0
                    * c
                    * ((d.mid.powf(q) * m.m_t + d.a.powf(q) * m.m_1mt).powf(1.0 / q)
                        + (d.mid.powf(q) * m.m_t + d.b.powf(q) * m.m_1mt).powf(1.0 / q));
                (StatementId::RemXmid, iv.midpoint(), lhs, err, rhs)
            }
            Th2Point::MidFprimeZero => {
                let (lhs, err) = trapezoid_lhs(f, a, b, iv.midpoint(), self.opts.tol)?;
                let rhs = w / 4.0 * c * (d.a + d.b) * m.m_t.powf(1.0 / q);
                let slope = f.eval_deriv(iv.midpoint())?;
                let zero = slope.abs() <= FPRIME_ZERO_TOL;
                checks.push(HypothesisCheck::new(
                    "fprime_mid_zero",
                    zero,
                    (!zero).then(|| format!("f'((a+b)/2) = {slope}")),
                ));
                alternates.push(NamedValue::new(
                    "rem_xmid",
                    th2_rhs(a, b, iv.midpoint(), d.a, d.b, d.mid, p, m.m_t, m.m_1mt),
                ));
                (StatementId::RemFprime0, iv.midpoint(), lhs, err, rhs)
            }
        };
        let mut inputs = Self::inputs(f, &iv.at(x)?, Some(h));
        inputs.p = Some(p);
        inputs.q = Some(q);
        Ok(BoundReport::assemble(id, inputs, lhs, rhs, checks, err + m.error, alternates))
    }

    // -- th3 family ---------------------------------------------------

    fn th3_checks(&self, f: &FunctionSpec, iv: &Interval, h: &HKernel, q: f64) -> Vec<HypothesisCheck> {
        let mut checks =
            vec![self.deriv_class_check("abs_fprime_pow_q_h_convex", f, iv, q, ClassName::HConvex, Some(h), None)];
        checks.extend(self.kernel_checks(h));
        checks
    }

    pub fn th3(&self, f: &FunctionSpec, iv: &Interval, h: &HKernel, q: f64) -> Result<BoundReport> {
        check_q(q)?;
        let m = self.prepare(f, iv, Some(h))?.expect("kernel given");
        let x = point(iv, "th3")?;
        let d = Slopes::new(f, iv)?;
        let (lhs, err) = trapezoid_lhs(f, iv.a, iv.b, x, self.opts.tol)?;
        let kernel = th3_rhs(iv.a, iv.b, x, d.a, d.b, d.x, q, m.m_1mt, m.m_prod, m.m_sq);
        let proof = th3_rhs(iv.a, iv.b, x, d.a, d.b, d.x, q, 0.5, m.m_prod, m.m_sq);
        let rhs = if self.opts.th3_proof_factor { proof } else { kernel };
        let mut inputs = Self::inputs(f, iv, Some(h));
        inputs.q = Some(q);
        Ok(BoundReport::assemble(
            StatementId::Th3,
            inputs,
            lhs,
            rhs,
            self.th3_checks(f, iv, h, q),
            err + m.error,
            vec![NamedValue::new("kernel_factor", kernel), NamedValue::new("proof_factor", proof)],
        ))
    }

    /// The th3 bound at the midpoint.
    pub fn cor7(&self, f: &FunctionSpec, iv: &Interval, h: &HKernel, q: f64) -> Result<BoundReport> {
        self.cor7_as(StatementId::Cor7, f, iv, h, q)
    }

    fn cor7_as(&self, id: StatementId, f: &FunctionSpec, iv: &Interval, h: &HKernel, q: f64) -> Result<BoundReport> {
        let p = check_q(q)?;
        let m = self.prepare(f, iv, Some(h))?.expect("kernel given");
        let iv = iv.at(iv.midpoint())?;
        let d = Slopes::new(f, &iv)?;
        let (lhs, err) = trapezoid_lhs(f, iv.a, iv.b, iv.midpoint(), self.opts.tol)?;
        let w = iv.width();
        let braces = |m_prod: f64, m_sq: f64| {
            (d.mid.powf(q) * m_prod + d.a.powf(q) * m_sq).powf(1.0 / q)
                + (d.mid.powf(q) * m_prod + d.b.powf(q) * m_sq).powf(1.0 / q)
        };
        let kernel = w / 4.0 * m.m_1mt.powf(1.0 / p) * braces(m.m_prod, m.m_sq);
        let proof = w / 4.0 * 0.5f64.powf(1.0 / p) * braces(m.m_prod, m.m_sq);
        let general = if self.opts.th3_proof_factor { proof } else { kernel };
        let (rhs, alternates) = match id {
            StatementId::RemTh3Ht => {
                let closed = w / 4.0
                    * 0.5f64.powf(1.0 / p)
                    * (1.0 / 3.0f64).powf(1.0 / q)
                    * ((0.5 * d.mid.powf(q) + d.a.powf(q)).powf(1.0 / q)
                        + (0.5 * d.mid.powf(q) + d.b.powf(q)).powf(1.0 / q));
                (closed, vec![NamedValue::new("cor7_identity", kernel)])
            }
            StatementId::Cor8 => {
                let closed = w / 4.0
                    * ((d.mid.powf(q) + d.a.powf(q)).powf(1.0 / q) + (d.mid.powf(q) + d.b.powf(q)).powf(1.0 / q));
                (
                    closed,
                    vec![NamedValue::new("cor7_one", kernel), NamedValue::new("chained", w / 2.0 * (d.a + d.b))],
                )
            }
            _ => (general, vec![NamedValue::new("kernel_factor", kernel), NamedValue::new("proof_factor", proof)]),
        };
        let mut inputs = Self::inputs(f, &iv, Some(h));
        inputs.q = Some(q);
        inputs.p = Some(p);
        Ok(BoundReport::assemble(id, inputs, lhs, rhs, self.th3_checks(f, &iv, h, q), err + m.error, alternates))
    }

    /// Midpoint th3 bound for `h(t) = t` in closed form.
    pub fn rem_th3_ht(&self, f: &FunctionSpec, iv: &Interval, q: f64) -> Result<BoundReport> {
        self.cor7_as(StatementId::RemTh3Ht, f, iv, &HKernel::identity(), q)
    }

    /// Midpoint th3 bound for `h = 1`; the coarser
    /// `(b-a)/2 (|f'(a)| + |f'(b)|)` is reported as the `chained` alternate.
    pub fn cor8(&self, f: &FunctionSpec, iv: &Interval, q: f64) -> Result<BoundReport> {
        self.cor7_as(StatementId::Cor8, f, iv, &HKernel::one(), q)
    }

    // -- Dispatch -----------------------------------------------------------

    /// Evaluate any statement from a request carrying all inputs.
    pub fn evaluate(&self, req: &BoundRequest<'_>) -> Result<BoundReport> {
        use StatementId::*;
        let id = req.statement;
        let name = id.as_str_static();
        // A supplied kernel with divergent moments is refused whatever the
        // statement, so no finite bound is ever certified for it.
        if let Some(h) = req.h {
            h.convergent_moments()?;
        }
        if id.is_proposition() {
            return means::prop_bound(id, req.iv.a, req.iv.b, req.n, req.q);
        }
        let f = require(req.f, name, "a function f")?;
        let kernel = || require(req.h, name, "a kernel h");
        let p = || require(req.p, name, "the exponent p");
        let q = || require(req.q, name, "the exponent q");
        match id {
            Lemma110 => self.lemma(f, &req.iv),
            Eq109 => self.eq109(f, &req.iv),
            Eq111 => self.eq111(f, &req.iv, p()?),
            Eq112 => {
                let h = kernel()?;
                let s = h.power_exponent().ok_or(Error::MissingInput("eq112", "a power kernel h(t) = t^s"))?;
                self.eq112(f, &req.iv, p()?, s)
            }
            Th1Eq21 => self.th1(f, &req.iv, kernel()?),
            Cor1 => self.cor1(f, &req.iv, kernel()?),
            Cor2 => self.cor2(f, &req.iv, kernel()?),
            Cor3 => self.cor3(f, &req.iv),
            Th2Eq22 => self.th2(f, &req.iv, kernel()?, p()?),
            Cor4 => self.cor4(f, &req.iv, p()?),
            Cor5 => self.cor5(f, &req.iv, kernel()?, p()?),
            Cor6 => self.cor6(f, &req.iv, p()?),
            RemXa => self.th2_specialization(f, &req.iv, kernel()?, p()?, Th2Point::A),
            RemXb => self.th2_specialization(f, &req.iv, kernel()?, p()?, Th2Point::B),
            RemXmid => self.th2_specialization(f, &req.iv, kernel()?, p()?, Th2Point::Mid),
            RemFprime0 => self.th2_specialization(f, &req.iv, kernel()?, p()?, Th2Point::MidFprimeZero),
            Th3 => self.th3(f, &req.iv, kernel()?, q()?),
            Cor7 => self.cor7(f, &req.iv, kernel()?, q()?),
            RemTh3Ht => self.rem_th3_ht(f, &req.iv, q()?),
            Cor8 => self.cor8(f, &req.iv, q()?),
            P301 | P302 | P303 | P304 | P305 => unreachable!("propositions dispatched above"),
        }
    }
}

impl StatementId {
    fn as_str_static(self) -> &'static str {
        self.as_str()
    }
}

/// Evaluation point of a th2 specialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Th2Point {
    A,
    B,
    Mid,
    /// Midpoint with `f'((a+b)/2) = 0`.
    MidFprimeZero,
}

// Free-function entry points with default options.

pub fn th1_bound(f: &FunctionSpec, iv: &Interval, h: &HKernel, tol: f64) -> Result<BoundReport> {
    Verifier::new(BoundOptions::with_tol(tol)).th1(f, iv, h)
}

pub fn cor1_bound(f: &FunctionSpec, iv: &Interval, h: &HKernel, tol: f64) -> Result<BoundReport> {
    Verifier::new(BoundOptions::with_tol(tol)).cor1(f, iv, h)
}

pub fn cor2_bound(f: &FunctionSpec, iv: &Interval, h: &HKernel, tol: f64) -> Result<BoundReport> {
    Verifier::new(BoundOptions::with_tol(tol)).cor2(f, iv, h)
}

pub fn th2_bound(f: &FunctionSpec, iv: &Interval, h: &HKernel, p: f64, tol: f64) -> Result<BoundReport> {
    Verifier::new(BoundOptions::with_tol(tol)).th2(f, iv, h, p)
}

pub fn th2_specializations(
    f: &FunctionSpec,
    iv: &Interval,
    h: &HKernel,
    p: f64,
    which: Th2Point,
    tol: f64,
) -> Result<BoundReport> {
    Verifier::new(BoundOptions::with_tol(tol)).th2_specialization(f, iv, h, p, which)
}

pub fn cor6_bound(f: &FunctionSpec, iv: &Interval, p: f64, tol: f64) -> Result<BoundReport> {
    Verifier::new(BoundOptions::with_tol(tol)).cor6(f, iv, p)
}

pub fn th3_bound(f: &FunctionSpec, iv: &Interval, h: &HKernel, q: f64, tol: f64) -> Result<BoundReport> {
    Verifier::new(BoundOptions::with_tol(tol)).th3(f, iv, h, q)
}

pub fn cor7_bound(f: &FunctionSpec, iv: &Interval, h: &HKernel, q: f64, tol: f64) -> Result<BoundReport> {
    Verifier::new(BoundOptions::with_tol(tol)).cor7(f, iv, h, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Background {
    Eq109,
    Eq111,
    Eq112,
}

/// The classical bounds. `p` is required for `Eq111`/`Eq112`, `s` for
/// `Eq112`.
pub fn background_bounds(
    f: &FunctionSpec,
    iv: &Interval,
    p: Option<f64>,
    s: Option<f64>,
    which: Background,
    tol: f64,
) -> Result<BoundReport> {
    let v = Verifier::new(BoundOptions::with_tol(tol));
    match which {
        Background::Eq109 => v.eq109(f, iv),
        Background::Eq111 => v.eq111(f, iv, require(p, "eq111", "the exponent p")?),
        Background::Eq112 => v.eq112(
            f,
            iv,
            require(p, "eq112", "the exponent p")?,
            require(s, "eq112", "the parameter s")?,
        ),
    }
}
