//! Kernels `h` on `(0, 1]`, their property checks, and the four moment
//! integrals every bound is built from.
//!
//! Property checks sample a grid and look for counterexamples; a `holds`
//! verdict means no counterexample was found at that resolution.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureResult, DEFAULT_TOL};

/// Default resolution of the sampling checks.
pub const DEFAULT_GRID: usize = 1001;
/// A sampled inequality counts as violated only beyond this margin.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Moments are computed once per kernel, so they get a much tighter
/// tolerance than the per-report integrals.
pub const MOMENT_TOL: f64 = 1e-14;

pub type KernelFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum KernelKind {
    /// `h(t) = t`
    Identity,
    /// `h(t) = t^s`, `s > 0`
    Power(f64),
    /// `h(t) = 1`
    One,
    /// `h(t) = 1/t`
    Godunova,
    /// `h(t) = t^k`, any real `k`
    PowerGeneral(f64),
    User { name: String, func: KernelFn },
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Identity => f.write_str("id"),
            KernelKind::Power(s) => write!(f, "power:{s}"),
            KernelKind::One => f.write_str("one"),
            KernelKind::Godunova => f.write_str("godunova"),
            KernelKind::PowerGeneral(k) => write!(f, "powk:{k}"),
            KernelKind::User { name, .. } => f.write_str(name),
        }
    }
}

impl fmt::Debug for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    /// Accepts `id`, `power:s`, `one`, `godunova`, `powk:k`, each with an
    /// optional `h=` prefix.
    fn from_str(input: &str) -> Result<Self> {
        let s = input.trim();
        let s = s.strip_prefix("h=").unwrap_or(s);
        let real = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::parse("kernel", input, "expected a finite real parameter"))
        };
        match s.split_once(':') {
            None => match s {
                "id" => Ok(KernelKind::Identity),
                "one" => Ok(KernelKind::One),
                "godunova" => Ok(KernelKind::Godunova),
                _ => Err(Error::parse(
                    "kernel",
                    input,
                    "expected one of id, power:s, one, godunova, powk:k",
                )),
            },
            Some(("power", v)) => {
                let s = real(v)?;
                if s <= 0.0 {
                    return Err(Error::parse("kernel", input, "power:s needs s > 0"));
                }
                Ok(KernelKind::Power(s))
            }
            Some(("powk", v)) => Ok(KernelKind::PowerGeneral(real(v)?)),
            Some(_) => Err(Error::parse(
                "kernel",
                input,
                "expected one of id, power:s, one, godunova, powk:k",
            )),
        }
    }
}

/// The four kernel moments:
/// `m_t = ∫h(t)`, `m_1mt = ∫h(1-t)`, `m_prod = ∫h((1-t)t)`,
/// `m_sq = ∫h((1-t)^2)`, all over `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub m_t: QuadratureResult,
    pub m_1mt: QuadratureResult,
    pub m_prod: QuadratureResult,
    pub m_sq: QuadratureResult,
}

impl MomentSet {
    pub fn all(&self) -> [&QuadratureResult; 4] {
        [&self.m_t, &self.m_1mt, &self.m_prod, &self.m_sq]
    }

    pub fn converged(&self) -> bool {
        self.all().iter().all(|m| m.converged)
    }

    pub fn total_error(&self) -> f64 {
        self.all().iter().map(|m| m.abs_error_estimate).sum()
    }
}

/// Plain moment values, extracted once divergence has been ruled out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub m_t: f64,
    pub m_1mt: f64,
    pub m_prod: f64,
    pub m_sq: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupermultiplicativeCheck {
    pub holds: bool,
    /// Pair `(x, y)` with the largest violation of `h(xy) >= h(x)h(y)`.
    pub witness: Option<(f64, f64)>,
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceCheck {
    pub holds: bool,
    /// The `α` with the largest shortfall `α - h(α)`.
    pub witness: Option<f64>,
    pub grid: usize,
}

pub struct HKernel {
    kind: KernelKind,
    tol: f64,
    moments: OnceLock<MomentSet>,
}

impl Clone for HKernel {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind.clone(),
            tol: self.tol,
            moments: self.moments.clone(),
        }
    }
}

impl fmt::Debug for HKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HKernel")
            .field("kind", &self.kind)
            .field("tol", &self.tol)
            .finish()
    }
}

impl FromStr for HKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Self::new(s.parse()?))
    }
}

impl HKernel {
    pub fn new(kind: KernelKind) -> Self {
        Self::with_tol(kind, MOMENT_TOL)
    }

    pub fn with_tol(kind: KernelKind, tol: f64) -> Self {
        Self {
            kind,
            tol,
            moments: OnceLock::new(),
        }
    }

    pub fn user(name: impl Into<String>, func: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(KernelKind::User {
            name: name.into(),
            func: Arc::new(func),
        })
    }

    pub fn identity() -> Self {
        Self::new(KernelKind::Identity)
    }

    pub fn one() -> Self {
        Self::new(KernelKind::One)
    }

    pub fn power(s: f64) -> Self {
        Self::new(KernelKind::Power(s))
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn label(&self) -> String {
        self.kind.to_string()
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            KernelKind::Identity => t,
            KernelKind::Power(s) | KernelKind::PowerGeneral(s) => t.powf(*s),
            KernelKind::One => 1.0,
            KernelKind::Godunova => 1.0 / t,
            KernelKind::User { func, .. } => func(t),
        }
    }

    /// Kernels whose moments are known to diverge because `h` blows up
    /// at an endpoint of `[0, 1]` non-integrably.
    pub fn is_endpoint_singular(&self) -> bool {
        match self.kind {
            KernelKind::Godunova => true,
            // the (1-t)^2 moment is the integral of u^(2k)
            KernelKind::PowerGeneral(k) => k <= -0.5,
            _ => false,
        }
    }

    /// The power `s` when `h(t) = t^s` (identity counts as `s = 1`).
    pub fn power_exponent(&self) -> Option<f64> {
        match self.kind {
            KernelKind::Identity => Some(1.0),
            KernelKind::Power(s) => Some(s),
            _ => None,
        }
    }

    /// Moments at the kernel's own tolerance, computed once. Entries that
    /// cannot reach it are recomputed at the default quadrature tolerance.
    pub fn moments(&self) -> &MomentSet {
        self.moments
            .get_or_init(|| moments_with_fallback(self, self.tol, DEFAULT_TOL))
    }

    /// Moment values, or [`Error::DivergentKernel`] if any moment fails to
    /// converge.
    pub fn convergent_moments(&self) -> Result<Moments> {
        if self.is_endpoint_singular() {
            return Err(Error::DivergentKernel(self.label()));
        }
        let m = self.moments();
        if !m.converged() {
            return Err(Error::DivergentKernel(self.label()));
        }
        Ok(Moments {
            m_t: m.m_t.value,
            m_1mt: m.m_1mt.value,
            m_prod: m.m_prod.value,
            m_sq: m.m_sq.value,
            error: m.total_error(),
        })
    }
}

/// Moment integrand arguments on `[0, 1/2]` and, for the upper half, in
/// terms of `u = 1 - t` so that `h` near `t = 1` is sampled without losing
/// the resolution of `1 - t`.
type ArgPair = (fn(f64) -> f64, fn(f64) -> f64);

const ARG_T: ArgPair = (|t| t, |u| 1.0 - u);
const ARG_1MT: ArgPair = (|t| 1.0 - t, |u| u);
const ARG_PROD: ArgPair = (|t| (1.0 - t) * t, |u| u * (1.0 - u));
const ARG_SQ: ArgPair = (|t| (1.0 - t) * (1.0 - t), |u| u * u);

fn moment(h: &HKernel, (lower, upper): ArgPair, tol: f64) -> QuadratureResult {
    let half = |arg: fn(f64) -> f64| integrate(|t| h.eval(arg(t)), 0.0, 0.5, tol / 2.0);
    match (half(lower), half(upper)) {
        (Ok(l), Ok(u)) => QuadratureResult {
            value: l.value + u.value,
            abs_error_estimate: l.abs_error_estimate + u.abs_error_estimate,
            converged: l.converged && u.converged,
            evaluations: l.evaluations + u.evaluations,
        },
        // A non-finite node value this close to a singular endpoint is
        // divergence, not a usable estimate.
        _ => QuadratureResult::divergent(),
    }
}

/// Compute all four moments at `tol`. Divergent entries carry
/// `converged = false`.
pub fn moments(h: &HKernel, tol: f64) -> MomentSet {
    MomentSet {
        m_t: moment(h, ARG_T, tol),
        m_1mt: moment(h, ARG_1MT, tol),
        m_prod: moment(h, ARG_PROD, tol),
        m_sq: moment(h, ARG_SQ, tol),
    }
}

/// Like [`moments`], but an entry that cannot reach `tol` (integrable
/// singularities run into the depth limit) is retried at `fallback`.
fn moments_with_fallback(h: &HKernel, tol: f64, fallback: f64) -> MomentSet {
    let pick = |args: ArgPair| {
        let r = moment(h, args, tol);
        if r.converged || fallback <= tol {
            r
        } else {
            moment(h, args, fallback)
        }
    };
    MomentSet {
        m_t: pick(ARG_T),
        m_1mt: pick(ARG_1MT),
        m_prod: pick(ARG_PROD),
        m_sq: pick(ARG_SQ),
    }
}

/// Sample `h(xy) >= h(x) h(y)` on the grid `{k/(grid-1) : k = 1..grid-1}²`
/// inside `(0, 1]²`.
pub fn check_supermultiplicative(h: &HKernel, grid: usize) -> Result<SupermultiplicativeCheck> {
    if grid < 2 {
        return Err(Error::InvalidParameter(format!("grid must be >= 2, got {grid}")));
    }
    let n = grid - 1;
    let pts: Vec<f64> = (1..=n).map(|k| k as f64 / n as f64).collect();
    let vals: Vec<f64> = pts.iter().map(|&t| h.eval(t)).collect();
    let mut worst: Option<(f64, (f64, f64))> = None;
    for (i, &x) in pts.iter().enumerate() {
        for (j, &y) in pts.iter().enumerate().skip(i) {
            let shortfall = vals[i] * vals[j] - h.eval(x * y);
            if shortfall > VIOLATION_TOL && worst.is_none_or(|(w, _)| shortfall > w) {
                worst = Some((shortfall, (x, y)));
            }
        }
    }
    Ok(SupermultiplicativeCheck {
        holds: worst.is_none(),
        witness: worst.map(|(_, w)| w),
        grid,
    })
}

/// Sample `h(α) >= α` on `{k/(grid-1) : k = 1..grid-2}` inside `(0, 1)`.
pub fn check_dominates_identity(h: &HKernel, grid: usize) -> Result<DominanceCheck> {
    if grid < 2 {
        return Err(Error::InvalidParameter(format!("grid must be >= 2, got {grid}")));
    }
    let n = grid - 1;
    let mut worst: Option<(f64, f64)> = None;
    for k in 1..n {
        let alpha = k as f64 / n as f64;
        let shortfall = alpha - h.eval(alpha);
        if shortfall > VIOLATION_TOL && worst.is_none_or(|(w, _)| shortfall > w) {
            worst = Some((shortfall, alpha));
        }
    }
    Ok(DominanceCheck {
        holds: worst.is_none(),
        witness: worst.map(|(_, a)| a),
        grid,
    })
}

/// Sample `h(t) >= 0` on the open grid of `(0, 1)`.
pub fn check_nonnegative(h: &HKernel, grid: usize) -> bool {
    let n = grid.max(2) - 1;
    (1..n).all(|k| h.eval(k as f64 / n as f64) >= 0.0)
}
