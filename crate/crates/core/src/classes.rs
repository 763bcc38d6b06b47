//! Grid-based membership tests for the convexity classes and the
//! inclusion chain `f(αx+(1-α)y) <= αf(x)+(1-α)f(y) <= h(α)f(x)+h(1-α)f(y)`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcat::{FunctionSpec, Interval};
use crate::hkernel::{check_dominates_identity, HKernel, DEFAULT_GRID, VIOLATION_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassName {
    Convex,
    /// Godunova–Levin class `Q(I)`.
    GodunovaLevin,
    /// `P(I)`.
    PClass,
    /// s-convex in the second sense, `K_s^2`.
    SConvex,
    /// `SX(h, I)`.
    HConvex,
    /// `SV(h, I)`.
    HConcave,
}

impl ClassName {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassName::Convex => "convex",
            ClassName::GodunovaLevin => "godunova_levin",
            ClassName::PClass => "p_class",
            ClassName::SConvex => "s_convex",
            ClassName::HConvex => "h_convex",
            ClassName::HConcave => "h_concave",
        }
    }

    fn requires_nonnegative(self) -> bool {
        matches!(
            self,
            ClassName::GodunovaLevin | ClassName::PClass | ClassName::SConvex | ClassName::HConvex
        )
    }
}

impl fmt::Display for ClassName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "convex" => ClassName::Convex,
            "godunova_levin" | "Q" => ClassName::GodunovaLevin,
            "p_class" | "P" => ClassName::PClass,
            "s_convex" | "K_s2" => ClassName::SConvex,
            "h_convex" | "SX" => ClassName::HConvex,
            "h_concave" | "SV" => ClassName::HConcave,
            _ => {
                return Err(Error::parse(
                    "class",
                    s,
                    "expected convex, godunova_levin, p_class, s_convex, h_convex or h_concave",
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridCounts {
    pub x: usize,
    pub y: usize,
    pub t: usize,
}

impl Default for GridCounts {
    fn default() -> Self {
        Self { x: 41, y: 41, t: 41 }
    }
}

impl GridCounts {
    pub fn uniform(n: usize) -> Self {
        Self { x: n, y: n, t: n }
    }

    fn validate(&self) -> Result<()> {
        if self.x < 2 || self.y < 2 || self.t < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid counts must be >= 2, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    /// `f(tx + (1-t)y)`
    pub lhs: f64,
    /// Right side of the class inequality at `(x, y, t)`.
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipVerdict {
    pub class_name: ClassName,
    pub holds: bool,
    pub witness: Option<Witness>,
    pub resolution: GridCounts,
    /// Smallest observed margin of the defining inequality (negative when
    /// violated).
    pub min_slack: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

/// `n` points strictly inside `(0, 1)`.
fn open_unit_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

struct ClassRule<'a> {
    weight: Box<dyn Fn(f64) -> (f64, f64) + 'a>,
    open_t: bool,
    reversed: bool,
}

fn rule_for<'a>(class: ClassName, h: Option<&'a HKernel>, s: Option<f64>) -> Result<ClassRule<'a>> {
    let rule = |weight: Box<dyn Fn(f64) -> (f64, f64) + 'a>, open_t, reversed| ClassRule {
        weight,
        open_t,
        reversed,
    };
    Ok(match class {
        ClassName::Convex => rule(Box::new(|t| (t, 1.0 - t)), false, false),
        ClassName::GodunovaLevin => rule(Box::new(|t| (1.0 / t, 1.0 / (1.0 - t))), true, false),
        ClassName::PClass => rule(Box::new(|_| (1.0, 1.0)), false, false),
        ClassName::SConvex => {
            let s = s.ok_or(Error::ClassRequiresS("s_convex"))?;
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::InvalidParameter(format!("s must lie in (0, 1], got {s}")));
            }
            rule(Box::new(move |t: f64| (t.powf(s), (1.0 - t).powf(s))), false, false)
        }
        ClassName::HConvex | ClassName::HConcave => {
            let h = h.ok_or(Error::ClassRequiresKernel(class.as_str()))?;
            // h may be singular at 0 or 1; the endpoints of t are then
            // left out of the grid.
            let open = !(h.eval(0.0).is_finite() && h.eval(1.0).is_finite());
            rule(
                Box::new(move |t: f64| (h.eval(t), h.eval(1.0 - t))),
                open,
                class == ClassName::HConcave,
            )
        }
    })
}

/// Test a function given as a fallible closure on `domain`.
pub fn test_membership_fn(
    f: impl Fn(f64) -> Result<f64>,
    domain: Interval,
    class: ClassName,
    h: Option<&HKernel>,
    s: Option<f64>,
    grid: GridCounts,
) -> Result<MembershipVerdict> {
    grid.validate()?;
    let rule = rule_for(class, h, s)?;
    let xs = linspace(domain.a, domain.b, grid.x);
    let ys = linspace(domain.a, domain.b, grid.y);
    let ts = if rule.open_t {
        open_unit_grid(grid.t)
    } else {
        linspace(0.0, 1.0, grid.t)
    };
    let fx: Vec<f64> = xs.iter().map(|&x| f(x)).collect::<Result<_>>()?;
    let fy: Vec<f64> = ys.iter().map(|&y| f(y)).collect::<Result<_>>()?;
    if class.requires_nonnegative() {
        for (&x, &v) in xs.iter().zip(&fx).chain(ys.iter().zip(&fy)) {
            if v < 0.0 {
                return Err(Error::NegativeFunction { x, value: v });
            }
        }
    }
    let weights: Vec<(f64, f64)> = ts.iter().map(|&t| (rule.weight)(t)).collect();

    let mut witness = None;
    let mut min_slack = f64::INFINITY;
    for (&x, &fxv) in xs.iter().zip(&fx) {
        for (&y, &fyv) in ys.iter().zip(&fy) {
            for (&t, &(wx, wy)) in ts.iter().zip(&weights) {
                let u = (t * x + (1.0 - t) * y).clamp(domain.a, domain.b);
                let lhs = f(u)?;
                let rhs = wx * fxv + wy * fyv;
                let slack = if rule.reversed { lhs - rhs } else { rhs - lhs };
                min_slack = min_slack.min(slack);
                if witness.is_none() && slack < -VIOLATION_TOL {
                    witness = Some(Witness { x, y, t, lhs, rhs });
                }
            }
        }
    }
    Ok(MembershipVerdict {
        class_name: class,
        holds: witness.is_none(),
        witness,
        resolution: grid,
        min_slack,
    })
}

/// Exhaustive grid test of `f` over its domain. The earliest violation in
/// `(x, y, t)` order is returned as the witness.
pub fn test_membership(
    f: &FunctionSpec,
    class: ClassName,
    h: Option<&HKernel>,
    s: Option<f64>,
    grid: GridCounts,
) -> Result<MembershipVerdict> {
    test_membership_fn(|u| f.eval(u), f.domain(), class, h, s, grid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionReport {
    /// `f(αx+(1-α)y) <= αf(x)+(1-α)f(y)` on the whole grid.
    pub convex_step_holds: bool,
    /// `αf(x)+(1-α)f(y) <= h(α)f(x)+h(1-α)f(y)` on the whole grid.
    pub kernel_step_holds: bool,
    pub convex_step_min_slack: f64,
    pub kernel_step_min_slack: f64,
    /// Larger of the two minima.
    pub max_of_min_slacks: f64,
    pub witness: Option<Witness>,
    pub resolution: GridCounts,
}

impl InclusionReport {
    pub fn holds(&self) -> bool {
        self.convex_step_holds && self.kernel_step_holds
    }
}

/// Check both steps of the chain pointwise for `α` in `(0, 1)`.
/// Requires `h(α) >= α`; otherwise the chain is not claimed and
/// [`Error::HypothesisFailed`] is returned.
pub fn verify_inclusion_chain(
    f: &FunctionSpec,
    h: &HKernel,
    grid: GridCounts,
) -> Result<InclusionReport> {
    grid.validate()?;
    let dom = check_dominates_identity(h, DEFAULT_GRID)?;
    if !dom.holds {
        return Err(Error::HypothesisFailed(format!(
            "h(α) >= α fails for {} at α = {}",
            h.label(),
            dom.witness.unwrap_or(f64::NAN)
        )));
    }
    let domain = f.domain();
    let xs = linspace(domain.a, domain.b, grid.x);
    let ys = linspace(domain.a, domain.b, grid.y);
    let alphas = open_unit_grid(grid.t);
    let fx: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect::<Result<_>>()?;
    let fy: Vec<f64> = ys.iter().map(|&y| f.eval(y)).collect::<Result<_>>()?;
    for (&x, &v) in xs.iter().zip(&fx).chain(ys.iter().zip(&fy)) {
        if v < 0.0 {
            return Err(Error::NegativeFunction { x, value: v });
        }
    }

    let mut first_min = f64::INFINITY;
    let mut second_min = f64::INFINITY;
    let mut witness = None;
    for (&x, &fxv) in xs.iter().zip(&fx) {
        for (&y, &fyv) in ys.iter().zip(&fy) {
            for &a in &alphas {
                let u = (a * x + (1.0 - a) * y).clamp(domain.a, domain.b);
                let lhs = f.eval(u)?;
                let chord = a * fxv + (1.0 - a) * fyv;
                let kernel = h.eval(a) * fxv + h.eval(1.0 - a) * fyv;
                let s1 = chord - lhs;
                let s2 = kernel - chord;
                first_min = first_min.min(s1);
                second_min = second_min.min(s2);
                if witness.is_none() && (s1 < -VIOLATION_TOL || s2 < -VIOLATION_TOL) {
                    let rhs = if s1 < -VIOLATION_TOL { chord } else { kernel };
                    let lhs = if s1 < -VIOLATION_TOL { lhs } else { chord };
                    witness = Some(Witness { x, y, t: a, lhs, rhs });
                }
            }
        }
    }
    Ok(InclusionReport {
        convex_step_holds: first_min >= -VIOLATION_TOL,
        kernel_step_holds: second_min >= -VIOLATION_TOL,
        convex_step_min_slack: first_min,
        kernel_step_min_slack: second_min,
        max_of_min_slacks: first_min.max(second_min),
        witness,
        resolution: grid,
    })
}
