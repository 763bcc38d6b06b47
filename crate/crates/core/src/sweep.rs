//! Parameter sweeps: every applicable (statement, f, h, interval, x,
//! exponent) tuple is evaluated, rows come back in input order.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    BoundOptions, BoundReport, BoundRequest, ExponentRole, KernelRole, PointRole, StatementId, Verifier,
};
use crate::error::{Error, Result};
use crate::funcat::{FunctionKind, FunctionSpec, Interval};
use crate::hkernel::HKernel;
use crate::numfmt::{sig17, sig17_opt, to_json};
use crate::quadrature::DEFAULT_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(OutFormat::Json),
            "csv" => Ok(OutFormat::Csv),
            other => Err(Error::parse("format", other, "expected json or csv")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub functions: Vec<String>,
    pub kernels: Vec<String>,
    pub intervals: Vec<(f64, f64)>,
    pub x_grid: usize,
    pub exponents: Vec<f64>,
    pub statements: Vec<StatementId>,
    pub out_format: OutFormat,
    pub tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            functions: ["poly:2", "poly:4", "exp", "recip"].map(String::from).to_vec(),
            kernels: ["id", "power:0.25", "power:0.5", "power:0.75", "one"].map(String::from).to_vec(),
            intervals: vec![(0.0, 1.0), (1.0, 2.0), (-1.0, 1.0)],
            x_grid: 11,
            exponents: vec![1.5, 2.0, 3.0],
            statements: vec![StatementId::Th1Eq21, StatementId::Th2Eq22, StatementId::Th3],
            out_format: OutFormat::Json,
            tol: DEFAULT_TOL,
        }
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(';').map(str::trim).filter(|s| !s.is_empty())
}

pub fn parse_functions(v: &str) -> Result<Vec<String>> {
    split_list(v)
        .map(|s| s.parse::<FunctionKind>().map(|_| s.to_string()))
        .collect()
}

pub fn parse_kernels(v: &str) -> Result<Vec<String>> {
    split_list(v)
        .map(|s| HKernel::from_str(s).map(|_| s.to_string()))
        .collect()
}

/// `a,b;a,b;...`
pub fn parse_intervals(v: &str) -> Result<Vec<(f64, f64)>> {
    split_list(v)
        .map(|s| {
            let (a, b) = s
                .split_once(',')
                .ok_or_else(|| Error::parse("interval", s, "expected a,b"))?;
            let a: f64 = a.trim().parse().map_err(|_| Error::parse("interval", s, "bad left endpoint"))?;
            let b: f64 = b.trim().parse().map_err(|_| Error::parse("interval", s, "bad right endpoint"))?;
            Interval::new(a, b)?;
            Ok((a, b))
        })
        .collect()
}

pub fn parse_reals(v: &str) -> Result<Vec<f64>> {
    split_list(v)
        .map(|s| s.parse().map_err(|_| Error::parse("number", s, "not a real number")))
        .collect()
}

pub fn parse_statements(v: &str) -> Result<Vec<StatementId>> {
    split_list(v).map(str::parse).collect()
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::InvalidParameter(format!("sweep needs at least one {what}")));
        if self.functions.is_empty() {
            return empty("function");
        }
        if self.kernels.is_empty() {
            return empty("kernel");
        }
        if self.intervals.is_empty() {
            return empty("interval");
        }
        if self.statements.is_empty() {
            return empty("statement");
        }
        if self.x_grid < 1 {
            return Err(Error::InvalidParameter("x_grid must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidTolerance(self.tol));
        }
        if let Some(p) = self.exponents.iter().find(|&&p| !(p > 1.0 && p.is_finite())) {
            return Err(Error::BadExponent(format!("sweep exponents must be > 1, got {p}")));
        }
        Ok(())
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "functions" => self.functions = parse_functions(value)?,
            "kernels" => self.kernels = parse_kernels(value)?,
            "intervals" => self.intervals = parse_intervals(value)?,
            "x_grid" => {
                self.x_grid = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse("x_grid", value, "not a count"))?
            }
            "exponents" => self.exponents = parse_reals(value)?,
            "statements" => self.statements = parse_statements(value)?,
            "format" | "out_format" => self.out_format = value.parse()?,
            "tol" => {
                self.tol = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse("tol", value, "not a real number"))?
            }
            other => return Err(Error::parse("config key", other, "unknown key")),
        }
        Ok(())
    }

    /// Parse a `key = value` file. Lists use `;` separators, blank lines
    /// and `#` comments are ignored. Unset keys keep their defaults.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.merge_config_str(text)?;
        Ok(cfg)
    }

    /// Apply the settings of a config file on top of `self`.
    pub fn merge_config_str(&mut self, text: &str) -> Result<()> {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse("config line", line, "expected key = value"))?;
            self.set(k, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Evaluated,
    Skipped,
    Error,
}

impl RowStatus {
    fn as_str(self) -> &'static str {
        match self {
            RowStatus::Evaluated => "evaluated",
            RowStatus::Skipped => "skipped",
            RowStatus::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub statement_id: StatementId,
    pub f: String,
    pub h: Option<String>,
    pub a: f64,
    pub b: f64,
    pub x: Option<f64>,
    pub exponent: Option<f64>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub gap: Option<f64>,
    pub holds: Option<bool>,
    pub hyp_ok: Option<bool>,
    pub quad_err: Option<f64>,
    pub status: RowStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failed_hypotheses: Vec<String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.holds == Some(false) || self.status == RowStatus::Error
    }

    pub fn hypothesis_failed(&self) -> bool {
        self.hyp_ok == Some(false)
    }

    /// Row key as printed in the summary.
    pub fn tuple(&self) -> String {
        let mut s = format!("{} f={}", self.statement_id, self.f);
        if let Some(h) = &self.h {
            let _ = write!(s, " h={h}");
        }
        let _ = write!(s, " a={} b={}", self.a, self.b);
        if let Some(x) = self.x {
            let _ = write!(s, " x={x}");
        }
        if let Some(e) = self.exponent {
            let _ = write!(s, " exponent={e}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub total: usize,
    pub evaluated: usize,
    pub held: usize,
    pub failed: usize,
    pub skipped: usize,
    pub errors: usize,
    pub hypothesis_failures: usize,
    pub min_gap: Option<f64>,
    pub argmin: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

impl SweepOutcome {
    /// 1 if any row fails, else 2 if any hypothesis check fails, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.summary.failed > 0 || self.summary.errors > 0 {
            1
        } else if self.summary.hypothesis_failures > 0 {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("statement_id,f,h,a,b,x,exponent,lhs,rhs,gap,holds,hyp_ok,quad_err,status\n");
        let flag = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.statement_id,
                csv_field(&r.f),
                csv_field(r.h.as_deref().unwrap_or("")),
                sig17(r.a),
                sig17(r.b),
                sig17_opt(r.x),
                sig17_opt(r.exponent),
                sig17_opt(r.lhs),
                sig17_opt(r.rhs),
                sig17_opt(r.gap),
                flag(r.holds),
                flag(r.hyp_ok),
                sig17_opt(r.quad_err),
                r.status.as_str(),
            );
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "# total={} evaluated={} held={} failed={} skipped={} errors={} hypothesis_failures={}",
            s.total, s.evaluated, s.held, s.failed, s.skipped, s.errors, s.hypothesis_failures
        );
        let _ = writeln!(
            out,
            "# min_gap={} argmin={}",
            sig17_opt(s.min_gap),
            s.argmin.as_deref().unwrap_or("")
        );
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

struct Task {
    statement: StatementId,
    f: String,
    n: Option<i32>,
    kernel: Option<usize>,
    fixed_kernel: Option<Arc<HKernel>>,
    interval: (f64, f64),
    x: Option<f64>,
    exponent: Option<f64>,
}

fn x_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { b } else { a + step * i as f64 }).collect()
}

fn plan(cfg: &SweepConfig, kernels: &[Arc<HKernel>]) -> Vec<Task> {
    let identity = Arc::new(HKernel::identity());
    let one = Arc::new(HKernel::one());
    let mut tasks = Vec::new();
    for &statement in &cfg.statements {
        let exps: Vec<Option<f64>> = match statement.exponent_role() {
            ExponentRole::None => vec![None],
            _ => cfg.exponents.iter().copied().map(Some).collect(),
        };
        for f in &cfg.functions {
            let n = match f.parse::<FunctionKind>() {
                Ok(FunctionKind::Power(n)) => Some(n),
                _ => None,
            };
            if statement.is_proposition() {
                let wants_power = matches!(statement, StatementId::P301 | StatementId::P303 | StatementId::P305);
                let applicable = if wants_power { n.is_some() } else { f == "recip" };
                if !applicable {
                    continue;
                }
            }
            let kernel_slots: Vec<(Option<usize>, Option<Arc<HKernel>>)> = match statement.kernel_role() {
                KernelRole::Any => (0..kernels.len()).map(|i| (Some(i), None)).collect(),
                KernelRole::Power => (0..kernels.len())
                    .filter(|&i| kernels[i].power_exponent().is_some_and(|s| s > 0.0 && s <= 1.0))
                    .map(|i| (Some(i), None))
                    .collect(),
                KernelRole::Identity => vec![(None, Some(identity.clone()))],
                KernelRole::One => vec![(None, Some(one.clone()))],
                KernelRole::None => vec![(None, None)],
            };
            for &(a, b) in &cfg.intervals {
                let xs: Vec<Option<f64>> = match statement.point_role() {
                    PointRole::Free => x_points(a, b, cfg.x_grid).into_iter().map(Some).collect(),
                    PointRole::Fixed => vec![None],
                };
                for (kernel, fixed) in &kernel_slots {
                    for &x in &xs {
                        for &exponent in &exps {
                            tasks.push(Task {
                                statement,
                                f: f.clone(),
                                n,
                                kernel: *kernel,
                                fixed_kernel: fixed.clone(),
                                interval: (a, b),
                                x,
                                exponent,
                            });
                        }
                    }
                }
            }
        }
    }
    tasks
}

fn skip_reason(e: &Error) -> Option<&'static str> {
    match e {
        Error::DivergentKernel(_) => Some("divergent-moments"),
        Error::DomainViolation { .. } | Error::NegativeFunction { .. } => Some("domain"),
        Error::ExcludedExponent(_) => Some("excluded-exponent"),
        _ => None,
    }
}

fn run_task(task: &Task, kernels: &[Arc<HKernel>], verifier: &Verifier) -> SweepRow {
    let h: Option<&HKernel> = task
        .kernel
        .map(|i| kernels[i].as_ref())
        .or(task.fixed_kernel.as_deref());
    let (a, b) = task.interval;
    let mut row = SweepRow {
        statement_id: task.statement,
        f: task.f.clone(),
        h: h.map(HKernel::label),
        a,
        b,
        x: task.x,
        exponent: task.exponent,
        lhs: None,
        rhs: None,
        gap: None,
        holds: None,
        hyp_ok: None,
        quad_err: None,
        status: RowStatus::Evaluated,
        reason: None,
        failed_hypotheses: Vec::new(),
    };
    let result = (|| -> Result<BoundReport> {
        if let Some(h) = h {
            h.convergent_moments()?;
        }
        let mut iv = Interval::new(a, b)?;
        if let Some(x) = task.x {
            iv = iv.at(x)?;
        }
        let f = if task.statement.is_proposition() {
            None
        } else {
            Some(FunctionSpec::parse(&task.f, Interval::new(a, b)?)?)
        };
        let (p, q) = match task.statement.exponent_role() {
            ExponentRole::P => (task.exponent, None),
            ExponentRole::Q => (None, task.exponent),
            ExponentRole::None => (None, None),
        };
        verifier.evaluate(&BoundRequest {
            statement: task.statement,
            f: f.as_ref(),
            iv,
            h,
            p,
            q,
            n: task.n,
        })
    })();
    match result {
        Ok(r) => {
            if row.x.is_none() && !task.statement.is_proposition() {
                row.x = r.inputs.x;
            }
            row.lhs = Some(r.lhs);
            row.rhs = Some(r.rhs);
            row.gap = Some(r.gap);
            row.holds = Some(r.holds);
            row.hyp_ok = Some(r.hypotheses_hold());
            row.quad_err = Some(r.quadrature_error);
            row.failed_hypotheses = r
                .hypothesis_checks
                .iter()
                .filter(|c| !c.holds)
                .map(|c| c.name.clone())
                .collect();
        }
        Err(e) => {
            match skip_reason(&e) {
                Some(reason) => {
                    row.status = RowStatus::Skipped;
                    row.reason = Some(reason.to_string());
                }
                None => {
                    row.status = RowStatus::Error;
                    row.reason = Some(e.to_string());
                }
            }
        }
    }
    row
}

fn summarize(rows: &[SweepRow]) -> SweepSummary {
    let mut s = SweepSummary {
        total: rows.len(),
        evaluated: 0,
        held: 0,
        failed: 0,
        skipped: 0,
        errors: 0,
        hypothesis_failures: 0,
        min_gap: None,
        argmin: None,
    };
    for r in rows {
        match r.status {
            RowStatus::Evaluated => s.evaluated += 1,
            RowStatus::Skipped => s.skipped += 1,
            RowStatus::Error => s.errors += 1,
        }
        match r.holds {
            Some(true) => s.held += 1,
            Some(false) => s.failed += 1,
            None => {}
        }
        if r.hypothesis_failed() {
            s.hypothesis_failures += 1;
        }
        if let Some(g) = r.gap {
            if s.min_gap.is_none_or(|m| g < m) {
                s.min_gap = Some(g);
                s.argmin = Some(r.tuple());
            }
        }
    }
    s
}

/// Run the sweep on `jobs` worker threads (`None` uses all cores).
/// Parse errors in the configuration are returned before any work starts.
pub fn run_sweep(cfg: &SweepConfig, jobs: Option<usize>) -> Result<SweepOutcome> {
    run_sweep_with(cfg, jobs, BoundOptions::with_tol(cfg.tol))
}

pub fn run_sweep_with(cfg: &SweepConfig, jobs: Option<usize>, opts: BoundOptions) -> Result<SweepOutcome> {
    cfg.validate()?;
    for f in &cfg.functions {
        f.parse::<FunctionKind>()?;
    }
    let kernels: Vec<Arc<HKernel>> = cfg
        .kernels
        .iter()
        .map(|k| HKernel::from_str(k).map(Arc::new))
        .collect::<Result<_>>()?;
    let tasks = plan(cfg, &kernels);
    let verifier = Verifier::new(opts);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::InvalidParameter("jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| run_task(t, &kernels, &verifier))
            .collect()
    });
    let summary = summarize(&rows);
    Ok(SweepOutcome { rows, summary })
}
