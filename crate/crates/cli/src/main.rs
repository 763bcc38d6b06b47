//! `hhb` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hhb_core::bounds::{BoundOptions, BoundReport, BoundRequest, StatementId, Verifier};
use hhb_core::classes::{test_membership, ClassName, GridCounts};
use hhb_core::funcat::{FunctionSpec, Interval};
use hhb_core::hkernel::HKernel;
use hhb_core::means::{mean_value, prop_bound, MeanKind};
use hhb_core::numfmt::to_json;
use hhb_core::quadrature::DEFAULT_TOL;
use hhb_core::sweep::{self, OutFormat, SweepConfig};
use hhb_core::Error;

const EXIT_USAGE: u8 = 64;
const EXIT_NUMERIC: u8 = 70;

#[derive(Debug, Parser)]
#[command(name = "hhb", version)]
#[command(about = "Numeric checks of trapezoid-type Hermite-Hadamard bounds for h-convex functions")]
struct Cli {
    /// Quadrature tolerance. Falls back to HHB_TOL, then 1e-10.
    #[arg(long, global = true, allow_negative_numbers = true)]
    tol: Option<f64>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output format for sweeps.
    #[arg(long, global = true)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one statement and print its report
    Verify(VerifyArgs),
    /// Evaluate statements over a parameter grid
    Sweep(SweepArgs),
    /// Test a catalog function for class membership on a grid
    Classify(ClassifyArgs),
    /// Print the two-point means of a and b
    Means {
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        /// Exponent of the p-logarithmic mean.
        #[arg(long, allow_negative_numbers = true)]
        p: Option<f64>,
    },
    /// Evaluate a closed-form proposition (p301..p305)
    Prop {
        #[arg(long)]
        id: String,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, allow_negative_numbers = true)]
        n: Option<i32>,
        #[arg(long)]
        q: Option<f64>,
    },
    /// Print the four moment integrals of a kernel
    Moments {
        #[arg(long)]
        h: String,
    },
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Statement id, e.g. th1, cor2, rem_xa, p302.
    #[arg(long)]
    statement: String,
    /// Function: poly:n, recip, exp or affine:c0,c1.
    #[arg(long)]
    f: Option<String>,
    /// Kernel: id, one, power:s, godunova or powk:k.
    #[arg(long)]
    h: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    #[arg(long, allow_negative_numbers = true)]
    x: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    n: Option<i32>,
    /// Use the printed single-term form for the h = 1 Hölder corollary.
    #[arg(long)]
    cor6_printed: bool,
    /// Use (1/2)^(1-1/q) as the leading factor of the power-mean bounds.
    #[arg(long)]
    th3_proof_factor: bool,
    /// Use the printed (1/2)^(1/p) factor in the classical Hölder bound.
    #[arg(long)]
    eq111_printed: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// key = value file; flags given here override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `;`-separated function specs.
    #[arg(long)]
    functions: Option<String>,
    /// `;`-separated kernel specs.
    #[arg(long)]
    kernels: Option<String>,
    /// `;`-separated intervals, each `a,b`.
    #[arg(long, allow_hyphen_values = true)]
    intervals: Option<String>,
    #[arg(long)]
    x_grid: Option<usize>,
    /// `;`-separated exponents (p or q depending on the statement).
    #[arg(long)]
    exponents: Option<String>,
    /// `;`-separated statement ids.
    #[arg(long)]
    statements: Option<String>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(long)]
    f: String,
    /// convex, godunova_levin, p_class, s_convex, h_convex or h_concave.
    #[arg(long)]
    class: String,
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    /// Points per axis of the (x, y, t) grid.
    #[arg(long, default_value_t = 41)]
    grid: usize,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CmdResult = Result<u8, Failure>;

fn resolve_tol(flag: Option<f64>) -> Result<Option<f64>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("HHB_TOL") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("HHB_TOL is not a number: {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn check_tol(tol: f64) -> Result<f64, Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(Error::InvalidTolerance(tol).into())
    }
}

fn report_exit(r: &BoundReport) -> u8 {
    println!("{}", to_json(r));
    if !r.holds {
        1
    } else if !r.hypotheses_hold() {
        2
    } else {
        0
    }
}

fn cmd_verify(args: VerifyArgs, tol: f64) -> CmdResult {
    let statement: StatementId = args.statement.parse()?;
    let base = Interval::new(args.a, args.b)?;
    let iv = match args.x {
        Some(x) => base.at(x)?,
        None => base,
    };
    let f = args
        .f
        .as_deref()
        .map(|s| FunctionSpec::parse(s, base))
        .transpose()?;
    let mut h = args.h.as_deref().map(str::parse::<HKernel>).transpose()?;
    if h.is_none() && statement == StatementId::Eq112 {
        h = args.s.map(HKernel::power);
    }
    let opts = BoundOptions {
        cor6_printed: args.cor6_printed,
        th3_proof_factor: args.th3_proof_factor,
        eq111_printed: args.eq111_printed,
        ..BoundOptions::with_tol(tol)
    };
    let report = Verifier::new(opts).evaluate(&BoundRequest {
        statement,
        f: f.as_ref(),
        iv,
        h: h.as_ref(),
        p: args.p,
        q: args.q,
        n: args.n,
    })?;
    Ok(report_exit(&report))
}

fn cmd_sweep(args: SweepArgs, tol_flag: Option<f64>, jobs: Option<usize>, format: Option<Format>) -> CmdResult {
    let mut cfg = SweepConfig::default();
    if let Some(t) = resolve_tol(None)? {
        cfg.tol = t;
    }
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        cfg.merge_config_str(&text)?;
    }
    if let Some(v) = &args.functions {
        cfg.functions = sweep::parse_functions(v)?;
    }
    if let Some(v) = &args.kernels {
        cfg.kernels = sweep::parse_kernels(v)?;
    }
    if let Some(v) = &args.intervals {
        cfg.intervals = sweep::parse_intervals(v)?;
    }
    if let Some(n) = args.x_grid {
        cfg.x_grid = n;
    }
    if let Some(v) = &args.exponents {
        cfg.exponents = sweep::parse_reals(v)?;
    }
    if let Some(v) = &args.statements {
        cfg.statements = sweep::parse_statements(v)?;
    }
    if let Some(t) = tol_flag {
        cfg.tol = t;
    }
    if let Some(f) = format {
        cfg.out_format = match f {
            Format::Json => OutFormat::Json,
            Format::Csv => OutFormat::Csv,
        };
    }
    let out = sweep::run_sweep(&cfg, jobs)?;
    match cfg.out_format {
        OutFormat::Json => println!("{}", out.to_json()),
        OutFormat::Csv => print!("{}", out.to_csv()),
    }
    Ok(out.exit_code() as u8)
}

fn cmd_classify(args: ClassifyArgs) -> CmdResult {
    let class: ClassName = args.class.parse()?;
    let f = FunctionSpec::parse(&args.f, Interval::new(args.a, args.b)?)?;
    let h = args.h.as_deref().map(str::parse::<HKernel>).transpose()?;
    let verdict = test_membership(&f, class, h.as_ref(), args.s, GridCounts::uniform(args.grid))?;
    let out = json!({
        "f": f.label(),
        "h": h.as_ref().map(HKernel::label),
        "a": args.a,
        "b": args.b,
        "verdict": verdict,
    });
    println!("{}", to_json(&out));
    Ok(if verdict.holds { 0 } else { 1 })
}

fn cmd_means(a: f64, b: f64, p: Option<f64>) -> CmdResult {
    let mut kinds = vec![
        MeanKind::Quadratic,
        MeanKind::Arithmetic,
        MeanKind::Geometric,
        MeanKind::Logarithmic,
    ];
    kinds.extend(p.map(MeanKind::PLogarithmic));
    let values = kinds
        .into_iter()
        .map(|k| mean_value(k, a, b))
        .collect::<Result<Vec<_>, _>>()?;
    println!("{}", to_json(&values));
    Ok(0)
}

fn cmd_prop(id: &str, a: f64, b: f64, n: Option<i32>, q: Option<f64>) -> CmdResult {
    let id: StatementId = id.parse()?;
    if !id.is_proposition() {
        return Err(Failure::Usage(format!("{id} is not a proposition; use verify")));
    }
    Ok(report_exit(&prop_bound(id, a, b, n, q)?))
}

fn cmd_moments(h: &str) -> CmdResult {
    let h: HKernel = h.parse()?;
    let m = h.moments();
    let out = json!({
        "h": h.label(),
        "converged": m.converged(),
        "m_t": m.m_t,
        "m_1mt": m.m_1mt,
        "m_prod": m.m_prod,
        "m_sq": m.m_sq,
    });
    println!("{}", to_json(&out));
    Ok(if m.converged() { 0 } else { 1 })
}

fn run(cli: Cli) -> CmdResult {
    let Cli {
        tol,
        jobs,
        format,
        command,
    } = cli;
    if let Some(t) = tol {
        check_tol(t)?;
    }
    match command {
        Command::Verify(args) => {
            let tol = check_tol(resolve_tol(tol)?.unwrap_or(DEFAULT_TOL))?;
            cmd_verify(args, tol)
        }
        Command::Sweep(args) => cmd_sweep(args, tol, jobs, format),
        Command::Classify(args) => cmd_classify(args),
        Command::Means { a, b, p } => cmd_means(a, b, p),
        Command::Prop { id, a, b, n, q } => cmd_prop(&id, a, b, n, q),
        Command::Moments { h } => cmd_moments(&h),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { EXIT_USAGE } else { EXIT_NUMERIC })
        }
    }
}
