//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion and then asserts it. Oracles are written out here
//! independently of the library formulas.

use std::time::{Duration, Instant};

use hhb_core::bounds::{BoundOptions, BoundRequest, KernelRole, StatementId, Verifier};
use hhb_core::classes::{test_membership, test_membership_fn, verify_inclusion_chain, ClassName, GridCounts};
use hhb_core::funcat::{FunctionSpec, Interval};
use hhb_core::hkernel::{check_dominates_identity, HKernel};
use hhb_core::means::prop_bound;
use hhb_core::quadrature::{mean_value, DEFAULT_TOL};
use hhb_core::sweep::{run_sweep, RowStatus, SweepConfig};
use hhb_core::Error;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn report(n: u32, ok: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let timed_ok = elapsed < limit;
    println!(
        "acceptance criterion {n}: {} ({detail}; {:.3} s, limit {} s)",
        if ok && timed_ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(ok, "criterion {n} failed: {detail}");
    assert!(timed_ok, "criterion {n} exceeded its runtime limit");
}

/// Catalog functions with hand-written derivatives.
#[derive(Clone, Copy, Debug)]
enum Oracle {
    Poly(i32),
    Exp,
    Recip,
    Affine(f64, f64),
}

impl Oracle {
    fn spec(self) -> String {
        match self {
            Oracle::Poly(n) => format!("poly:{n}"),
            Oracle::Exp => "exp".into(),
            Oracle::Recip => "recip".into(),
            Oracle::Affine(c0, c1) => format!("affine:{c0},{c1}"),
        }
    }

    fn value(self, x: f64) -> f64 {
        match self {
            Oracle::Poly(n) => x.powi(n),
            Oracle::Exp => x.exp(),
            Oracle::Recip => 1.0 / x,
            Oracle::Affine(c0, c1) => c0 + c1 * x,
        }
    }

    fn slope(self, x: f64) -> f64 {
        match self {
            Oracle::Poly(n) => f64::from(n) * x.powi(n - 1),
            Oracle::Exp => x.exp(),
            Oracle::Recip => -1.0 / (x * x),
            Oracle::Affine(_, c1) => c1,
        }
    }

    fn positive_only(self) -> bool {
        matches!(self, Oracle::Recip) || matches!(self, Oracle::Poly(n) if n < 0)
    }
}

const CATALOG: [Oracle; 6] = [
    Oracle::Poly(2),
    Oracle::Poly(3),
    Oracle::Poly(4),
    Oracle::Exp,
    Oracle::Recip,
    Oracle::Affine(1.0, -2.0),
];

fn random_interval(rng: &mut StdRng, f: Oracle) -> (f64, f64) {
    let (lo, hi): (f64, f64) = if f.positive_only() { (0.5, 3.0) } else { (-2.0, 2.0) };
    loop {
        let a = rng.gen_range(lo..hi);
        let b = rng.gen_range(lo..hi);
        if (b - a).abs() > 1e-3 {
            return (a.min(b), a.max(b));
        }
    }
}

fn spec_on(f: Oracle, a: f64, b: f64) -> FunctionSpec {
    FunctionSpec::parse(&f.spec(), Interval::new(a, b).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn criterion_1_identity_kernel_midpoint_reduction() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let v = Verifier::default();
    let id = HKernel::identity();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let f = CATALOG[rng.gen_range(0..CATALOG.len())];
        let (a, b) = random_interval(&mut rng, f);
        let r = v.cor2(&spec_on(f, a, b), &Interval::new(a, b).unwrap(), &id).unwrap();
        let oracle = (b - a) / 8.0 * (f.slope(a).abs() + f.slope(b).abs());
        worst = worst.max((r.rhs - oracle).abs());
    }
    report(1, worst <= 1e-12, start.elapsed(), Duration::from_secs(1), &format!("max |diff| = {worst:.3e}"));
}

fn holder_oracle(a: f64, b: f64, x: f64, da: f64, db: f64, dx: f64, p: f64, kappa: f64) -> f64 {
    let q = p / (p - 1.0);
    let c = (1.0 / (p + 1.0)).powf(1.0 / p);
    c * kappa
        * ((x - a).powi(2) / (b - a) * (dx.powf(q) + da.powf(q)).powf(1.0 / q)
            + (b - x).powi(2) / (b - a) * (dx.powf(q) + db.powf(q)).powf(1.0 / q))
}

#[test]
fn criterion_2_holder_reductions() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    let v = Verifier::default();
    let mut worst_id: f64 = 0.0;
    let mut worst_pow: f64 = 0.0;
    let kernels = [(HKernel::identity(), 1.0)]
        .into_iter()
        .chain([0.25, 0.5, 0.75].map(|s| (HKernel::power(s), s)));
    for (h, s) in kernels {
        for _ in 0..20 {
            let f = CATALOG[rng.gen_range(0..CATALOG.len())];
            let (a, b) = random_interval(&mut rng, f);
            let x = rng.gen_range(a..=b);
            let p = rng.gen_range(1.1..5.0);
            let iv = Interval::with_point(a, b, x).unwrap();
            let r = v.th2(&spec_on(f, a, b), &iv, &h, p).unwrap();
            let (da, db, dx) = (f.slope(a).abs(), f.slope(b).abs(), f.slope(x).abs());
            let q = p / (p - 1.0);
            if s == 1.0 {
                let oracle = holder_oracle(a, b, x, da, db, dx, p, 0.5f64.powf(1.0 / q));
                worst_id = worst_id.max(rel(r.rhs, oracle));
            } else {
                let oracle = holder_oracle(a, b, x, da, db, dx, p, (1.0 / (s + 1.0)).powf(1.0 / q));
                worst_pow = worst_pow.max(rel(r.rhs, oracle));
            }
        }
    }
    let ok = worst_id <= 1e-12 && worst_pow <= 1e-12;
    report(
        2,
        ok,
        start.elapsed(),
        Duration::from_secs(1),
        &format!("max diff vs identity-kernel form {worst_id:.3e}, vs power-kernel form {worst_pow:.3e}"),
    );
}

#[test]
fn criterion_3_lemma_identity() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(3);
    let v = Verifier::default();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for f in [Oracle::Poly(2), Oracle::Poly(4), Oracle::Exp, Oracle::Recip] {
        for _ in 0..100 {
            let (a, b) = loop {
                let a: f64 = rng.gen_range(1.0..2.0);
                let b: f64 = rng.gen_range(1.0..2.0);
                if (a - b).abs() > 1e-6 {
                    break (a.min(b), a.max(b));
                }
            };
            let x = rng.gen_range(a..=b);
            let r = v.lemma(&spec_on(f, a, b), &Interval::with_point(a, b, x).unwrap()).unwrap();
            worst = worst.max(r.lhs);
            count += 1;
        }
    }
    report(
        3,
        worst <= 1e-8,
        start.elapsed(),
        Duration::from_secs(5),
        &format!("{count} cases, max residual {worst:.3e}"),
    );
}

#[test]
fn criterion_4_global_validity_sweep() {
    let start = Instant::now();
    let cfg = SweepConfig {
        statements: "th1;cor1;cor2;th2;rem_xa;rem_xb;rem_xmid;rem_fprime0;cor6;th3;cor7;cor8"
            .split(';')
            .map(|s| s.parse().unwrap())
            .collect(),
        ..SweepConfig::default()
    };
    let out = run_sweep(&cfg, None).unwrap();
    let evaluated: Vec<_> = out.rows.iter().filter(|r| r.status == RowStatus::Evaluated).collect();
    let errors = out.rows.iter().filter(|r| r.status == RowStatus::Error).count();
    let hyp_rows: Vec<_> = evaluated.iter().filter(|r| r.hyp_ok == Some(true)).collect();
    let bad_hyp = hyp_rows.iter().filter(|r| r.gap.unwrap() < -1e-9).count();
    let bad_all = evaluated.iter().filter(|r| r.gap.unwrap() < -1e-9).count();
    for r in evaluated.iter().filter(|r| r.gap.unwrap() < -1e-9).take(10) {
        println!("  negative gap {:.3e}: {}", r.gap.unwrap(), r.tuple());
    }
    let ok = bad_hyp == 0 && errors == 0 && hyp_rows.len() > 1000;
    report(
        4,
        ok,
        start.elapsed(),
        Duration::from_secs(30),
        &format!(
            "{} rows, {} evaluated, {} with hypotheses met, {} of those below -1e-9, {} below -1e-9 overall, {} errors, min gap {:.3e}",
            out.rows.len(),
            evaluated.len(),
            hyp_rows.len(),
            bad_hyp,
            bad_all,
            errors,
            out.summary.min_gap.unwrap_or(f64::NAN)
        ),
    );
}

#[test]
fn criterion_5_proposition_cross_checks() {
    let start = Instant::now();
    let v = Verifier::default();
    let id = HKernel::identity();
    let mut worst: f64 = 0.0;
    for (a, b) in [(1.0, 2.0), (1.0, 3.0), (0.5, 4.0), (2.0, 2.001)] {
        let iv = Interval::new(a, b).unwrap();
        let recip = spec_on(Oracle::Recip, a, b);
        let p302 = prop_bound(StatementId::P302, a, b, None, None).unwrap();
        worst = worst.max((p302.rhs - v.cor1(&recip, &iv, &id).unwrap().rhs).abs());
        let p304 = prop_bound(StatementId::P304, a, b, None, None).unwrap();
        worst = worst.max((p304.rhs - v.cor2(&recip, &iv, &id).unwrap().rhs).abs());
        for n in [2, 3, 4, -2] {
            let f = spec_on(Oracle::Poly(n), a, b);
            let p301 = prop_bound(StatementId::P301, a, b, Some(n), None).unwrap();
            worst = worst.max((p301.rhs - v.cor1(&f, &iv, &id).unwrap().rhs).abs());
            let p303 = prop_bound(StatementId::P303, a, b, Some(n), None).unwrap();
            worst = worst.max((p303.rhs - v.cor2(&f, &iv, &id).unwrap().rhs).abs());
            for q in [1.5, 2.0, 3.0] {
                let p305 = prop_bound(StatementId::P305, a, b, Some(n), Some(q)).unwrap();
                worst = worst.max((p305.rhs - v.cor7(&f, &iv, &id, q).unwrap().rhs).abs());
                // coefficient identity (1/4)(1/2)^(1/p) = 2^(1/q - 3)
                let p = q / (q - 1.0);
                worst = worst.max((0.25 * 0.5f64.powf(1.0 / p) - 2f64.powf(1.0 / q - 3.0)).abs());
            }
        }
    }
    let w1 = prop_bound(StatementId::P301, 1.0, 3.0, Some(2), None).unwrap();
    let w2 = prop_bound(StatementId::P302, 1.0, 2.0, None, None).unwrap();
    let worked = (w1.lhs - 2.0 / 3.0).abs() < 1e-12
        && (w1.rhs - 2.0).abs() < 1e-12
        && (w2.lhs - 0.0568528).abs() < 5e-8
        && (w2.rhs - 0.1412037).abs() < 5e-8
        && w1.holds
        && w2.holds;
    report(
        5,
        worst <= 1e-10 && worked,
        start.elapsed(),
        Duration::from_secs(2),
        &format!("max |prop - corollary| = {worst:.3e}, worked values {}", if worked { "match" } else { "differ" }),
    );
}

#[test]
fn criterion_6_moment_closed_forms() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for s in [0.25, 0.5, 0.75, 1.0] {
        let m = HKernel::power(s).convergent_moments().unwrap();
        let expected = [
            1.0 / (s + 1.0),
            1.0 / (s + 1.0),
            statrs::function::beta::beta(s + 1.0, s + 1.0),
            1.0 / (2.0 * s + 1.0),
        ];
        for (got, want) in [m.m_t, m.m_1mt, m.m_prod, m.m_sq].into_iter().zip(expected) {
            worst = worst.max((got - want).abs());
        }
    }
    report(6, worst <= 1e-9, start.elapsed(), Duration::from_secs(1), &format!("max |diff| = {worst:.3e}"));
}

#[test]
fn criterion_7_class_lattice() {
    let start = Instant::now();
    let grid = GridCounts::uniform(21);
    let mut failures = Vec::new();

    let convex_catalog: Vec<FunctionSpec> = vec![
        spec_on(Oracle::Poly(2), -1.0, 2.0),
        spec_on(Oracle::Poly(4), -1.0, 1.0),
        spec_on(Oracle::Exp, -1.0, 2.0),
        spec_on(Oracle::Recip, 0.5, 3.0),
        spec_on(Oracle::Affine(1.0, 2.0), 0.0, 1.0),
    ];
    let kernels: Vec<HKernel> = ["id", "power:0.25", "power:0.5", "power:0.75", "one", "godunova", "powk:0.5", "powk:-0.5"]
        .iter()
        .map(|k| k.parse().unwrap())
        .collect();
    let mut checked = 0;
    for f in &convex_catalog {
        assert!(test_membership(f, ClassName::Convex, None, None, grid).unwrap().holds);
        for h in &kernels {
            if !check_dominates_identity(h, 1001).unwrap().holds {
                failures.push(format!("{} should dominate t", h.label()));
                continue;
            }
            let v = test_membership(f, ClassName::HConvex, Some(h), None, grid).unwrap();
            let chain = verify_inclusion_chain(f, h, grid).unwrap();
            checked += 1;
            if !v.holds || !chain.holds() {
                failures.push(format!("{} not in SX({})", f.label(), h.label()));
            }
        }
    }

    let powk2: HKernel = "powk:2".parse().unwrap();
    let dom = check_dominates_identity(&powk2, 1001).unwrap();
    match dom.witness {
        Some(a) if !dom.holds && a > 0.0 && a < 1.0 && a * a < a => {}
        _ => failures.push("powk:2 dominance check did not fail with a witness".into()),
    }

    let whole = |a: f64, b: f64| Interval::new(a, b).unwrap();
    let mixed: Vec<(&str, Box<dyn Fn(f64) -> f64>, Interval)> = vec![
        ("x^2", Box::new(|x| x * x), whole(-1.0, 2.0)),
        ("sqrt", Box::new(f64::sqrt), whole(0.0, 2.0)),
        ("2-x^2", Box::new(|x| 2.0 - x * x), whole(-1.0, 1.0)),
        ("1+sin", Box::new(|x: f64| 1.0 + x.sin()), whole(0.0, 6.0)),
        ("cosh", Box::new(f64::cosh), whole(-2.0, 2.0)),
        ("|x|", Box::new(f64::abs), whole(-1.0, 1.0)),
    ];
    for (name, f, dom) in &mixed {
        let convex = test_membership_fn(|u| Ok(f(u)), *dom, ClassName::Convex, None, None, grid).unwrap();
        let s1 = test_membership_fn(|u| Ok(f(u)), *dom, ClassName::SConvex, None, Some(1.0), grid).unwrap();
        if convex.holds != s1.holds {
            failures.push(format!("s=1 verdict differs from convex verdict for {name}"));
        }
    }
    for f in &failures {
        println!("  {f}");
    }
    report(
        7,
        failures.is_empty(),
        start.elapsed(),
        Duration::from_secs(10),
        &format!("{checked} (f, h) memberships, {} s=1 comparisons, {} problems", mixed.len(), failures.len()),
    );
}

#[test]
fn criterion_8_hadamard_sanity() {
    let start = Instant::now();
    let cfg = SweepConfig::default();
    let mut cases = 0;
    let mut worst: f64 = 0.0;
    for f in [Oracle::Poly(2), Oracle::Poly(4), Oracle::Exp, Oracle::Recip] {
        for &(a, b) in &cfg.intervals {
            if f.positive_only() && a <= 0.0 {
                continue;
            }
            let spec = spec_on(f, a, b);
            let m = mean_value(|u| spec.eval(u).unwrap(), a, b, DEFAULT_TOL).unwrap();
            let mid = f.value(0.5 * (a + b));
            let ends = 0.5 * (f.value(a) + f.value(b));
            worst = worst.max(mid - m).max(m - ends);
            cases += 1;
        }
    }
    report(
        8,
        worst <= 1e-9,
        start.elapsed(),
        Duration::from_secs(2),
        &format!("{cases} (f, interval) cases, worst violation {worst:.3e}"),
    );
}

#[test]
fn criterion_9_divergent_kernel() {
    let start = Instant::now();
    let g: HKernel = "godunova".parse().unwrap();
    let f = spec_on(Oracle::Poly(2), 1.0, 2.0);
    let v = Verifier::new(BoundOptions::default());
    let mut bad = Vec::new();
    for id in StatementId::ALL {
        let req = BoundRequest {
            statement: id,
            f: Some(&f),
            iv: Interval::with_point(1.0, 2.0, 1.25).unwrap(),
            h: Some(&g),
            p: Some(2.0),
            q: Some(2.0),
            n: Some(2),
        };
        match v.evaluate(&req) {
            Err(Error::DivergentKernel(_)) => {}
            other => bad.push(format!("{id}: {other:?}")),
        }
    }
    let cfg = SweepConfig {
        kernels: vec!["godunova".into()],
        statements: StatementId::ALL
            .into_iter()
            .filter(|s| s.kernel_role() == KernelRole::Any)
            .collect(),
        x_grid: 3,
        ..SweepConfig::default()
    };
    let out = run_sweep(&cfg, None).unwrap();
    let sweep_ok = !out.rows.is_empty()
        && out
            .rows
            .iter()
            .all(|r| r.status == RowStatus::Skipped && r.reason.as_deref() == Some("divergent-moments") && r.rhs.is_none());
    for b in &bad {
        println!("  {b}");
    }
    report(
        9,
        bad.is_empty() && sweep_ok,
        start.elapsed(),
        Duration::from_secs(1),
        &format!("{} statements refused, {} sweep rows skipped", StatementId::ALL.len() - bad.len(), out.rows.len()),
    );
}
