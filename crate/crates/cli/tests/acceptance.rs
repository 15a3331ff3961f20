//! Acceptance criteria 1-10. Prints one `PASS`/`FAIL` line per criterion
//! and exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use takagi::holder_cert::{verify_modulus, verify_t0_lemmas, verify_technical_inequality, HolderCertificate};
use takagi::identities::{check_sup_bound, run_all, IdentityKind, IdentityReport};
use takagi::maximizer::{
    bracket_max, closed_form_max, dq_scan, holder_bb_max, verify_dn_parity, BbOptions, DqSide, MaxReport, PROBE_S,
};
use takagi::sampling::{default_points, lemma_samples, log_uniform_pairs, DEFAULT_SEED};
use takagi::{eval_sp, PowerParam, PrecisionCtx, RationalPoint};

type Outcome = Result<String, String>;

const NINE_P: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

fn pp(p: f64) -> PowerParam {
    PowerParam::new(p).unwrap()
}

fn rp(n: i128, d: i128) -> RationalPoint {
    RationalPoint::new(n, d).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let e = t.elapsed();
    ensure(e < limit, || format!("{what} took {e:.2?}, limit {limit:?}"))
}

fn all_passed(reports: &[IdentityReport]) -> Result<(), String> {
    match reports.iter().find(|r| !r.passed) {
        Some(r) => Err(format!("{r}")),
        None => Ok(()),
    }
}

fn special_values() -> Outcome {
    let t = Instant::now();
    let ctx = PrecisionCtx::default();
    let mut worst = 0.0f64;
    for p in [0.2, 0.4, 0.7, 1.0] {
        let f = |b: f64| b.powf(p);
        let cases = [
            (rp(1, 2), 1.0 / f(2.0)),
            (rp(1, 3), f(2.0) / (f(6.0) - f(3.0))),
            (rp(1, 5), 2.0 * f(4.0) / (f(20.0) - f(5.0))),
            (rp(2, 5), (f(8.0) + f(2.0)) / (f(20.0) - f(5.0))),
        ];
        for (x, want) in cases {
            let v = eval_sp(&pp(p), x, 1e-12, &ctx).map_err(|e| e.to_string())?;
            let d = (v.value_f64() - want).abs();
            ensure(d <= 2e-12, || format!("p={p} x={x}: |{} - {want}| = {d:.3e}", v.value_f64()))?;
            worst = worst.max(d);
        }
    }
    let v = eval_sp(&pp(1.0), rp(2, 5), 1e-12, &ctx).map_err(|e| e.to_string())?;
    ensure((v.value_f64() - 2.0 / 3.0).abs() <= 2e-12, || format!("S_1(2/5) = {}", v.value_f64()))?;
    within(t, Duration::from_secs(1), "special values")?;
    Ok(format!("16 cases, max deviation {worst:.2e}, {:.2?}", t.elapsed()))
}

fn global_max() -> Outcome {
    let ctx = PrecisionCtx::native();
    let mut slowest = Duration::ZERO;
    for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let t = Instant::now();
        let p = pp(p);
        let cert = HolderCertificate::new(&p, &ctx).map_err(|e| e.to_string())?;
        let r = holder_bb_max(&p, &cert, 1e-6, &ctx, &BbOptions::default()).map_err(|e| e.to_string())?;
        let want = closed_form_max(&p, &ctx).map_err(|e| e.to_string())?.max_value.value_f64();
        ensure(r.distance_to(1.0 / 3.0) <= 1e-6, || format!("p={p}: argmax {:?}", r.argmax_points))?;
        let d = (r.max_value.value_f64() - want).abs();
        ensure(d <= 1e-8, || format!("p={p}: value off by {d:.3e}"))?;
        within(t, Duration::from_secs(30), &format!("p={p}"))?;
        slowest = slowest.max(t.elapsed());
    }
    Ok(format!("5 exponents, slowest {slowest:.2?}"))
}

fn bracketing() -> Outcome {
    let t = Instant::now();
    let ctx = PrecisionCtx::native();
    let third = RationalPoint::THIRD;
    for p in NINE_P {
        let o = bracket_max(&pp(p), 30, &ctx).map_err(|e| e.to_string())?;
        ensure(o.trace.len() == 31, || format!("p={p}: {} rows", o.trace.len()))?;
        for row in &o.trace {
            let n = row.n as u32;
            let scale = 1i128 << (n + 2);
            let q = (scale + if n % 2 == 0 { -1 } else { 1 }) / 3;
            ensure(row.a == rp(q - 1, scale) && row.b == rp(q + 1, scale), || {
                format!("p={p} n={n}: [{}, {}] is not [{}/{scale}, {}/{scale}]", row.a, row.b, q - 1, q + 1)
            })?;
            ensure(row.a <= third && third <= row.b, || format!("p={p} n={n}: 1/3 outside"))?;
        }
        let last = o.trace.last().unwrap();
        let width = last.b.checked_sub(&last.a).map_err(|e| e.to_string())?;
        ensure(width == rp(1, 1 << 31), || format!("p={p}: final width {width}"))?;
    }
    let ns: Vec<u32> = (0..=20).collect();
    let parity = verify_dn_parity(&NINE_P, &ns, &PROBE_S, &ctx).map_err(|e| e.to_string())?;
    all_passed(std::slice::from_ref(&parity))?;
    within(t, Duration::from_secs(60), "bracketing")?;
    Ok(format!("9 exponents to depth 30, {} parity probes, {:.2?}", parity.samples, t.elapsed()))
}

fn holder_modulus() -> Outcome {
    let ctx = PrecisionCtx::default();
    let pairs = log_uniform_pairs(100_000, DEFAULT_SEED, 40.0);
    let mut worst = 0.0f64;
    for p in [0.2, 0.5, 0.8, 1.0] {
        let r = verify_modulus(&pp(p), &pairs, &ctx).map_err(|e| e.to_string())?;
        all_passed(std::slice::from_ref(&r.report))?;
        worst = worst.max(r.report.max_ratio.unwrap_or(0.0));
    }
    Ok(format!("4 x 10^5 pairs, max ratio {worst:.4}"))
}

fn lemma_suite() -> Outcome {
    let samples = lemma_samples(100_000, DEFAULT_SEED);
    let mut n = 0;
    for p in [0.2, 0.5, 0.8, 1.0] {
        let rs = verify_t0_lemmas(&pp(p), &samples).map_err(|e| e.to_string())?;
        ensure(rs.len() == 4, || format!("p={p}: {} lemma reports", rs.len()))?;
        all_passed(&rs)?;
        n += rs.len();
    }
    let tech = verify_technical_inequality(1e-5).map_err(|e| e.to_string())?;
    ensure(tech.iter().all(|r| r.samples >= 100_000), || "technical grid too coarse".into())?;
    all_passed(&tech)?;
    // |T0(x)^p - T0(y)^p| = |x - y|^p at (0, 1/2), p = 1
    let (x, y) = (RationalPoint::ZERO, RationalPoint::HALF);
    let lhs = x.t0().checked_sub(&y.t0()).map_err(|e| e.to_string())?.abs();
    let rhs = y.checked_sub(&x).map_err(|e| e.to_string())?;
    ensure(lhs == rhs, || format!("equality case: {lhs} vs {rhs}"))?;
    Ok(format!("{} lemma reports over 10^5 samples, technical grid 10^5, equality at (0, 1/2)", n + tech.len()))
}

fn functional_equations() -> Outcome {
    let ctx = PrecisionCtx::default();
    let xs = default_points(10_000, DEFAULT_SEED);
    let mut n = 0;
    for p in [0.2, 0.4, 0.7, 1.0] {
        let rs = run_all(&pp(p), &xs, 1e-12, &ctx).map_err(|e| e.to_string())?;
        let gen = rs.iter().filter(|r| matches!(r.identity, IdentityKind::GenFuncEq { .. })).count();
        ensure(gen == 8, || format!("p={p}: {gen} general equations"))?;
        for k in [IdentityKind::FuncEqM1, IdentityKind::FuncEqM2, IdentityKind::Symmetry, IdentityKind::Periodicity] {
            ensure(rs.iter().any(|r| r.identity == k), || format!("p={p}: no {k} report"))?;
        }
        all_passed(&rs)?;
        n += rs.len();
    }
    Ok(format!("{n} reports on 10^4 points per exponent"))
}

fn sup_bound() -> Outcome {
    let ctx = PrecisionCtx::default();
    let xs = default_points(10_000, DEFAULT_SEED);
    let mut worst = 0.0f64;
    for p in [0.2, 0.4, 0.7, 1.0] {
        let r = check_sup_bound(&pp(p), &xs, &ctx).map_err(|e| e.to_string())?;
        all_passed(std::slice::from_ref(&r))?;
        worst = worst.max(r.max_ratio.unwrap_or(0.0));
    }
    Ok(format!("4 x 10^4 points, max S/bound {worst:.4}"))
}

fn non_differentiability() -> Outcome {
    let ctx = PrecisionCtx::new(256).map_err(|e| e.to_string())?;
    // 0.99 x the largest tail |quotient| of the 512-bit reference run
    let deltas = [(0.3, 1.79e7), (0.5, 1.75e5), (0.7, 1.42e3)];
    let mut lines = Vec::new();
    for (p, delta) in deltas {
        for x0 in [RationalPoint::THIRD, RationalPoint::TWO_THIRDS] {
            let l = dq_scan(&pp(p), x0, 18, DqSide::Left, &ctx).map_err(|e| e.to_string())?;
            let r = dq_scan(&pp(p), x0, 18, DqSide::Right, &ctx).map_err(|e| e.to_string())?;
            let m = l.max_abs_in(10, 18).unwrap().1.max(r.max_abs_in(10, 18).unwrap().1);
            ensure(m >= delta, || format!("p={p} x0={x0}: tail max {m:.4e} < {delta:.3e}"))?;
            for (a, b) in l.quotients.iter().zip(&r.quotients) {
                ensure(a.value_f64() >= -a.f64_radius(), || format!("p={p} x0={x0}: left quotient {a} < 0"))?;
                ensure(b.value_f64() <= b.f64_radius(), || format!("p={p} x0={x0}: right quotient {b} > 0"))?;
            }
            lines.push(format!("{m:.3e}"));
        }
    }
    Ok(format!("tail maxima {}", lines.join(" ")))
}

fn plot_grid(p: &str) -> Result<Vec<(f64, f64)>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_takagi"))
        .args(["plot", "--p", p])
        .env_remove("TAKAGI_PRECISION_BITS")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("plot --p {p}: {}", String::from_utf8_lossy(&out.stderr)))?;
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let mut f = l.split(',');
            let x = f.next().and_then(|s| s.parse().ok());
            let v = f.next().and_then(|s| s.parse().ok());
            x.zip(v).ok_or_else(|| format!("bad row `{l}`"))
        })
        .collect()
}

fn argmax(pts: &[(f64, f64)]) -> (f64, f64) {
    pts.iter().copied().fold((f64::NAN, f64::NEG_INFINITY), |m, q| if q.1 > m.1 { q } else { m })
}

fn figures() -> Outcome {
    let mut found = Vec::new();
    for p in ["0.2", "0.4", "0.7"] {
        let pts = plot_grid(p)?;
        let step = 1.0 / (pts.len() - 1) as f64;
        let (lo, hi): (Vec<_>, Vec<_>) = pts.iter().partition(|q| q.0 <= 0.5);
        let top = argmax(&pts).1;
        for (half, target) in [(lo, 1.0 / 3.0), (hi, 2.0 / 3.0)] {
            let (x, v) = argmax(&half);
            ensure((x - target).abs() <= step, || format!("p={p}: grid argmax {x} not within {step:.2e} of {target}"))?;
            ensure(v == top, || format!("p={p}: peak near {target} is {v}, global grid max {top}"))?;
            found.push(format!("{x:.5}"));
        }
    }
    let (_, v) = argmax(&plot_grid("1")?);
    ensure((v - 2.0 / 3.0).abs() <= 1e-3, || format!("p=1: grid max {v}"))?;
    Ok(format!("grid argmax {}, p=1 max {v:.6}", found.join(" ")))
}

fn method_agreement() -> Outcome {
    let ctx = PrecisionCtx::native();
    let mut nodes = 0;
    for p in NINE_P {
        let p = pp(p);
        let cert = HolderCertificate::new(&p, &ctx).map_err(|e| e.to_string())?;
        let rs: Vec<MaxReport> = vec![
            closed_form_max(&p, &ctx).map_err(|e| e.to_string())?,
            bracket_max(&p, 30, &ctx).map_err(|e| e.to_string())?.report,
            holder_bb_max(&p, &cert, 1e-6, &ctx, &BbOptions::default()).map_err(|e| e.to_string())?,
        ];
        for a in &rs {
            for b in &rs {
                ensure(a.agrees_with(b), || format!("p={p}: {:?} vs {:?}", a.method, b.method))?;
            }
        }
        nodes += rs[2].nodes.unwrap_or(0);
    }
    Ok(format!("9 exponents x 3 methods, {nodes} branch-and-bound nodes"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("special values", special_values),
        ("global maximum", global_max),
        ("bracketing", bracketing),
        ("Hölder modulus", holder_modulus),
        ("lemma suite", lemma_suite),
        ("functional equations", functional_equations),
        ("sup bound", sup_bound),
        ("non-differentiability", non_differentiability),
        ("figures", figures),
        ("method agreement", method_agreement),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match res {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{:.2?}]", i + 1, t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{:.2?}]", i + 1, t.elapsed());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
