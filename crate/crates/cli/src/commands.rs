use std::fmt::Write as _;
use std::io::Write as _;

use serde::Serialize;
use takagi::exact_rational::{closed_form_sp, eval_closed_form, orbit, ClosedForm, OrbitDecomposition};
use takagi::holder_cert::{
    verify_modulus, verify_t0_lemmas, verify_technical_inequality, verify_truncation_inequality,
};
use takagi::identities::{run_all, IdentityReport};
use takagi::maximizer::{
    bracket_max, closed_form_max, holder_bb_max, verify_dn_parity, verify_lemma_sab, BbOptions, BracketRow, MaxReport,
    PROBE_S,
};
use takagi::sampling::{default_points, lemma_samples, log_uniform_pairs, sab_samples};
use takagi::{eval_sp, CertifiedValue, Error, PowerParam, PrecisionCtx, RationalPoint, Regime, Result};

use crate::{Common, Format, Method};

pub fn ctx(c: &Common) -> Result<PrecisionCtx> {
    PrecisionCtx::new(c.precision_bits)
}

/// Writes the command output to `--output` or stdout.
pub fn emit(c: &Common, out: &str) -> Result<()> {
    match &c.output {
        Some(path) => std::fs::write(path, out).map_err(|e| Error::Resource(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(out.as_bytes()).map_err(|e| Error::Resource(e.to_string())),
    }
}

pub fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct EvalOut<'a> {
    p: f64,
    x: RationalPoint,
    value: &'a CertifiedValue,
}

pub fn eval(c: &Common, p: &PowerParam, x: &str) -> Result<bool> {
    let x: RationalPoint = x.parse()?;
    let v = eval_sp(p, x, c.tol, &ctx(c)?)?;
    let out = match c.format {
        Format::Json => to_json(&EvalOut { p: p.value(), x, value: &v }),
        Format::Csv => format!("x,value,error_radius\n{x},{},{:.3e}\n", v.to_decimal(), v.error_radius()),
        Format::Text => format!("S_{p}({x}) = {v}\n"),
    };
    emit(c, &out)?;
    Ok(true)
}

#[derive(Serialize)]
struct ExactOut<'a> {
    x: RationalPoint,
    orbit: &'a OrbitDecomposition,
    closed_form: &'a ClosedForm,
    display: String,
    integer_form: Option<String>,
    p: Option<f64>,
    value: Option<CertifiedValue>,
}

pub fn exact(c: &Common, x: &str, p: Option<&PowerParam>) -> Result<bool> {
    if x.contains(['.', 'e', 'E']) {
        return Err(Error::InvalidInput(format!("exact takes a rational `a/b`, got `{x}`")));
    }
    let x: RationalPoint = x.parse()?;
    let orb = orbit(&x)?;
    let cf = closed_form_sp(&x)?;
    let value = p.map(|p| eval_closed_form(&cf, p, &ctx(c)?)).transpose()?;
    let list = |v: &[RationalPoint]| v.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(", ");
    let out = match c.format {
        Format::Json => to_json(&ExactOut {
            x,
            orbit: &orb,
            closed_form: &cf,
            display: cf.to_string(),
            integer_form: cf.periodic_integer_form(),
            p: p.map(|p| p.value()),
            value,
        }),
        _ => {
            let mut s = String::new();
            writeln!(s, "x = {x}").unwrap();
            writeln!(s, "orbit: preperiod [{}] cycle [{}]", list(&orb.preperiod), list(&orb.cycle)).unwrap();
            writeln!(s, "S_p(x) = {cf}").unwrap();
            if cf.is_finite_sum() {
                writeln!(s, "finite dyadic sum").unwrap();
            }
            if let (Some(p), Some(v)) = (p, &value) {
                writeln!(s, "S_{p}({x}) = {v}").unwrap();
            }
            s
        }
    };
    emit(c, &out)?;
    Ok(true)
}

fn report_text(r: &MaxReport) -> String {
    let mut s = String::new();
    let pts = r.argmax.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(", ");
    writeln!(s, "method: {:?}", r.method).unwrap();
    writeln!(s, "argmax: {pts} (within {:.3e})", r.argmax_tolerance).unwrap();
    writeln!(s, "max: {}", r.max_value).unwrap();
    if let Some(u) = r.upper_bound {
        writeln!(s, "upper bound: {u:.17}").unwrap();
    }
    if let Some(n) = r.nodes {
        writeln!(s, "nodes: {n}").unwrap();
    }
    s
}

pub fn max(
    c: &Common,
    p: &PowerParam,
    method: Method,
    x_tol: f64,
    n: u32,
    budget: u64,
    holder_only: bool,
) -> Result<bool> {
    if p.regime() != Regime::SubUnit {
        return Err(Error::Domain(format!("the maximum is located for 0 < p < 1 only, got p = {p}")));
    }
    let ctx = ctx(c)?;
    let mut reports = Vec::new();
    if matches!(method, Method::Closed | Method::All) {
        reports.push(closed_form_max(p, &ctx)?);
    }
    if matches!(method, Method::Bracket | Method::All) {
        reports.push(bracket_max(p, n, &ctx)?.report);
    }
    if matches!(method, Method::Bb | Method::All) {
        let cert = takagi::holder_cert::HolderCertificate::new(p, &ctx)?;
        let opts = BbOptions { node_budget: budget, holder_only, ..BbOptions::default() };
        reports.push(holder_bb_max(p, &cert, x_tol, &ctx, &opts)?);
    }
    let agree = reports.iter().all(|a| reports.iter().all(|b| a.agrees_with(b)));
    let out = match c.format {
        Format::Json => to_json(&reports),
        _ => {
            let body: Vec<String> = reports.iter().map(report_text).collect();
            let mut s = body.join("\n");
            if reports.len() > 1 {
                writeln!(s, "\nagreement: {}", if agree { "yes" } else { "NO" }).unwrap();
            }
            s
        }
    };
    emit(c, &out)?;
    Ok(agree)
}

pub fn bracket(c: &Common, p: &PowerParam, n: u32) -> Result<bool> {
    let o = bracket_max(p, n, &ctx(c)?)?;
    let out = match c.format {
        Format::Json => to_json(&o),
        _ => {
            let mut s = format!("{}\n", BracketRow::CSV_HEADER);
            for row in &o.trace {
                writeln!(s, "{row}").unwrap();
            }
            s
        }
    };
    emit(c, &out)?;
    Ok(true)
}

pub fn holder(c: &Common, p: &PowerParam, pairs: usize, max_log2: f64) -> Result<bool> {
    let ps = log_uniform_pairs(pairs, c.seed, max_log2);
    let r = verify_modulus(p, &ps, &ctx(c)?)?;
    let out = match c.format {
        Format::Json => to_json(&r),
        _ => {
            let mut s = format!("{}\nC(p) = {}\n", r.report, r.constant);
            if let Some(m) = r.report.max_ratio {
                writeln!(s, "max ratio = {m:.6}").unwrap();
            }
            writeln!(s, "decade,count,max_ratio").unwrap();
            for b in &r.histogram {
                writeln!(s, "{},{},{:.6}", b.decade, b.count, b.max_ratio).unwrap();
            }
            s
        }
    };
    emit(c, &out)?;
    Ok(r.report.passed)
}

pub fn verify(c: &Common, p: &PowerParam) -> Result<bool> {
    let ctx = ctx(c)?;
    let n = c.samples;
    let xs = default_points(n, c.seed);
    let mut reports: Vec<IdentityReport> = run_all(p, &xs, c.tol, &ctx)?;
    reports.extend(verify_t0_lemmas(p, &lemma_samples(n, c.seed))?);
    reports.extend(verify_technical_inequality(1e-3)?);
    let pairs = log_uniform_pairs(n.min(2000), c.seed, 30.0);
    reports.push(verify_truncation_inequality(p, &pairs, &[1, 2, 4, 8, 16, 32], &ctx)?);
    if p.regime() == Regime::SubUnit {
        reports.push(verify_lemma_sab(&sab_samples(n, c.seed), &ctx)?);
        let ns: Vec<u32> = (0..=20).collect();
        reports.push(verify_dn_parity(&[p.value()], &ns, &PROBE_S, &PrecisionCtx::native())?);
    }
    let ok = reports.iter().all(|r| r.passed);
    let out = match c.format {
        Format::Json => to_json(&reports),
        _ => {
            let mut s: String = reports.iter().map(|r| format!("{r}\n")).collect();
            let failed = reports.iter().filter(|r| !r.passed).count();
            writeln!(s, "{} checks, {failed} failed", reports.len()).unwrap();
            s
        }
    };
    emit(c, &out)?;
    Ok(ok)
}
