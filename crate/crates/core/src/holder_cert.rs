//! The generalised Hölder certificate
//! `|S_p(x) - S_p(y)| <= C(p) |x-y|^p log2(1/|x-y|)` for `0 < p <= 1`,
//! `0 < |x-y| <= 1/2`, and checks of the elementary inequalities behind it.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::certified::CertifiedValue;
use crate::error::{Error, Result};
use crate::identities::{fold, require_samples, IdentityKind, IdentityReport, Outcome};
use crate::par::{self, Exec};
use crate::precision::{round_up, with_backend, Backend, PrecisionCtx};
use crate::rational::{gap_f64, Point, RationalPoint};
use crate::sampling::LemmaSample;
use crate::takagi_core::{eval_sp, tail_bound, PowerParam};

/// Relative slack for plain `f64` evaluations of both sides of an
/// inequality (a few ulps per libm call).
const F64_SLACK: f64 = 16.0 * f64::EPSILON;

/// `C(p) = (1/p) log2(p ln2 / (2^p - 1)) + 2^p / (p ln2) + 1`.
pub fn constant_c(p: &PowerParam, ctx: &PrecisionCtx) -> Result<CertifiedValue> {
    p.require_at_most_one("the Hölder constant")?;
    let pv = p.value();
    with_backend!(*ctx, b => {
        let u = b.ulp();
        let pn = b.from_f64(pv);
        let e = b.exp2(&pn);
        let one = b.from_f64(1.0);
        let em1 = b.sub(&e, &one);
        let ef = b.to_f64(&e);
        let em1f = b.to_f64(&em1);
        let r_em1 = (u * ef + u * em1f) / em1f;
        let ln2 = b.ln(&b.from_f64(2.0));
        let a = b.mul(&pn, &ln2);
        let ratio = b.div(&a, &em1);
        let r_ratio = 3.0 * u + r_em1;
        let l = b.log2(&ratio);
        let lf = b.to_f64(&l).abs();
        let t1 = b.div(&l, &pn);
        let t1_err = (u * lf + r_ratio / LN_2) / pv + u * b.to_f64(&t1).abs();
        let t2 = b.div(&e, &a);
        let t2_err = 4.0 * u * b.to_f64(&t2).abs();
        let s = b.add(&t1, &t2);
        let c = b.add(&s, &one);
        let err = t1_err + t2_err + 2.0 * u * b.to_f64(&c).abs();
        CertifiedValue::new(b.to_real(c), round_up(err * 1.1))
    })
}

/// `n0 = floor((1/p) log2(p ln2 / ((2^p - 1) h^p)))`.
pub fn optimal_cut(p: &PowerParam, h: f64) -> Result<u64> {
    p.require_at_most_one("optimal_cut")?;
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::domain(format!("h must lie in (0, 1/2], got {h}")));
    }
    let pv = p.value();
    let t0 = (pv * LN_2 / (pv * LN_2).exp_m1()).log2() / pv + (1.0 / h).log2();
    Ok(t0.floor().max(0.0) as u64)
}

/// `h^p log2(1/h)` for `0 < h <= 1/2`.
pub fn omega(p: f64, h: f64) -> f64 {
    h.powf(p) * (1.0 / h).log2()
}

/// `sup_{0 < d <= h} d^p log2(1/d)`; the map is increasing up to
/// `d = e^{-1/p}` and decreasing after.
pub fn omega_sup(p: f64, h: f64) -> f64 {
    omega(p, h.min((-1.0 / p).exp()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderCertificate {
    pub p: PowerParam,
    pub constant: CertifiedValue,
}

impl HolderCertificate {
    pub fn new(p: &PowerParam, ctx: &PrecisionCtx) -> Result<Self> {
        Ok(Self { p: *p, constant: constant_c(p, ctx)? })
    }

    /// Upper bound on `C`.
    pub fn c_upper(&self) -> f64 {
        self.constant.upper()
    }

    pub fn c_lower(&self) -> f64 {
        self.constant.lower()
    }

    /// `C h^p log2(1/h)` rounded up.
    pub fn modulus_upper(&self, h: f64) -> f64 {
        self.c_upper() * omega(self.p.value(), h) * (1.0 + F64_SLACK)
    }

    /// Upper bound on `|S_p(x) - S_p(y)|` over all `|x - y| <= h`.
    pub fn modulus_sup_upper(&self, h: f64) -> f64 {
        self.c_upper() * omega_sup(self.p.value(), h) * (1.0 + F64_SLACK)
    }

    pub fn modulus_lower(&self, h: f64) -> f64 {
        self.c_lower() * omega(self.p.value(), h) * (1.0 - F64_SLACK)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecadeBin {
    /// `floor(log10 |x - y|)`
    pub decade: i32,
    pub count: usize,
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub report: IdentityReport,
    pub constant: f64,
    pub histogram: Vec<DecadeBin>,
}

fn pair_outcome(
    cert: &HolderCertificate,
    x: &RationalPoint,
    y: &RationalPoint,
    ctx: &PrecisionCtx,
) -> Result<(Outcome, f64)> {
    let h = gap_f64(x, y);
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::invalid(format!("pair ({x}, {y}) needs 0 < |x-y| <= 1/2")));
    }
    let rhs = cert.modulus_lower(h * (1.0 + f64::EPSILON));
    let mut tol = (rhs * 1e-3).max(4e-12);
    let diff = loop {
        let r = eval_sp(&cert.p, Point::Rational(*x), tol, ctx)
            .and_then(|a| Ok(a.sub(&eval_sp(&cert.p, Point::Rational(*y), tol, ctx)?, *ctx)));
        match r {
            Err(Error::Precision(_)) if tol < rhs => tol *= 8.0,
            other => break other?,
        }
    };
    let lhs = diff.abs_upper();
    let ratio = diff.value_f64().abs() / rhs;
    Ok((Outcome::new(lhs, rhs, format!("x={x} y={y}")).with_ratio(ratio), h))
}

/// Checks the modulus on every pair and bins the observed ratios
/// `|S(x)-S(y)| / (C h^p log2(1/h))` by decade of `h`.
pub fn verify_modulus(
    p: &PowerParam,
    pairs: &[(RationalPoint, RationalPoint)],
    ctx: &PrecisionCtx,
) -> Result<ModulusReport> {
    verify_modulus_with(Exec::default(), p, pairs, ctx)
}

pub fn verify_modulus_with(
    exec: Exec,
    p: &PowerParam,
    pairs: &[(RationalPoint, RationalPoint)],
    ctx: &PrecisionCtx,
) -> Result<ModulusReport> {
    require_samples(pairs)?;
    let cert = HolderCertificate::new(p, ctx)?;
    let res = par::try_map(exec, pairs, |(x, y)| pair_outcome(&cert, x, y, ctx))?;
    let mut bins: BTreeMap<i32, (usize, f64)> = BTreeMap::new();
    for (o, h) in &res {
        let e = bins.entry(h.log10().floor() as i32).or_insert((0, 0.0));
        e.0 += 1;
        e.1 = e.1.max(o.ratio.unwrap_or(0.0));
    }
    let outs: Vec<Outcome> = res.into_iter().map(|(o, _)| o).collect();
    Ok(ModulusReport {
        report: fold(IdentityKind::HolderModulus, Some(p.value()), &outs),
        constant: cert.constant.value_f64(),
        histogram: bins
            .into_iter()
            .map(|(decade, (count, max_ratio))| DecadeBin { decade, count, max_ratio })
            .collect(),
    })
}

fn ineq(lhs: f64, rhs: f64, label: String) -> Outcome {
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Outcome::new(lhs, rhs + F64_SLACK * (lhs.abs() + rhs.abs()) + f64::MIN_POSITIVE, label).with_ratio(ratio)
}

/// The four pointwise inequalities:
/// `|T0^p(x) - T0^p(y)| <= 2^{-p}`, `|a^p - b^p| <= |a-b|^p`,
/// `|T0(x) - T0(y)| <= |x-y|` and `|T0^p(x) - T0^p(y)| <= |x-y|^p`.
/// The second and fourth need `p <= 1` and are skipped for `p > 1`.
pub fn verify_t0_lemmas(p: &PowerParam, samples: &[LemmaSample]) -> Result<Vec<IdentityReport>> {
    require_samples(samples)?;
    let pv = p.value();
    let t0 = |x: f64| (x - x.round()).abs();
    let mut bound = Vec::new();
    let mut power = Vec::new();
    let mut lip = Vec::new();
    let mut hold = Vec::new();
    for s in samples {
        let (tx, ty) = (t0(s.x), t0(s.y));
        let dt = (tx.powf(pv) - ty.powf(pv)).abs();
        let label = format!("x={} y={}", s.x, s.y);
        bound.push(ineq(dt, (-pv).exp2(), label.clone()));
        lip.push(ineq((tx - ty).abs(), (s.x - s.y).abs(), label.clone()));
        hold.push(ineq(dt, (s.x - s.y).abs().powf(pv), label));
        let dab = (s.a.powf(pv) - s.b.powf(pv)).abs();
        power.push(ineq(dab, (s.a - s.b).abs().powf(pv), format!("a={} b={}", s.a, s.b)));
    }
    let mut out = vec![fold(IdentityKind::T0Bound, Some(pv), &bound), fold(IdentityKind::T0Lipschitz, Some(pv), &lip)];
    if pv <= 1.0 {
        out.push(fold(IdentityKind::PowerDifference, Some(pv), &power));
        out.push(fold(IdentityKind::T0Holder, Some(pv), &hold));
    }
    Ok(out)
}

/// `p ln2 2^p >= 2^p - 1` on a grid of `[0, 1]`, and monotonicity of
/// `g(p) = 2^p (1 - p ln2)` (non-increasing, `g(0) = 1`).
pub fn verify_technical_inequality(step: f64) -> Result<Vec<IdentityReport>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::invalid(format!("grid step must lie in (0, 1], got {step}")));
    }
    let n = (1.0 / step).round() as usize;
    let ps: Vec<f64> = (0..=n).map(|i| (i as f64 / n as f64).min(1.0)).collect();
    let g = |p: f64| p.exp2() * (1.0 - p * LN_2);
    let tech: Vec<Outcome> = ps.iter().map(|&p| ineq(p.exp2() - 1.0, p * LN_2 * p.exp2(), format!("p={p}"))).collect();
    let mut mono: Vec<Outcome> = ps.windows(2).map(|w| ineq(g(w[1]), g(w[0]), format!("p={}", w[1]))).collect();
    mono.push(ineq((g(0.0) - 1.0).abs(), 0.0, "p=0".into()));
    Ok(vec![fold(IdentityKind::TechnicalInequality, None, &tech), fold(IdentityKind::TechnicalMonotone, None, &mono)])
}

/// `|S(x) - S(y)| <= n |x-y|^p + 2^{-pn}/(2^p - 1)` for each pair and each `n`.
pub fn verify_truncation_inequality(
    p: &PowerParam,
    pairs: &[(RationalPoint, RationalPoint)],
    ns: &[u32],
    ctx: &PrecisionCtx,
) -> Result<IdentityReport> {
    require_samples(pairs)?;
    require_samples(ns)?;
    let pv = p.value();
    let outs = par::try_map(Exec::default(), pairs, |(x, y)| {
        let h = gap_f64(x, y);
        let a = eval_sp(p, Point::Rational(*x), 1e-11, ctx)?;
        let d = a.sub(&eval_sp(p, Point::Rational(*y), 1e-11, ctx)?, *ctx);
        let lhs = d.abs_upper();
        Ok(ns
            .iter()
            .map(|&n| {
                // tail_bound is rounded up; take it back down for a lower bound
                let rhs = (n as f64 * h.powf(pv) + tail_bound(p, n as u64) / (1.0 + 1e-11)) * (1.0 - F64_SLACK);
                Outcome::new(lhs, rhs, format!("x={x} y={y} n={n}")).with_ratio(d.value_f64().abs() / rhs)
            })
            .collect::<Vec<_>>())
    })?;
    let outs: Vec<Outcome> = outs.into_iter().flatten().collect();
    Ok(fold(IdentityKind::TruncationInequality, Some(pv), &outs))
}
