//! Numeric checks of the functional equations, symmetry, periodicity and
//! the sup bound of `S_p`.
//!
//! Every check evaluates each side with certified radii and accepts a
//! sample when `|residual| <= 4 * (sum of all radii involved)`. A report's
//! `max_violation` is the largest `lhs - allowance` over the samples, so a
//! check passes iff `max_violation <= tolerance = 0`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::certified::CertifiedValue;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::precision::{round_up, PrecisionCtx};
use crate::rational::{Point, RationalPoint};
use crate::takagi_core::{eval_sp, partial_sum, sup_bound, PowerParam};

/// Safety factor applied to summed radii in equality checks.
pub const RADIUS_FACTOR: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name")]
pub enum IdentityKind {
    GenFuncEq { m: u32 },
    FuncEqM1,
    FuncEqM2,
    Symmetry,
    Periodicity,
    SupBound,
    HolderModulus,
    TruncationInequality,
    T0Bound,
    PowerDifference,
    T0Lipschitz,
    T0Holder,
    TechnicalInequality,
    TechnicalMonotone,
    LemmaSab,
    DnParity,
    ScalingIdentity,
}

impl fmt::Display for IdentityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdentityKind::GenFuncEq { m } => write!(f, "GenFuncEq(m={m})"),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: IdentityKind,
    pub p: Option<f64>,
    pub samples: usize,
    /// Largest `lhs - allowance`; positive means some sample failed.
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Largest raw residual (equalities) or left-hand side (inequalities).
    pub max_residual: f64,
    /// Largest `lhs / rhs`, where that ratio is meaningful.
    pub max_ratio: Option<f64>,
    /// Description of the sample with the largest violation.
    pub worst: Option<String>,
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.p.map(|p| format!(" p={p}")).unwrap_or_default();
        write!(
            f,
            "[{}] {}{} samples={} max_residual={:.3e} max_violation={:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.identity,
            p,
            self.samples,
            self.max_residual,
            self.max_violation
        )?;
        if let Some(r) = self.max_ratio {
            write!(f, " max_ratio={r:.6}")?;
        }
        Ok(())
    }
}

/// One sample's outcome: `lhs` must not exceed `allowance`.
#[derive(Clone, Debug)]
pub(crate) struct Outcome {
    pub lhs: f64,
    pub allowance: f64,
    pub ratio: Option<f64>,
    pub label: String,
}

impl Outcome {
    pub(crate) fn new(lhs: f64, allowance: f64, label: impl Into<String>) -> Self {
        Self { lhs, allowance, ratio: None, label: label.into() }
    }

    pub(crate) fn with_ratio(mut self, r: f64) -> Self {
        self.ratio = Some(r);
        self
    }
}

pub(crate) fn fold(identity: IdentityKind, p: Option<f64>, outs: &[Outcome]) -> IdentityReport {
    let mut max_violation = f64::NEG_INFINITY;
    let mut max_residual: f64 = 0.0;
    let mut max_ratio: Option<f64> = None;
    let mut worst = None;
    for o in outs {
        let v = o.lhs - o.allowance;
        // NaN counts as a failure
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v > max_violation {
            max_violation = v;
            worst = Some(o.label.clone());
        }
        max_residual = max_residual.max(o.lhs);
        if let Some(r) = o.ratio {
            max_ratio = Some(max_ratio.map_or(r, |m: f64| m.max(r)));
        }
    }
    if outs.is_empty() {
        max_violation = 0.0;
    }
    IdentityReport {
        identity,
        p,
        samples: outs.len(),
        max_violation,
        tolerance: 0.0,
        passed: max_violation <= 0.0,
        max_residual,
        max_ratio,
        worst,
    }
}

pub(crate) fn require_samples<T>(xs: &[T]) -> Result<()> {
    if xs.is_empty() {
        Err(Error::invalid("empty sample set"))
    } else {
        Ok(())
    }
}

/// `|value|` upper bound of a residual and its allowance from the radii.
fn equality(res: &CertifiedValue, label: String) -> Outcome {
    let lhs = res.value_f64().abs();
    Outcome::new(lhs, round_up(RADIUS_FACTOR * res.f64_radius()), label)
}

fn ev(p: &PowerParam, x: RationalPoint, tol: f64, ctx: &PrecisionCtx) -> Result<CertifiedValue> {
    eval_sp(p, Point::Rational(x), tol, ctx)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("tolerance must be positive, got {tol}")))
    }
}

/// Finite heads are a few terms, so `f64` is plenty unless the tolerance
/// is tighter than it can certify.
fn head_ctx(tol: f64, ctx: &PrecisionCtx) -> PrecisionCtx {
    if tol >= 1e-13 {
        PrecisionCtx::native()
    } else {
        *ctx
    }
}

/// `S_p(x) - sum_{k<m} (T_0(2^k x)/2^k)^p - 2^{-mp} S_p(2^m x)`.
pub fn general_residual(
    p: &PowerParam,
    m: u32,
    x: &RationalPoint,
    tol: f64,
    ctx: &PrecisionCtx,
) -> Result<CertifiedValue> {
    let sx = ev(p, *x, tol / 10.0, ctx)?;
    let head = partial_sum(p, *x, m as u64, &head_ctx(tol, ctx))?;
    let y = x.frac().mul_pow2(m as i32)?;
    let sy = ev(p, y, tol / 10.0, ctx)?;
    let scaled = mul_pow(&sy, -(m as f64), p.value(), ctx);
    Ok(sx.sub(&head, *ctx).sub(&scaled, *ctx))
}

/// `c * 2^{kp}` for a small integer `k`; the exponent is formed at the
/// working precision, so its rounding is part of the accounting.
pub(crate) fn mul_pow(c: &CertifiedValue, k: f64, p: f64, ctx: &PrecisionCtx) -> CertifiedValue {
    use crate::precision::{with_backend, Backend};
    debug_assert!(k.fract() == 0.0 && k.abs() < 1e15);
    with_backend!(ctx.for_operands(&[c.value()]), b => {
        let u = b.ulp();
        let (v, ev) = b.from_real(c.value());
        let e = b.mul(&b.from_f64(k), &b.from_f64(p));
        let s = b.exp2(&e);
        let r = b.mul(&v, &s);
        let sf = b.to_f64(&s);
        let rel = ev + u * (2.0 + 0.7 * (k * p).abs());
        let radius = c.error_radius() * sf * (1.0 + rel) + rel * b.to_f64(&r).abs();
        CertifiedValue::new(b.to_real(r), round_up(radius * 1.01)).expect("finite product")
    })
}

pub fn check_general_functional_eq(
    p: &PowerParam,
    m: u32,
    xs: &[RationalPoint],
    tol: f64,
    ctx: &PrecisionCtx,
) -> Result<IdentityReport> {
    if m == 0 {
        return Err(Error::invalid("m must be >= 1"));
    }
    check_tol(tol)?;
    require_samples(xs)?;
    let outs =
        par::try_map(Exec::default(), xs, |x| Ok(equality(&general_residual(p, m, x, tol, ctx)?, format!("x={x}"))))?;
    Ok(fold(IdentityKind::GenFuncEq { m }, Some(p.value()), &outs))
}

/// Residuals of `S(2x) = 2^p (S(x) - T_0^p(x))` and
/// `S(4x) = 4^p (S(x) - T_0^p(x)) - 2^p T_0^p(2x)`.
pub fn m1_m2_residuals(
    p: &PowerParam,
    x: &RationalPoint,
    tol: f64,
    ctx: &PrecisionCtx,
) -> Result<(CertifiedValue, CertifiedValue)> {
    let pv = p.value();
    let sx = ev(p, *x, tol / 10.0, ctx)?;
    let s2 = ev(p, x.frac().mul_pow2(1)?, tol / 10.0, ctx)?;
    let s4 = ev(p, x.frac().mul_pow2(2)?, tol / 10.0, ctx)?;
    let t1 = partial_sum(p, *x, 1, &head_ctx(tol, ctx))?;
    // (T_0(2x)/2)^p, so 2^p times it is T_0^p(2x)
    let t2 = partial_sum(p, *x, 2, &head_ctx(tol, ctx))?.sub(&t1, *ctx);
    let inner = sx.sub(&t1, *ctx);
    let m1 = s2.sub(&mul_pow(&inner, 1.0, pv, ctx), *ctx);
    let rhs2 = mul_pow(&inner, 2.0, pv, ctx).sub(&mul_pow(&t2, 2.0, pv, ctx), *ctx);
    let m2 = s4.sub(&rhs2, *ctx);
    Ok((m1, m2))
}

pub fn check_m1_m2(p: &PowerParam, xs: &[RationalPoint], tol: f64, ctx: &PrecisionCtx) -> Result<Vec<IdentityReport>> {
    check_tol(tol)?;
    require_samples(xs)?;
    let outs = par::try_map(Exec::default(), xs, |x| {
        let (a, b) = m1_m2_residuals(p, x, tol, ctx)?;
        Ok((equality(&a, format!("x={x}")), equality(&b, format!("x={x}"))))
    })?;
    let (o1, o2): (Vec<_>, Vec<_>) = outs.into_iter().unzip();
    Ok(vec![fold(IdentityKind::FuncEqM1, Some(p.value()), &o1), fold(IdentityKind::FuncEqM2, Some(p.value()), &o2)])
}

/// Residuals of `S(x) = S(q - x)` for every `q` and of `S(x) = S(x + 1)`.
pub fn check_symmetry_periodicity(
    p: &PowerParam,
    xs: &[RationalPoint],
    qs: &[i64],
    tol: f64,
    ctx: &PrecisionCtx,
) -> Result<Vec<IdentityReport>> {
    check_tol(tol)?;
    require_samples(xs)?;
    require_samples(qs)?;
    let t = tol / 10.0;
    let outs = par::try_map(Exec::default(), xs, |x| {
        let sx = ev(p, *x, t, ctx)?;
        let mut sym = Vec::with_capacity(qs.len());
        for q in qs {
            let y = RationalPoint::integer(*q).checked_sub(x)?;
            let r = sx.sub(&ev(p, y, t, ctx)?, *ctx);
            sym.push(equality(&r, format!("x={x} q={q}")));
        }
        let y = x.checked_add(&RationalPoint::integer(1))?;
        let per = equality(&sx.sub(&ev(p, y, t, ctx)?, *ctx), format!("x={x}"));
        Ok((sym, per))
    })?;
    let mut sym = Vec::new();
    let mut per = Vec::new();
    for (s, q) in outs {
        sym.extend(s);
        per.push(q);
    }
    Ok(vec![
        fold(IdentityKind::Symmetry, Some(p.value()), &sym),
        fold(IdentityKind::Periodicity, Some(p.value()), &per),
    ])
}

/// `S_p(x) + radius <= 1/(2^p - 1)` for every sample.
pub fn check_sup_bound(p: &PowerParam, xs: &[RationalPoint], ctx: &PrecisionCtx) -> Result<IdentityReport> {
    require_samples(xs)?;
    // rounded down a little so the comparison is against a lower bound
    let bound = sup_bound(p) * (1.0 - 4.0 * f64::EPSILON);
    let outs = par::try_map(Exec::default(), xs, |x| {
        let v = ev(p, *x, 1e-12_f64.max(bound * 1e-12), ctx)?;
        Ok(Outcome::new(v.upper(), bound, format!("x={x}")).with_ratio(v.value_f64() / bound))
    })?;
    Ok(fold(IdentityKind::SupBound, Some(p.value()), &outs))
}

/// Default integer shifts for the symmetry check.
pub const DEFAULT_QS: [i64; 6] = [-2, -1, 0, 1, 2, 3];

/// Every check above, with `m = 1..=8`.
pub fn run_all(p: &PowerParam, xs: &[RationalPoint], tol: f64, ctx: &PrecisionCtx) -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();
    for m in 1..=8 {
        out.push(check_general_functional_eq(p, m, xs, tol, ctx)?);
    }
    out.extend(check_m1_m2(p, xs, tol, ctx)?);
    out.extend(check_symmetry_periodicity(p, xs, &DEFAULT_QS, tol, ctx)?);
    out.push(check_sup_bound(p, xs, ctx)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use proptest::prelude::*;

    fn pp(p: f64) -> PowerParam {
        PowerParam::new(p).unwrap()
    }

    fn rp(n: i128, d: i128) -> RationalPoint {
        RationalPoint::new(n, d).unwrap()
    }

    #[test]
    fn general_examples() {
        let ctx = PrecisionCtx::native();
        let r = general_residual(&pp(1.0), 1, &rp(0, 1), 1e-12, &ctx).unwrap();
        assert_eq!(r.value_f64(), 0.0);
        for p in [0.3, 0.7, 1.0] {
            let r = general_residual(&pp(p), 1, &RationalPoint::THIRD, 1e-12, &ctx).unwrap();
            assert!(r.value_f64().abs() <= 4.0 * r.f64_radius());
        }
        let xs = sampling::default_points(1000, 42);
        let rep = check_general_functional_eq(&pp(0.7), 3, &xs, 1e-11, &ctx).unwrap();
        assert!(rep.passed, "{rep}");
        assert!(rep.max_residual < 1e-10);
        assert_eq!(rep.samples, 1000);
    }

    #[test]
    fn m1_m2_examples() {
        let ctx = PrecisionCtx::native();
        let (a, b) = m1_m2_residuals(&pp(1.0), &RationalPoint::HALF, 1e-12, &ctx).unwrap();
        assert!(a.value_f64().abs() < 1e-15 && b.value_f64().abs() < 1e-15);
        let xs = sampling::default_points(1000, 7);
        for rep in check_m1_m2(&pp(0.2), &xs, 1e-10, &ctx).unwrap() {
            assert!(rep.passed, "{rep}");
            assert!(rep.max_residual <= 1e-10);
        }
    }

    #[test]
    fn m1_m2_at_one_fifth_against_closed_form() {
        use crate::exact_rational::{closed_form_sp, eval_closed_form};
        let ctx = PrecisionCtx::default();
        let p = pp(0.4);
        let s1 = eval_closed_form(&closed_form_sp(&rp(1, 5)).unwrap(), &p, &ctx).unwrap();
        let s2 = eval_closed_form(&closed_form_sp(&rp(2, 5)).unwrap(), &p, &ctx).unwrap();
        let t = CertifiedValue::exact(0.2f64.powf(0.4));
        // S(2/5) = 2^p (S(1/5) - (1/5)^p)
        let rhs = mul_pow(&s1.sub(&t, ctx), 1.0, 0.4, &ctx);
        assert!((s2.value_f64() - rhs.value_f64()).abs() < 1e-15);
    }

    #[test]
    fn symmetry_examples() {
        let ctx = PrecisionCtx::native();
        let reps =
            check_symmetry_periodicity(&pp(0.4), &[RationalPoint::THIRD, RationalPoint::HALF], &[1], 1e-12, &ctx)
                .unwrap();
        assert!(reps.iter().all(|r| r.passed));
        assert!(reps[0].max_residual < 1e-14);
        let xs = sampling::random_points(300, 3);
        let reps = check_symmetry_periodicity(&pp(0.7), &xs, &DEFAULT_QS, 1e-12, &ctx).unwrap();
        assert!(reps.iter().all(|r| r.passed));
    }

    #[test]
    fn sup_bound_examples() {
        let ctx = PrecisionCtx::native();
        let r = check_sup_bound(&pp(1.0), &[RationalPoint::THIRD, RationalPoint::ZERO], &ctx).unwrap();
        assert!(r.passed);
        assert!((r.max_ratio.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let xs = sampling::random_points(2000, 5);
        assert!(check_sup_bound(&pp(0.3), &xs, &ctx).unwrap().passed);
    }

    #[test]
    fn empty_and_bad_inputs() {
        let ctx = PrecisionCtx::native();
        assert!(check_sup_bound(&pp(0.3), &[], &ctx).is_err());
        assert!(check_general_functional_eq(&pp(0.3), 0, &[RationalPoint::HALF], 1e-9, &ctx).is_err());
        assert!(check_m1_m2(&pp(0.3), &[RationalPoint::HALF], -1.0, &ctx).is_err());
    }

    #[test]
    fn failing_sample_is_reported() {
        let outs = [Outcome::new(1.0, 2.0, "a"), Outcome::new(3.0, 2.5, "b")];
        let r = fold(IdentityKind::SupBound, None, &outs);
        assert!(!r.passed);
        assert_eq!(r.worst.as_deref(), Some("b"));
        assert_eq!(r.max_violation, 0.5);
        let j = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<IdentityReport>(&j).unwrap(), r);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        // applying M1 at x and at 2x reproduces M2
        #[test]
        fn m1_twice_is_m2(p in 0.1f64..1.0, n in 0i128..5000) {
            let ctx = PrecisionCtx::native();
            let p = pp(p);
            let x = rp(n, 4999);
            let tol = 1e-11;
            let (a, b) = m1_m2_residuals(&p, &x, tol, &ctx).unwrap();
            let (a2, _) = m1_m2_residuals(&p, &x.mul_pow2(1).unwrap().frac(), tol, &ctx).unwrap();
            // M2 residual = M1 residual at 2x + 2^p * M1 residual at x
            let composed = a2.add(&mul_pow(&a, 1.0, p.value(), &ctx), ctx);
            prop_assert!((b.value_f64() - composed.value_f64()).abs() <= 2.0 * RADIUS_FACTOR * (b.f64_radius() + composed.f64_radius()));
        }

        #[test]
        fn general_eq_holds(p in 0.15f64..1.2, m in 1u32..9, n in 0i128..1000, d in 1i128..1000) {
            let ctx = PrecisionCtx::native();
            let r = general_residual(&pp(p), m, &rp(n, d), 1e-10, &ctx).unwrap();
            prop_assert!(r.value_f64().abs() <= RADIUS_FACTOR * r.f64_radius());
        }
    }
}
