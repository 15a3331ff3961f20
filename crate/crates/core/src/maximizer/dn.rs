use crate::certified::CertifiedValue;
use crate::error::{Error, Result};
use crate::identities::{fold, require_samples, IdentityKind, IdentityReport, Outcome};
use crate::par::{self, Exec};
use crate::precision::{round_up, with_backend, Backend, PrecisionCtx};
use crate::rational::RationalPoint;
use crate::sampling::SabSample;
use crate::takagi_core::{eval_sp, PowerParam};

use super::bracket::Bracket;

/// Largest generation the sign sums support (keeps `2^{n+2}` exact).
pub const MAX_N: u32 = 120;

fn check_args(p: &PowerParam, n: u32, s: f64) -> Result<()> {
    p.require_sub_unit("D_n")?;
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::domain(format!("s must lie in (0, 1], got {s}")));
    }
    if n > MAX_N {
        return Err(Error::domain(format!("n must be <= {MAX_N}, got {n}")));
    }
    Ok(())
}

/// `x^p` and its absolute error when `x` carries absolute error `abs_in`.
fn pow_err<B: Backend>(b: &mut B, x: &B::Num, pn: &B::Num, p: f64, abs_in: f64) -> (B::Num, f64) {
    let xf = b.to_f64(x).abs();
    if xf == 0.0 {
        return (b.from_f64(0.0), if abs_in > 0.0 { abs_in.powf(p) * 1.01 } else { 0.0 });
    }
    let r = b.pow(x, pn);
    let rf = b.to_f64(&r).abs();
    (r, rf * (b.ulp() + p * abs_in / xf))
}

/// `D_n(s) = sum_{k=0}^{n} [(B_k + u_k)^p - (B_k - u_k)^p]` with
/// `B_k = 2^{n-k+2} - (-1)^{n+k}` and `u_k = (-1)^k 3s`.
/// Positive for even `n`, negative for odd `n`.
pub fn d_n(p: &PowerParam, n: u32, s: f64, ctx: &PrecisionCtx) -> Result<CertifiedValue> {
    check_args(p, n, s)?;
    let pv = p.value();
    with_backend!(*ctx, b => {
        let u = b.ulp();
        let pn = b.from_f64(pv);
        let three_s = b.mul(&b.from_f64(3.0), &b.from_f64(s));
        let e3 = u * b.to_f64(&three_s);
        let mut acc = b.from_f64(0.0);
        let mut err = 0.0;
        for k in 0..=n {
            let sign = if (n + k) % 2 == 0 { 1 } else { -1 };
            let (bv, _) = b.from_int((1i128 << (n - k + 2)) - sign);
            let (hi, lo) = if k % 2 == 0 {
                (b.add(&bv, &three_s), b.sub(&bv, &three_s))
            } else {
                (b.sub(&bv, &three_s), b.add(&bv, &three_s))
            };
            let eh = e3 + u * b.to_f64(&hi).abs();
            let el = e3 + u * b.to_f64(&lo).abs();
            let (a1, r1) = pow_err(b, &hi, &pn, pv, eh);
            let (a2, r2) = pow_err(b, &lo, &pn, pv, el);
            let d = b.sub(&a1, &a2);
            acc = b.add(&acc, &d);
            err += r1 + r2 + u * b.to_f64(&d).abs() + u * b.to_f64(&acc).abs();
        }
        CertifiedValue::new(b.to_real(acc), round_up(err * 1.01))
    })
}

/// `D_n(s) / (3^p 2^{(n+2)p})`, which equals `f_n(s)`.
pub fn scaled_d_n(p: &PowerParam, n: u32, s: f64, ctx: &PrecisionCtx) -> Result<CertifiedValue> {
    let d = d_n(p, n, s, ctx)?;
    let pv = p.value();
    let three = with_backend!(*ctx, b => {
        let u = b.ulp();
        let t = b.pow(&b.from_f64(3.0), &b.from_f64(-pv));
        let (dv, e) = b.from_real(d.value());
        let r = b.mul(&dv, &t);
        let rel = e + 2.0 * u;
        let rad = d.error_radius() * b.to_f64(&t) * (1.0 + rel) + rel * b.to_f64(&r).abs();
        CertifiedValue::new(b.to_real(r), round_up(rad * 1.01))
    })?;
    Ok(crate::identities::mul_pow(&three, -((n + 2) as f64), pv, ctx))
}

/// `f_n(s) = S_p(c_n + s/2^{n+2}) - S_p(c_n - s/2^{n+2})`.
pub fn f_n(p: &PowerParam, n: u32, s: f64, ctx: &PrecisionCtx) -> Result<CertifiedValue> {
    check_args(p, n, s)?;
    if n > 60 {
        return Err(Error::domain("f_n supports n <= 60"));
    }
    let c = Bracket::generation(n)?.c;
    let off =
        RationalPoint::from_f64(s).ok_or_else(|| Error::domain("s is not representable"))?.mul_pow2(-(n as i32 + 2))?;
    let tol = 1e-14_f64.max(ctx.ulp() * 1e4);
    let hi = eval_sp(p, c.checked_add(&off)?, tol, ctx)?;
    let lo = eval_sp(p, c.checked_sub(&off)?, tol, ctx)?;
    Ok(hi.sub(&lo, *ctx))
}

/// Sign law of `D_n` on a grid: positive iff `n` even, certified by the radius.
pub fn verify_dn_parity(ps: &[f64], ns: &[u32], ss: &[f64], ctx: &PrecisionCtx) -> Result<IdentityReport> {
    require_samples(ps)?;
    require_samples(ns)?;
    require_samples(ss)?;
    let grid: Vec<(f64, u32, f64)> =
        ps.iter().flat_map(|&p| ns.iter().flat_map(move |&n| ss.iter().map(move |&s| (p, n, s)))).collect();
    let outs = par::try_map(Exec::default(), &grid, |&(p, n, s)| {
        let d = d_n(&PowerParam::new(p)?, n, s, ctx)?;
        let want = if n % 2 == 0 { 1.0 } else { -1.0 };
        // want * D_n must exceed the radius
        let lhs = d.f64_radius() - want * d.value_f64();
        Ok(Outcome::new(lhs, 0.0, format!("p={p} n={n} s={s}")))
    })?;
    Ok(fold(IdentityKind::DnParity, None, &outs))
}

/// `|f_n(s) - D_n(s) / (3^p 2^{(n+2)p})|` within the combined radii.
pub fn verify_scaling_identity(ps: &[f64], ns: &[u32], ss: &[f64], ctx: &PrecisionCtx) -> Result<IdentityReport> {
    require_samples(ps)?;
    require_samples(ns)?;
    require_samples(ss)?;
    let grid: Vec<(f64, u32, f64)> =
        ps.iter().flat_map(|&p| ns.iter().flat_map(move |&n| ss.iter().map(move |&s| (p, n, s)))).collect();
    let outs = par::try_map(Exec::default(), &grid, |&(p, n, s)| {
        let p = PowerParam::new(p)?;
        let f = f_n(&p, n, s, ctx)?;
        let d = scaled_d_n(&p, n, s, ctx)?;
        let r = f.sub(&d, *ctx);
        Ok(Outcome::new(
            r.value_f64().abs(),
            r.f64_radius() * crate::identities::RADIUS_FACTOR,
            format!("p={p} n={n} s={s}"),
        ))
    })?;
    Ok(fold(IdentityKind::ScalingIdentity, None, &outs))
}

/// `(x+s)^p - (x-s)^p` and its absolute error.
fn sab_side<B: Backend>(b: &mut B, x: f64, s: f64, p: f64) -> (B::Num, f64) {
    let u = b.ulp();
    let pn = b.from_f64(p);
    let (xv, sv) = (b.from_f64(x), b.from_f64(s));
    let hi = b.add(&xv, &sv);
    let lo = b.sub(&xv, &sv);
    let (eh, el) = (u * b.to_f64(&hi).abs(), u * b.to_f64(&lo).abs());
    let (ph, rh) = pow_err(b, &hi, &pn, p, eh);
    let (pl, rl) = pow_err(b, &lo, &pn, p, el);
    let d = b.sub(&ph, &pl);
    let e = rh + rl + u * b.to_f64(&d).abs();
    (d, e)
}

/// Strict inequality, certified under `ctx`: a sample passes when the
/// computed gap exceeds its error bound.
pub fn verify_lemma_sab(samples: &[SabSample], ctx: &PrecisionCtx) -> Result<IdentityReport> {
    require_samples(samples)?;
    for t in samples {
        if !(0.0 < t.s && t.s <= t.a && t.a < t.b && 0.0 < t.p && t.p < 1.0) {
            return Err(Error::domain(format!("sample {t:?} violates 0 < s <= a < b, 0 < p < 1")));
        }
    }
    let outs = par::map(Exec::default(), samples, |t| {
        with_backend!(*ctx, b => {
            let u = b.ulp();
            let (l, el) = sab_side(b, t.a, t.s, t.p);
            let (r, er) = sab_side(b, t.b, t.s, t.p);
            let gap = b.sub(&l, &r);
            let gf = b.to_f64(&gap);
            let err = round_up((el + er + u * gf.abs()) * 1.01);
            // the gap must be positive beyond its error
            Outcome::new(err - gf, 0.0, format!("a={} b={} s={} p={}", t.a, t.b, t.s, t.p))
        })
    });
    Ok(fold(IdentityKind::LemmaSab, None, &outs))
}
