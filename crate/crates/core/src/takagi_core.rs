//! `T_0`, the exponent type, and certified evaluation of
//! `S_p(x) = sum_{n>=0} (T_0(2^n x) / 2^n)^p`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::certified::CertifiedValue;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::precision::{round_up, with_backend, Backend, PrecisionCtx};
use crate::rational::Point;

/// Hard cap on the number of series terms a single evaluation may use.
pub const MAX_TERMS: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SubUnit,
    Unit,
    SuperUnit,
}

/// Exponent `p > 0`, finite.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PowerParam {
    p: f64,
}

impl PowerParam {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::domain(format!("exponent p must be finite and > 0, got {p}")));
        }
        Ok(Self { p })
    }

    pub fn value(&self) -> f64 {
        self.p
    }

    pub fn regime(&self) -> Regime {
        if self.p < 1.0 {
            Regime::SubUnit
        } else if self.p == 1.0 {
            Regime::Unit
        } else {
            Regime::SuperUnit
        }
    }

    /// `Ok` iff `0 < p < 1`.
    pub fn require_sub_unit(&self, what: &str) -> Result<()> {
        match self.regime() {
            Regime::SubUnit => Ok(()),
            _ => Err(Error::domain(format!("{what} needs 0 < p < 1, got p = {}", self.p))),
        }
    }

    /// `Ok` iff `0 < p <= 1`.
    pub fn require_at_most_one(&self, what: &str) -> Result<()> {
        match self.regime() {
            Regime::SuperUnit => Err(Error::domain(format!("{what} needs 0 < p <= 1, got p = {}", self.p))),
            _ => Ok(()),
        }
    }
}

impl TryFrom<f64> for PowerParam {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<PowerParam> for f64 {
    fn from(p: PowerParam) -> f64 {
        p.p
    }
}

impl FromStr for PowerParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: f64 = s.trim().parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))?;
        Self::new(v)
    }
}

impl fmt::Display for PowerParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.p)
    }
}

/// Distance from `x` to the nearest integer. Exact in `f64`.
pub fn t0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("t0 needs a finite argument, got {x}")));
    }
    Ok((x - x.round()).abs())
}

/// Upper bound on `sum_{n>=N} 2^{-(n+1)p}` (which also dominates the
/// tail of `S_p` from term `N` on). The sum equals `2^{-Np} / (2^p - 1)`.
pub fn tail_bound(p: &PowerParam, n: u64) -> f64 {
    let p = p.value();
    let num = (-(n as f64) * p).exp2();
    let den = (p * std::f64::consts::LN_2).exp_m1();
    round_up(num / den)
}

/// `1 / (2^p - 1)`, the bound on `|S_p|` (f64 rounding, not rounded up).
pub fn sup_bound(p: &PowerParam) -> f64 {
    1.0 / (p.value() * std::f64::consts::LN_2).exp_m1()
}

/// Smallest `N` with `tail_bound(p, N) <= budget`.
pub fn terms_needed(p: &PowerParam, budget: f64) -> Result<u64> {
    if !(budget > 0.0) {
        return Err(Error::invalid(format!("tolerance must be > 0, got {budget}")));
    }
    let pv = p.value();
    let guess = ((1.0 / (budget * (pv * std::f64::consts::LN_2).exp_m1())).log2() / pv).ceil();
    if guess > MAX_TERMS as f64 {
        return Err(Error::Resource(format!(
            "p = {pv} at tolerance {budget:e} needs about {guess:e} terms (cap {MAX_TERMS})"
        )));
    }
    let mut n = guess.max(0.0) as u64;
    while tail_bound(p, n) > budget {
        n += 1;
    }
    while n > 0 && tail_bound(p, n - 1) <= budget {
        n -= 1;
    }
    Ok(n)
}

/// State of `frac(2^n |x|)` under the doubling map, exact in both forms.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Orbit {
    Ratio { r: i128, den: i128 },
    Float(f64),
}

impl Orbit {
    pub(crate) fn start(x: &Point) -> Orbit {
        // T_0 is even, so S_p(x) = S_p(|x|)
        match x {
            Point::Rational(q) => {
                let f = q.abs().frac();
                Orbit::Ratio { r: f.numerator(), den: f.denominator() }
            }
            Point::Float(v) => {
                let a = v.abs();
                Orbit::Float(a - a.floor())
            }
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        match self {
            Orbit::Ratio { r, .. } => *r == 0,
            Orbit::Float(f) => *f == 0.0,
        }
    }

    pub(crate) fn step(&mut self) {
        match self {
            Orbit::Ratio { r, den } => {
                *r *= 2;
                if *r >= *den {
                    *r -= *den;
                }
            }
            Orbit::Float(f) => {
                *f *= 2.0;
                if *f >= 1.0 {
                    *f -= 1.0;
                }
            }
        }
    }

    /// Numerator of `T_0` over the fixed denominator, for caching.
    fn t0_key(&self) -> Option<i128> {
        match self {
            Orbit::Ratio { r, den } => Some((*r).min(den - r)),
            Orbit::Float(_) => None,
        }
    }

    /// `T_0` of the current state as a backend number and its relative error.
    pub(crate) fn t0<B: Backend>(&self, b: &mut B) -> (B::Num, f64) {
        match self {
            Orbit::Ratio { r, den } => b.from_ratio((*r).min(den - r), *den),
            Orbit::Float(f) => (b.from_f64(f.min(1.0 - f)), 0.0),
        }
    }
}

/// Result of summing a block of series terms inside one backend.
pub(crate) struct Partial<N> {
    pub value: N,
    pub rounding: f64,
    /// True when the orbit reached 0, i.e. every later term vanishes.
    pub terminated: bool,
}

/// Sums terms `n = 0..count` of the series at `x` under backend `b`.
///
/// Per-term error (in units of the backend ulp `u`): the `T_0` conversion
/// carries `d_t`, `pow` adds `u + p d_t`, the weight `2^{-np}` carries
/// `2nu` (mp, repeated multiplication) or `u + 0.7 n p u` (f64, direct
/// `exp2`), and the product adds `u`. The terms are then added pairwise, so
/// each takes part in at most `ceil(log2 count)` roundings.
pub(crate) fn sum_terms<B: Backend>(b: &mut B, p: f64, x: &Point, count: u64) -> Partial<B::Num> {
    let u = b.ulp();
    let pn = b.from_f64(p);
    let r = b.exp2(&b.from_f64(-p));
    let mut w = b.from_f64(1.0);
    let mut orbit = Orbit::start(x);
    let mut cache: HashMap<i128, (B::Num, f64)> = HashMap::new();
    let mut terms: Vec<B::Num> = Vec::new();
    let mut rounding = 0.0;
    let mut abs_sum = 0.0;
    let mut terminated = false;
    for n in 0..count {
        if orbit.is_zero() {
            terminated = true;
            break;
        }
        let (tp, e_tp) = match orbit.t0_key().filter(|_| B::EXPENSIVE) {
            Some(k) if cache.contains_key(&k) => cache[&k].clone(),
            key => {
                let (t, dt) = orbit.t0(b);
                let v = (b.pow(&t, &pn), u + p * dt);
                if let Some(k) = key {
                    cache.insert(k, v.clone());
                }
                v
            }
        };
        let e_w = if B::EXPENSIVE {
            2.0 * n as f64 * u
        } else {
            w = b.exp2(&b.from_f64(-(n as f64) * p));
            u + 0.7 * n as f64 * p * u
        };
        let term = b.mul(&tp, &w);
        let tf = b.to_f64(&term).abs();
        rounding += tf * (e_tp + e_w + u);
        abs_sum += tf;
        terms.push(term);
        if B::EXPENSIVE {
            w = b.mul(&w, &r);
        }
        orbit.step();
    }
    if !terminated && orbit.is_zero() {
        terminated = true;
    }
    let depth = (terms.len().max(1) as f64).log2().ceil();
    rounding += depth * u * abs_sum;
    let value = pairwise(b, &terms);
    Partial { value, rounding: round_up(rounding * 1.01), terminated }
}

fn pairwise<B: Backend>(b: &mut B, xs: &[B::Num]) -> B::Num {
    match xs.len() {
        0 => b.from_f64(0.0),
        1 => xs[0].clone(),
        n => {
            let (l, r) = xs.split_at(n / 2);
            let a = pairwise(b, l);
            let c = pairwise(b, r);
            b.add(&a, &c)
        }
    }
}

/// Certified `S_p(x)` with `error_radius <= target_abs_err`.
///
/// The term count comes from [`tail_bound`] so that truncation uses at most
/// half the budget; if rounding at `ctx` needs more than the other half a
/// precision error is returned.
///
/// `ctx` is a ceiling: when the tolerance is loose enough the sum is first
/// tried in `f64` and that result is returned if its certified radius fits.
pub fn eval_sp(p: &PowerParam, x: impl Into<Point>, target_abs_err: f64, ctx: &PrecisionCtx) -> Result<CertifiedValue> {
    let x = x.into();
    if !x.is_finite() {
        return Err(Error::domain("x must be finite"));
    }
    if !ctx.is_native() && target_abs_err >= NATIVE_FLOOR {
        if let Ok(v) = eval_at(p, &x, target_abs_err, &PrecisionCtx::native()) {
            return Ok(v);
        }
    }
    eval_at(p, &x, target_abs_err, ctx)
}

/// Tolerances below this never fit the `f64` rounding budget.
const NATIVE_FLOOR: f64 = 1e-14;

fn eval_at(p: &PowerParam, x: &Point, target_abs_err: f64, ctx: &PrecisionCtx) -> Result<CertifiedValue> {
    let half = target_abs_err / 2.0 * (1.0 - 1e-9);
    let n = terms_needed(p, half)?;
    with_backend!(*ctx, b => {
        let part = sum_terms(b, p.value(), x, n);
        if part.rounding > half {
            return Err(Error::precision(format!(
                "rounding error {:.3e} exceeds half the tolerance {:.3e} at {} bits",
                part.rounding,
                target_abs_err,
                ctx.mantissa_bits()
            )));
        }
        let trunc = if part.terminated { 0.0 } else { tail_bound(p, n) };
        CertifiedValue::new(b.to_real(part.value), round_up(trunc + part.rounding))
    })
}

/// [`eval_sp`] over a batch, in input order.
pub fn eval_sp_batch(
    p: &PowerParam,
    xs: &[Point],
    target_abs_err: f64,
    ctx: &PrecisionCtx,
) -> Result<Vec<CertifiedValue>> {
    eval_sp_batch_with(Exec::default(), p, xs, target_abs_err, ctx)
}

pub fn eval_sp_batch_with(
    exec: Exec,
    p: &PowerParam,
    xs: &[Point],
    target_abs_err: f64,
    ctx: &PrecisionCtx,
) -> Result<Vec<CertifiedValue>> {
    par::try_map(exec, xs, |x| eval_sp(p, *x, target_abs_err, ctx))
}

/// The finite head `sum_{k<m} (T_0(2^k x)/2^k)^p`; rounding error only.
pub fn partial_sum(p: &PowerParam, x: impl Into<Point>, m: u64, ctx: &PrecisionCtx) -> Result<CertifiedValue> {
    let x = x.into();
    if !x.is_finite() {
        return Err(Error::domain("x must be finite"));
    }
    with_backend!(*ctx, b => {
        let part = sum_terms(b, p.value(), &x, m);
        CertifiedValue::new(b.to_real(part.value), part.rounding)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::RationalPoint;
    use proptest::prelude::*;

    fn pp(p: f64) -> PowerParam {
        PowerParam::new(p).unwrap()
    }

    fn rp(n: i128, d: i128) -> RationalPoint {
        RationalPoint::new(n, d).unwrap()
    }

    #[test]
    fn power_param_validation() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(PowerParam::new(bad).is_err());
        }
        assert_eq!(pp(0.5).regime(), Regime::SubUnit);
        assert_eq!(pp(1.0).regime(), Regime::Unit);
        assert_eq!(pp(1.5).regime(), Regime::SuperUnit);
        assert!(serde_json::from_str::<PowerParam>("-2.0").is_err());
        assert_eq!(serde_json::from_str::<PowerParam>("0.25").unwrap(), pp(0.25));
    }

    #[test]
    fn t0_examples() {
        assert_eq!(t0(0.0).unwrap(), 0.0);
        assert_eq!(t0(0.25).unwrap(), 0.25);
        assert_eq!(t0(1.0 / 3.0).unwrap(), 1.0 / 3.0);
        assert!((t0(0.8).unwrap() - 0.2).abs() < 1e-16);
        assert_eq!(t0(2.5).unwrap(), 0.5);
        assert_eq!(t0(-3.0).unwrap(), 0.0);
        assert!(t0(f64::NAN).is_err());
        assert!(t0(f64::INFINITY).is_err());
    }

    #[test]
    fn tail_bound_examples() {
        assert!((tail_bound(&pp(1.0), 0) - 1.0).abs() < 1e-11);
        assert!((tail_bound(&pp(1.0), 10) - 0.0009765625).abs() < 1e-14);
        // 10^4-term mpmath sum of 2^{-(n+1)/2}, n >= 20
        let oracle = 0.002_357_630_432_004_975_6;
        let t = tail_bound(&pp(0.5), 20);
        assert!(t >= oracle && t - oracle < 1e-14, "{t}");
    }

    #[test]
    fn terms_needed_is_minimal() {
        for &p in &[0.1, 0.5, 1.0, 3.0] {
            let p = pp(p);
            let n = terms_needed(&p, 1e-12).unwrap();
            assert!(tail_bound(&p, n) <= 1e-12);
            assert!(n == 0 || tail_bound(&p, n - 1) > 1e-12);
        }
        assert!(terms_needed(&pp(1e-9), 1e-12).is_err());
        assert!(terms_needed(&pp(1.0), 0.0).is_err());
    }

    #[test]
    fn eval_examples() {
        for ctx in [PrecisionCtx::native(), PrecisionCtx::default()] {
            let z = eval_sp(&pp(1.0), 0.0, 1e-12, &ctx).unwrap();
            assert_eq!(z.value_f64(), 0.0);
            assert_eq!(z.error_radius(), 0.0);

            let third = eval_sp(&pp(1.0), rp(1, 3), 1e-12, &ctx).unwrap();
            assert!(third.error_radius() <= 1e-12);
            assert!(third.contains(2.0 / 3.0));

            let half = eval_sp(&pp(0.5), 0.5, 1e-12, &ctx).unwrap();
            assert!(half.contains(std::f64::consts::FRAC_1_SQRT_2));
            assert!((half.value_f64() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn eval_against_oracle() {
        // 512-bit, 200-term mpmath sum at x = 37/100
        let oracle = 2.375_253_668_445_279_390_221_571_318_4;
        for bits in [53, 128] {
            let ctx = PrecisionCtx::new(bits).unwrap();
            let v = eval_sp(&pp(0.4), rp(37, 100), 1e-10, &ctx).unwrap();
            assert!(v.error_radius() <= 1e-10);
            assert!((v.value_f64() - oracle).abs() <= v.f64_radius() + 1e-15);
        }
        let hi = eval_sp(&pp(0.4), rp(37, 100), 1e-25, &PrecisionCtx::new(160).unwrap()).unwrap();
        assert!((hi.value_f64() - oracle).abs() < 1e-15);
    }

    #[test]
    fn reports_precision_error() {
        let r = eval_sp(&pp(0.7), rp(1, 3), 1e-20, &PrecisionCtx::native());
        assert!(matches!(r, Err(Error::Precision(_))));
    }

    #[test]
    fn loose_tolerance_takes_the_native_path() {
        let v = eval_sp(&pp(0.7), rp(1, 3), 1e-12, &PrecisionCtx::default()).unwrap();
        assert_eq!(v.value().bits(), 53);
        assert!(v.error_radius() <= 1e-12);
        let v = eval_sp(&pp(0.7), rp(1, 3), 1e-15, &PrecisionCtx::default()).unwrap();
        assert_eq!(v.value().bits(), 128);
    }

    #[test]
    fn dyadic_has_no_truncation() {
        let v = eval_sp(&pp(0.3), rp(3, 8), 1e-6, &PrecisionCtx::default()).unwrap();
        // 3/8 -> 3/4 -> 1/2 -> 0
        let exact = (0.375f64).powf(0.3) + (0.125f64).powf(0.3) + (0.125f64).powf(0.3);
        assert!((v.value_f64() - exact).abs() < 1e-14);
        assert!(v.error_radius() < 1e-14);
        let v = eval_sp(&pp(0.3), rp(3, 8), 1e-20, &PrecisionCtx::default()).unwrap();
        assert_eq!(v.value().bits(), 128);
        assert!(v.error_radius() < 1e-30);
    }

    #[test]
    fn partial_sum_matches_hand() {
        let ctx = PrecisionCtx::native();
        let s = partial_sum(&pp(1.0), rp(1, 3), 2, &ctx).unwrap();
        assert!((s.value_f64() - 0.5).abs() < 1e-15);
        let big = partial_sum(&pp(1.0), rp(1, 3), 0, &ctx).unwrap();
        assert_eq!(big.value_f64(), 0.0);
    }

    #[test]
    fn batch_is_ordered() {
        let xs: Vec<Point> = (0..50).map(|i| rp(i, 50).into()).collect();
        let ctx = PrecisionCtx::native();
        let a = eval_sp_batch_with(Exec::Sequential, &pp(0.6), &xs, 1e-12, &ctx).unwrap();
        let b = eval_sp_batch_with(Exec::Parallel, &pp(0.6), &xs, 1e-12, &ctx).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn t0_properties(x in -1e6f64..1e6) {
            let t = t0(x).unwrap();
            prop_assert!((0.0..=0.5).contains(&t));
            prop_assert_eq!(t0(-x).unwrap(), t);
        }

        #[test]
        fn within_sup_bound(p in 0.05f64..3.0, n in 0i128..10_000, d in 1i128..10_000) {
            let p = pp(p);
            let v = eval_sp(&p, rp(n, d), 1e-9, &PrecisionCtx::native()).unwrap();
            prop_assert!(v.value_f64().abs() <= sup_bound(&p) * (1.0 + 1e-12) + v.error_radius());
        }

        #[test]
        fn periodic_and_even(p in 0.1f64..2.0, n in -10_000i128..10_000) {
            let p = pp(p);
            let ctx = PrecisionCtx::native();
            let x = rp(n, 1000);
            let a = eval_sp(&p, x, 1e-11, &ctx).unwrap();
            let b = eval_sp(&p, x.checked_add(&RationalPoint::integer(1)).unwrap(), 1e-11, &ctx).unwrap();
            let c = eval_sp(&p, x.neg(), 1e-11, &ctx).unwrap();
            prop_assert!(a.intersects(&b));
            prop_assert!(a.intersects(&c));
        }

        #[test]
        fn refinement_intersects(p in 0.2f64..1.5, n in 0i128..997) {
            let p = pp(p);
            let ctx = PrecisionCtx::native();
            let x = rp(n, 997);
            let coarse = eval_sp(&p, x, 1e-4, &ctx).unwrap();
            let fine = eval_sp(&p, x, 1e-12, &ctx).unwrap();
            prop_assert!(coarse.intersects(&fine));
        }
    }
}
