//! Working precision and the two arithmetic backends.
//!
//! `mantissa_bits == 53` runs on native `f64`; anything wider runs on
//! `astro_float::BigFloat`. Both are accounted the same way: every basic
//! operation (and every `pow`, `ln`, `exp2`) contributes at most one ulp,
//! `2^(1 - bits)`, of relative error.

use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, Consts, RoundingMode, Sign, Word};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NATIVE_BITS: u32 = 53;
pub const DEFAULT_BITS: u32 = 128;
/// Above this the per-op ulp underflows the `f64` radii we carry.
pub const MAX_BITS: u32 = 960;

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrecisionCtx {
    mantissa_bits: u32,
}

impl PrecisionCtx {
    pub fn new(mantissa_bits: u32) -> Result<Self> {
        if !(NATIVE_BITS..=MAX_BITS).contains(&mantissa_bits) {
            return Err(Error::invalid(format!(
                "mantissa_bits must lie in [{NATIVE_BITS}, {MAX_BITS}], got {mantissa_bits}"
            )));
        }
        Ok(Self { mantissa_bits })
    }

    pub fn native() -> Self {
        Self { mantissa_bits: NATIVE_BITS }
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    pub fn is_native(&self) -> bool {
        self.mantissa_bits == NATIVE_BITS
    }

    /// Relative error charged per arithmetic operation.
    /// `self`, or the native context when every operand is already an
    /// `f64`: combining such values gains nothing from more bits.
    pub(crate) fn for_operands(&self, vals: &[&Real]) -> PrecisionCtx {
        if vals.iter().all(|v| matches!(v, Real::Native(_))) {
            PrecisionCtx::native()
        } else {
            *self
        }
    }

    pub fn ulp(&self) -> f64 {
        pow2(1 - self.mantissa_bits as i32)
    }
}

impl Default for PrecisionCtx {
    fn default() -> Self {
        Self { mantissa_bits: DEFAULT_BITS }
    }
}

/// `2^k` as an `f64`, saturating to 0 / infinity outside the exponent range.
pub fn pow2(k: i32) -> f64 {
    ldexp(1.0, k)
}

pub fn ldexp(mut x: f64, mut k: i32) -> f64 {
    while k > 1000 {
        x *= 2f64.powi(1000);
        k -= 1000;
    }
    while k < -1000 {
        x *= 2f64.powi(-1000);
        k += 1000;
    }
    x * 2f64.powi(k)
}

/// Bump a non-negative bound up so that the f64 rounding of the bound
/// computation itself cannot make it too small.
pub(crate) fn round_up(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    x * (1.0 + 1e-12) + f64::MIN_POSITIVE
}

/// A real produced by one of the backends.
#[derive(Clone, Debug)]
pub enum Real {
    Native(f64),
    Multi(BigFloat),
}

impl Real {
    pub fn zero() -> Self {
        Real::Native(0.0)
    }

    /// Nearest-ish `f64` (at most one `f64` ulp off for `Multi`).
    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Native(v) => *v,
            Real::Multi(b) => big_to_f64(b),
        }
    }

    /// Bound on `|self - self.to_f64()|`.
    pub fn f64_slack(&self) -> f64 {
        match self {
            Real::Native(_) => 0.0,
            Real::Multi(b) => {
                if b.is_zero() {
                    0.0
                } else {
                    big_to_f64(b).abs() * pow2(-52) + f64::MIN_POSITIVE
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Real::Native(v) => v.is_finite(),
            Real::Multi(b) => !b.is_nan() && !b.is_inf(),
        }
    }

    /// Working precision the value was produced at.
    pub fn bits(&self) -> u32 {
        match self {
            Real::Native(_) => NATIVE_BITS,
            Real::Multi(b) => b.precision().unwrap_or(64) as u32,
        }
    }

    /// Exact value as a dyadic `(m, k)` with `self = m * 2^k`.
    pub fn to_dyadic(&self) -> Option<(BigInt, i64)> {
        match self {
            Real::Native(v) => f64_to_dyadic(*v),
            Real::Multi(b) => big_to_dyadic(b),
        }
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        let (m, k) = self.to_dyadic()?;
        Some(dyadic_to_rational(&m, k))
    }

    pub fn from_dyadic(m: &BigInt, k: i64, bits: u32) -> Result<Self> {
        if bits == NATIVE_BITS {
            let v =
                m.to_f64().map(|f| ldexp(f, k as i32)).ok_or_else(|| Error::Parse("mantissa out of range".into()))?;
            if f64_to_dyadic(v).map(|(m2, k2)| dyadic_eq(m, k, &m2, k2)) != Some(true) {
                return Err(Error::Parse("value is not an exact f64".into()));
            }
            return Ok(Real::Native(v));
        }
        let words = bits.div_ceil(64) as usize;
        if m.is_zero() {
            return Ok(Real::Multi(BigFloat::from_word(0, words * 64)));
        }
        let (sign, mag) = m.clone().into_parts();
        let len = mag.bits() as usize;
        if len > words * 64 {
            return Err(Error::Parse("mantissa wider than the stated precision".into()));
        }
        // left-align the mantissa in `words` words
        let shifted: BigUint = mag << (words * 64 - len);
        let mut digits = shifted.to_u64_digits();
        digits.resize(words, 0);
        let ws: Vec<Word> = digits.into_iter().map(|d| d as Word).collect();
        let e = k + len as i64;
        let e = i32::try_from(e).map_err(|_| Error::Parse("exponent out of range".into()))?;
        let s = if sign == num_bigint::Sign::Minus { Sign::Neg } else { Sign::Pos };
        let b = BigFloat::from_raw_parts(&ws, words * 64, s, e, false);
        if b.is_nan() {
            return Err(Error::Parse("could not rebuild value".into()));
        }
        Ok(Real::Multi(b))
    }

    pub fn cmp_f64(&self, x: f64) -> Ordering {
        match self {
            Real::Native(v) => v.partial_cmp(&x).unwrap_or(Ordering::Equal),
            Real::Multi(b) => {
                let xb = BigFloat::from_f64(x, 64);
                match b.cmp(&xb) {
                    Some(c) if c < 0 => Ordering::Less,
                    Some(c) if c > 0 => Ordering::Greater,
                    _ => Ordering::Equal,
                }
            }
        }
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        match (self.to_dyadic(), other.to_dyadic()) {
            (Some((m1, k1)), Some((m2, k2))) => dyadic_eq(&m1, k1, &m2, k2),
            _ => false,
        }
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Native(v) => write!(f, "{v}"),
            Real::Multi(b) => write!(f, "{}", big_to_f64(b)),
        }
    }
}

fn dyadic_eq(m1: &BigInt, k1: i64, m2: &BigInt, k2: i64) -> bool {
    dyadic_to_rational(m1, k1) == dyadic_to_rational(m2, k2)
}

pub(crate) fn dyadic_to_rational(m: &BigInt, k: i64) -> BigRational {
    if k >= 0 {
        BigRational::from_integer(m << (k as usize))
    } else {
        BigRational::new(m.clone(), BigInt::one() << ((-k) as usize))
    }
}

pub(crate) fn f64_to_dyadic(v: f64) -> Option<(BigInt, i64)> {
    if !v.is_finite() {
        return None;
    }
    if v == 0.0 {
        return Some((BigInt::zero(), 0));
    }
    let bits = v.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let m = BigInt::from(mant);
    Some((if v < 0.0 { -m } else { m }, e))
}

fn big_to_dyadic(b: &BigFloat) -> Option<(BigInt, i64)> {
    if b.is_zero() {
        return Some((BigInt::zero(), 0));
    }
    let (words, _n, s, e, _) = b.as_raw_parts()?;
    let digits: Vec<u64> = words.iter().map(|w| *w as u64).collect();
    let mag = BigUint::from_slice(&digits.iter().flat_map(|d| [*d as u32, (*d >> 32) as u32]).collect::<Vec<u32>>());
    let m = BigInt::from(mag);
    let k = e as i64 - 64 * words.len() as i64;
    Some((if s == Sign::Neg { -m } else { m }, k))
}

fn big_to_f64(b: &BigFloat) -> f64 {
    if b.is_nan() {
        return f64::NAN;
    }
    if b.is_inf_pos() {
        return f64::INFINITY;
    }
    if b.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if b.is_zero() {
        return 0.0;
    }
    let Some((words, _n, s, e, _)) = b.as_raw_parts() else { return f64::NAN };
    let len = words.len();
    let hi = words[len - 1] as u64 as u128;
    let lo = if len >= 2 { words[len - 2] as u64 as u128 } else { 0 };
    // sticky bit so the u128 -> f64 rounding sees the discarded words
    let sticky = words[..len.saturating_sub(2)].iter().any(|w| *w != 0) as u128;
    let top = (hi << 64) | lo | sticky;
    let v = ldexp(top as f64, e - 128);
    if s == Sign::Neg {
        -v
    } else {
        v
    }
}

/// Arithmetic under a fixed working precision.
///
/// Every operation returns a rounded result whose relative error is at most
/// [`Backend::ulp`] (one ulp), provided the inputs are exact.
pub(crate) trait Backend {
    type Num: Clone;

    /// Whether transcendental calls are costly enough to be worth caching.
    const EXPENSIVE: bool;

    fn ulp(&self) -> f64;
    fn from_f64(&self, v: f64) -> Self::Num;
    /// `num / den` with its relative error bound.
    fn from_ratio(&mut self, num: i128, den: i128) -> (Self::Num, f64);
    /// Integer with its relative error bound.
    fn from_int(&mut self, v: i128) -> (Self::Num, f64);
    fn from_real(&mut self, r: &Real) -> (Self::Num, f64);
    fn add(&mut self, a: &Self::Num, b: &Self::Num) -> Self::Num;
    fn sub(&mut self, a: &Self::Num, b: &Self::Num) -> Self::Num;
    fn mul(&mut self, a: &Self::Num, b: &Self::Num) -> Self::Num;
    fn div(&mut self, a: &Self::Num, b: &Self::Num) -> Self::Num;
    /// `a^e` for `a > 0`.
    fn pow(&mut self, a: &Self::Num, e: &Self::Num) -> Self::Num;
    fn exp2(&mut self, a: &Self::Num) -> Self::Num;
    fn ln(&mut self, a: &Self::Num) -> Self::Num;
    fn log2(&mut self, a: &Self::Num) -> Self::Num;
    /// Exact multiplication by `2^k`.
    fn scale2(&self, a: &Self::Num, k: i32) -> Self::Num;
    fn to_f64(&self, a: &Self::Num) -> f64;
    fn to_real(&self, a: Self::Num) -> Real;
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct NativeBackend;

const F64_ULP: f64 = f64::EPSILON;

impl Backend for NativeBackend {
    type Num = f64;
    const EXPENSIVE: bool = false;

    fn ulp(&self) -> f64 {
        F64_ULP
    }

    fn from_f64(&self, v: f64) -> f64 {
        v
    }

    fn from_ratio(&mut self, num: i128, den: i128) -> (f64, f64) {
        let (a, ea) = self.from_int(num);
        let (b, eb) = self.from_int(den);
        (a / b, ea + eb + F64_ULP)
    }

    fn from_int(&mut self, v: i128) -> (f64, f64) {
        let f = v as f64;
        let exact = f.abs() < 2f64.powi(127) && f as i128 == v;
        (f, if exact { 0.0 } else { F64_ULP })
    }

    fn from_real(&mut self, r: &Real) -> (f64, f64) {
        match r {
            Real::Native(v) => (*v, 0.0),
            Real::Multi(_) => (r.to_f64(), F64_ULP),
        }
    }

    fn add(&mut self, a: &f64, b: &f64) -> f64 {
        a + b
    }

    fn sub(&mut self, a: &f64, b: &f64) -> f64 {
        a - b
    }

    fn mul(&mut self, a: &f64, b: &f64) -> f64 {
        a * b
    }

    fn div(&mut self, a: &f64, b: &f64) -> f64 {
        a / b
    }

    fn pow(&mut self, a: &f64, e: &f64) -> f64 {
        a.powf(*e)
    }

    fn exp2(&mut self, a: &f64) -> f64 {
        a.exp2()
    }

    fn ln(&mut self, a: &f64) -> f64 {
        a.ln()
    }

    fn log2(&mut self, a: &f64) -> f64 {
        a.log2()
    }

    fn scale2(&self, a: &f64, k: i32) -> f64 {
        ldexp(*a, k)
    }

    fn to_f64(&self, a: &f64) -> f64 {
        *a
    }

    fn to_real(&self, a: f64) -> Real {
        Real::Native(a)
    }
}

pub(crate) struct MpBackend {
    bits: u32,
    prec: usize,
    cc: Consts,
}

impl MpBackend {
    pub(crate) fn new(bits: u32) -> Self {
        let cc = Consts::new().expect("astro-float constants cache");
        Self { bits, prec: (bits.div_ceil(64) * 64) as usize, cc }
    }
}

impl Backend for MpBackend {
    type Num = BigFloat;
    const EXPENSIVE: bool = true;

    fn ulp(&self) -> f64 {
        pow2(1 - self.bits as i32)
    }

    fn from_f64(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, self.prec.max(64))
    }

    fn from_ratio(&mut self, num: i128, den: i128) -> (BigFloat, f64) {
        let (a, ea) = self.from_int(num);
        let (b, eb) = self.from_int(den);
        let u = self.ulp();
        (a.div(&b, self.prec, RM), ea + eb + u)
    }

    fn from_int(&mut self, v: i128) -> (BigFloat, f64) {
        let exact = BigFloat::from_i128(v, 128);
        if self.prec >= 128 {
            (exact, 0.0)
        } else {
            let mut r = exact.clone();
            let _ = r.set_precision(self.prec, RM);
            (r, self.ulp())
        }
    }

    fn from_real(&mut self, r: &Real) -> (BigFloat, f64) {
        match r {
            Real::Native(v) => (self.from_f64(*v), 0.0),
            Real::Multi(b) => {
                if b.precision().unwrap_or(0) <= self.prec {
                    (b.clone(), 0.0)
                } else {
                    let mut c = b.clone();
                    let _ = c.set_precision(self.prec, RM);
                    (c, self.ulp())
                }
            }
        }
    }

    fn add(&mut self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.prec, RM)
    }

    fn sub(&mut self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.prec, RM)
    }

    fn mul(&mut self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.prec, RM)
    }

    fn div(&mut self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.prec, RM)
    }

    fn pow(&mut self, a: &BigFloat, e: &BigFloat) -> BigFloat {
        a.pow(e, self.prec, RM, &mut self.cc)
    }

    fn exp2(&mut self, a: &BigFloat) -> BigFloat {
        let two = BigFloat::from_word(2, 64);
        two.pow(a, self.prec, RM, &mut self.cc)
    }

    fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.prec, RM, &mut self.cc)
    }

    fn log2(&mut self, a: &BigFloat) -> BigFloat {
        a.log2(self.prec, RM, &mut self.cc)
    }

    fn scale2(&self, a: &BigFloat, k: i32) -> BigFloat {
        if a.is_zero() {
            return a.clone();
        }
        let mut r = a.clone();
        if let Some(e) = a.exponent() {
            r.set_exponent(e + k);
        }
        r
    }

    fn to_f64(&self, a: &BigFloat) -> f64 {
        big_to_f64(a)
    }

    fn to_real(&self, a: BigFloat) -> Real {
        Real::Multi(a)
    }
}

/// Runs a backend-generic expression under the backend selected by `ctx`.
macro_rules! with_backend {
    ($ctx:expr, $b:ident => $body:expr) => {{
        let ctx: $crate::precision::PrecisionCtx = $ctx;
        if ctx.is_native() {
            let mut backend = $crate::precision::NativeBackend;
            let $b = &mut backend;
            $body
        } else {
            let mut backend = $crate::precision::MpBackend::new(ctx.mantissa_bits());
            let $b = &mut backend;
            $body
        }
    }};
}
pub(crate) use with_backend;

/// Decimal rendering of an exact rational with `digits` places after the
/// point, rounded half away from zero.
pub fn rational_to_decimal(q: &BigRational, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = q * BigRational::from_integer(scale.clone());
    let neg = scaled.is_negative();
    let a = scaled.abs();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let n = (a + half).floor().to_integer();
    let s = n.to_string();
    let body = if digits == 0 {
        s
    } else {
        let d = digits as usize;
        let padded = if s.len() <= d { format!("{}{}", "0".repeat(d + 1 - s.len()), s) } else { s };
        let (i, f) = padded.split_at(padded.len() - d);
        format!("{i}.{f}")
    };
    if neg && body.chars().any(|c| c != '0' && c != '.') {
        format!("-{body}")
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ctx_bounds() {
        assert!(PrecisionCtx::new(52).is_err());
        assert!(PrecisionCtx::new(MAX_BITS + 1).is_err());
        assert!(PrecisionCtx::new(53).unwrap().is_native());
        assert_eq!(PrecisionCtx::default().mantissa_bits(), 128);
        assert_eq!(PrecisionCtx::native().ulp(), f64::EPSILON);
    }

    #[test]
    fn big_to_f64_matches() {
        for &v in &[1.0, 0.75, -3.5, 1.0 / 3.0, 1e-300, 12345.678, -2f64.powi(-1000)] {
            let b = BigFloat::from_f64(v, 128);
            assert_eq!(big_to_f64(&b), v, "{v}");
        }
        let mut mp = MpBackend::new(256);
        let (third, _) = mp.from_ratio(1, 3);
        assert_eq!(mp.to_f64(&third), 1.0 / 3.0);
    }

    #[test]
    fn dyadic_round_trip() {
        let mut mp = MpBackend::new(192);
        let (x, _) = mp.from_ratio(-2, 7);
        let r = Real::Multi(x);
        let (m, k) = r.to_dyadic().unwrap();
        let back = Real::from_dyadic(&m, k, 192).unwrap();
        assert_eq!(r, back);
        assert_eq!(back.to_dyadic().unwrap(), (m, k));

        let n = Real::Native(0.1);
        let (m, k) = n.to_dyadic().unwrap();
        assert_eq!(Real::from_dyadic(&m, k, 53).unwrap(), n);
        assert!(Real::from_dyadic(&BigInt::from(3u64).pow(40), 0, 53).is_err());
    }

    #[test]
    fn scale2_exact() {
        let mp = MpBackend::new(128);
        let x = mp.from_f64(0.75);
        assert_eq!(mp.to_f64(&mp.scale2(&x, -3)), 0.75 / 8.0);
        assert_eq!(NativeBackend.scale2(&0.75, 5), 24.0);
    }

    #[test]
    fn decimal_rendering() {
        let q = BigRational::new(BigInt::from(2), BigInt::from(3));
        assert_eq!(rational_to_decimal(&q, 4), "0.6667");
        assert_eq!(rational_to_decimal(&-q.clone(), 2), "-0.67");
        assert_eq!(rational_to_decimal(&q, 0), "1");
        let tiny = BigRational::new(BigInt::from(-1), BigInt::from(1000));
        assert_eq!(rational_to_decimal(&tiny, 2), "0.00");
    }

    #[test]
    fn mp_pow_sane() {
        let mut mp = MpBackend::new(128);
        let two = mp.from_f64(2.0);
        let half = mp.from_f64(0.5);
        let r = mp.pow(&two, &half);
        assert!((mp.to_f64(&r) - 2f64.sqrt()).abs() < 1e-15);
        let e = mp.exp2(&mp.from_f64(-1.0));
        assert_eq!(mp.to_f64(&e), 0.5);
    }
}
