use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::precision::{rational_to_decimal, round_up, with_backend, Backend, PrecisionCtx, Real};

/// A value together with a rigorous absolute error radius: the true
/// quantity lies in `[value - error_radius, value + error_radius]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedValue {
    value: Real,
    error_radius: f64,
}

fn down(x: f64) -> f64 {
    x - (x.abs() * f64::EPSILON + f64::MIN_POSITIVE)
}

fn up(x: f64) -> f64 {
    x + (x.abs() * f64::EPSILON + f64::MIN_POSITIVE)
}

impl CertifiedValue {
    pub fn new(value: Real, error_radius: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::precision("non-finite value"));
        }
        if !(error_radius >= 0.0 && error_radius.is_finite()) {
            return Err(Error::precision(format!("invalid error radius {error_radius}")));
        }
        Ok(Self { value, error_radius })
    }

    pub fn exact(v: f64) -> Self {
        Self { value: Real::Native(v), error_radius: 0.0 }
    }

    pub fn value(&self) -> &Real {
        &self.value
    }

    pub fn value_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn error_radius(&self) -> f64 {
        self.error_radius
    }

    /// Radius of the enclosure around `value_f64()`, i.e. including the
    /// conversion to `f64`.
    pub fn f64_radius(&self) -> f64 {
        round_up(self.error_radius + self.value.f64_slack())
    }

    /// A certified lower bound, as an `f64`.
    pub fn lower(&self) -> f64 {
        down(down(self.value_f64() - self.f64_radius()))
    }

    pub fn upper(&self) -> f64 {
        up(up(self.value_f64() + self.f64_radius()))
    }

    /// Upper bound on the absolute value.
    pub fn abs_upper(&self) -> f64 {
        self.upper().abs().max(self.lower().abs())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() <= x && x <= self.upper()
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }

    /// `self - other` under `ctx` (plain `f64` if both operands are), with
    /// both radii and the rounding added.
    pub fn sub(&self, other: &Self, ctx: PrecisionCtx) -> Self {
        combine(self, other, ctx, true)
    }

    pub fn add(&self, other: &Self, ctx: PrecisionCtx) -> Self {
        combine(self, other, ctx, false)
    }

    /// `self * 2^k`, exact apart from the radius scaling.
    pub fn scale2(&self, k: i32, ctx: PrecisionCtx) -> Self {
        with_backend!(ctx.for_operands(&[&self.value]), b => {
            let (v, e) = b.from_real(&self.value);
            let s = b.scale2(&v, k);
            let r = self.error_radius * crate::precision::pow2(k) + e * b.to_f64(&s).abs();
            Self { value: b.to_real(s), error_radius: round_up(r) }
        })
    }

    /// Number of decimal places that are not swamped by the radius.
    pub fn significant_places(&self) -> u32 {
        if self.error_radius == 0.0 {
            // exact: show the working precision
            let bits = self.value.bits() as f64;
            let mag = self.value_f64().abs().max(1e-300).log10().floor();
            return ((bits * std::f64::consts::LOG10_2) - mag - 1.0).clamp(0.0, 60.0) as u32;
        }
        (-self.error_radius.log10()).floor().clamp(0.0, 60.0) as u32
    }

    /// Decimal rendering of the value without digits below the radius.
    pub fn to_decimal(&self) -> String {
        match self.value.to_rational() {
            Some(q) if q.is_zero() && self.error_radius == 0.0 => "0".to_string(),
            Some(q) => rational_to_decimal(&q, self.significant_places()),
            None => self.value.to_string(),
        }
    }
}

fn combine(a: &CertifiedValue, c: &CertifiedValue, ctx: PrecisionCtx, minus: bool) -> CertifiedValue {
    with_backend!(ctx.for_operands(&[&a.value, &c.value]), b => {
        let (x, ex) = b.from_real(&a.value);
        let (y, ey) = b.from_real(&c.value);
        let z = if minus { b.sub(&x, &y) } else { b.add(&x, &y) };
        let u = b.ulp();
        let r = a.error_radius
            + c.error_radius
            + ex * b.to_f64(&x).abs()
            + ey * b.to_f64(&y).abs()
            + u * b.to_f64(&z).abs();
        CertifiedValue { value: b.to_real(z), error_radius: round_up(r) }
    })
}

impl fmt::Display for CertifiedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {:.2e}", self.to_decimal(), self.error_radius)
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    value: f64,
    decimal: String,
    /// exact binary value `m * 2^k` written as `"mpk"`
    exact: String,
    bits: u32,
    error_radius: f64,
}

impl Serialize for CertifiedValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (m, k) = self.value.to_dyadic().ok_or_else(|| serde::ser::Error::custom("non-finite certified value"))?;
        Wire {
            value: self.value_f64(),
            decimal: self.to_decimal(),
            exact: format!("{m}p{k}"),
            bits: self.value.bits(),
            error_radius: self.error_radius,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CertifiedValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = Wire::deserialize(d)?;
        let (m, k) = w.exact.split_once('p').ok_or_else(|| D::Error::custom("exact must be <m>p<k>"))?;
        let m: BigInt = m.parse().map_err(D::Error::custom)?;
        let k: i64 = k.parse().map_err(D::Error::custom)?;
        let value = Real::from_dyadic(&m, k, w.bits).map_err(D::Error::custom)?;
        CertifiedValue::new(value, w.error_radius).map_err(D::Error::custom)
    }
}
