use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest denominator a [`RationalPoint`] may carry. Leaves headroom so
/// that `2 * r` for a residue `r < den` never overflows `i128`.
pub const MAX_DEN: i128 = 1 << 125;

/// Exact rational `num/den` in lowest terms with `den >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RationalPoint {
    num: i128,
    den: i128,
}

impl RationalPoint {
    pub fn new(num: i128, den: i128) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("zero denominator"));
        }
        if num == i128::MIN || den == i128::MIN {
            return Err(Error::Overflow("i128::MIN in rational".into()));
        }
        let g = num.gcd(&den);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = -n;
            d = -d;
        }
        if d > MAX_DEN {
            return Err(Error::Overflow(format!("denominator {d} exceeds 2^125")));
        }
        Ok(Self { num: n, den: d })
    }

    pub fn integer(n: i64) -> Self {
        Self { num: n as i128, den: 1 }
    }

    pub const ZERO: Self = Self { num: 0, den: 1 };
    pub const HALF: Self = Self { num: 1, den: 2 };
    pub const THIRD: Self = Self { num: 1, den: 3 };
    pub const TWO_THIRDS: Self = Self { num: 2, den: 3 };

    pub fn numerator(&self) -> i128 {
        self.num
    }

    pub fn denominator(&self) -> i128 {
        self.den
    }

    /// Exact conversion of a finite `f64`, if the result fits.
    pub fn from_f64(v: f64) -> Option<Self> {
        let (m, k) = crate::precision::f64_to_dyadic(v)?;
        Self::from_big(&crate::precision::dyadic_to_rational(&m, k)).ok()
    }

    pub fn from_big(q: &BigRational) -> Result<Self> {
        let n = q.numer().to_i128().ok_or_else(|| Error::Overflow("numerator exceeds i128".into()))?;
        let d = q.denom().to_i128().ok_or_else(|| Error::Overflow("denominator exceeds i128".into()))?;
        Self::new(n, d)
    }

    pub fn to_big(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    pub fn to_f64(&self) -> f64 {
        (self.num as f64) / (self.den as f64)
    }

    pub fn is_dyadic(&self) -> bool {
        self.den & (self.den - 1) == 0
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    /// Fractional part in `[0, 1)`.
    pub fn frac(&self) -> Self {
        Self { num: self.num.rem_euclid(self.den), den: self.den }
    }

    pub fn neg(&self) -> Self {
        Self { num: -self.num, den: self.den }
    }

    pub fn abs(&self) -> Self {
        Self { num: self.num.abs(), den: self.den }
    }

    pub fn checked_add(&self, o: &Self) -> Result<Self> {
        let q = self.to_big() + o.to_big();
        Self::from_big(&q)
    }

    pub fn checked_sub(&self, o: &Self) -> Result<Self> {
        self.checked_add(&o.neg())
    }

    /// `self * 2^k` (negative `k` divides).
    pub fn mul_pow2(&self, k: i32) -> Result<Self> {
        let q = self.to_big();
        let q = if k >= 0 {
            q * BigRational::from_integer(BigInt::from(1) << k as usize)
        } else {
            q / BigRational::from_integer(BigInt::from(1) << (-k) as usize)
        };
        Self::from_big(&q)
    }

    /// Distance to the nearest integer, exactly.
    pub fn t0(&self) -> Self {
        let f = self.frac();
        if 2 * f.num <= f.den {
            f
        } else {
            Self { num: f.den - f.num, den: f.den }
        }
    }

    /// Simplest rational (smallest denominator) in the closed interval
    /// `[lo, hi]`, found by walking the Stern-Brocot tree.
    pub fn simplest_between(lo: &Self, hi: &Self) -> Self {
        debug_assert!(lo <= hi);
        let (lo, hi) = (lo.to_big(), hi.to_big());
        let s = simplest_in(&lo, &hi);
        Self::from_big(&s).expect("simplest rational is no larger than the endpoints")
    }
}

fn simplest_in(lo: &BigRational, hi: &BigRational) -> BigRational {
    let fl = lo.floor();
    if &fl == lo {
        return fl;
    }
    if fl.clone() + BigRational::from_integer(1.into()) <= *hi {
        return fl + BigRational::from_integer(1.into());
    }
    // both in (fl, fl + 1): recurse on reciprocals of the fractional parts
    let a = lo - &fl;
    let b = hi - &fl;
    let inner = simplest_in(&b.recip(), &a.recip());
    fl + inner.recip()
}

impl PartialOrd for RationalPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RationalPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_big().cmp(&other.to_big())
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for RationalPoint {
    type Err = Error;

    /// Accepts `a/b`, integers, and plain decimals such as `-0.375`
    /// (read exactly, so `0.1` is `1/10`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a rational number: {s:?}"));
        if let Some((a, b)) = s.split_once('/') {
            let a: i128 = a.trim().parse().map_err(|_| bad())?;
            let b: i128 = b.trim().parse().map_err(|_| bad())?;
            return Self::new(a, b);
        }
        let (mant, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (neg, mant) = match mant.strip_prefix('-') {
            Some(m) => (true, m),
            None => (false, mant.strip_prefix('+').unwrap_or(mant)),
        };
        let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
        if ip.is_empty() && fp.is_empty() {
            return Err(bad());
        }
        if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigInt = format!("{ip}{fp}").parse().map_err(|_| bad())?;
        let scale = exp - fp.len() as i32;
        let ten = BigInt::from(10);
        let q = if scale >= 0 {
            BigRational::from_integer(digits * ten.pow(scale as u32))
        } else {
            BigRational::new(digits, ten.pow((-scale) as u32))
        };
        Self::from_big(&if neg { -q } else { q })
    }
}

impl Serialize for RationalPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RationalPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An argument of `S_p`: an exact rational or an arbitrary finite `f64`
/// (every finite `f64` is dyadic, so its doubling orbit is exact too).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    Rational(RationalPoint),
    Float(f64),
}

impl Point {
    pub fn to_f64(&self) -> f64 {
        match self {
            Point::Rational(r) => r.to_f64(),
            Point::Float(v) => *v,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Point::Rational(_) => true,
            Point::Float(v) => v.is_finite(),
        }
    }
}

impl From<RationalPoint> for Point {
    fn from(r: RationalPoint) -> Self {
        Point::Rational(r)
    }
}

impl From<&RationalPoint> for Point {
    fn from(r: &RationalPoint) -> Self {
        Point::Rational(*r)
    }
}

impl From<f64> for Point {
    fn from(v: f64) -> Self {
        match RationalPoint::from_f64(v) {
            Some(r) => Point::Rational(r),
            None => Point::Float(v),
        }
    }
}

/// `|a - b|` as `f64`.
pub fn gap_f64(a: &RationalPoint, b: &RationalPoint) -> f64 {
    let d = a.to_big() - b.to_big();
    d.abs().to_f64().unwrap_or(f64::INFINITY)
}
