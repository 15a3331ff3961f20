//! Closed forms of `S_p` at rational points.
//!
//! The doubling orbit of a rational is eventually periodic. Summing the
//! preperiod directly and the cycle as a geometric series in `2^{-Lp}`
//! gives `S_p(x)` exactly as a combination of `(rational)^p` terms, valid
//! for every `p > 0` at once.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::certified::CertifiedValue;
use crate::error::{Error, Result};
use crate::precision::{round_up, with_backend, Backend, PrecisionCtx};
use crate::rational::RationalPoint;
use crate::takagi_core::PowerParam;

/// Longest cycle [`orbit`] will walk.
pub const MAX_CYCLE: usize = 1 << 20;
/// Longest orbit [`closed_form_sp`] will turn into terms.
pub const MAX_CLOSED_FORM_LEN: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitDecomposition {
    pub preperiod: Vec<RationalPoint>,
    pub cycle: Vec<RationalPoint>,
    /// `T_0` of `preperiod ++ cycle`, in that order.
    pub t0_values: Vec<RationalPoint>,
}

impl OrbitDecomposition {
    pub fn len(&self) -> usize {
        self.preperiod.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn elements(&self) -> impl Iterator<Item = &RationalPoint> {
        self.preperiod.iter().chain(self.cycle.iter())
    }
}

fn double_mod1(x: &RationalPoint) -> RationalPoint {
    let (n, d) = (x.numerator(), x.denominator());
    let mut r = 2 * n;
    if r >= d {
        r -= d;
    }
    RationalPoint::new(r, d).expect("orbit stays in range")
}

/// Orbit of `frac(x)` under `u -> 2u mod 1`.
///
/// With `den = 2^a m`, `m` odd, the first `a` elements carry a factor 2 in
/// the denominator and cannot recur; from then on doubling is invertible
/// mod `m`, so the orbit is purely periodic.
pub fn orbit(x: &RationalPoint) -> Result<OrbitDecomposition> {
    let f = x.frac();
    let a = f.denominator().trailing_zeros() as usize;
    let mut preperiod = Vec::with_capacity(a);
    let mut cur = f;
    for _ in 0..a {
        preperiod.push(cur);
        cur = double_mod1(&cur);
    }
    let start = cur;
    let mut cycle = vec![start];
    loop {
        cur = double_mod1(&cur);
        if cur == start {
            break;
        }
        if cycle.len() >= MAX_CYCLE {
            return Err(Error::Resource(format!("cycle of {x} is longer than {MAX_CYCLE}")));
        }
        cycle.push(cur);
    }
    let t0_values = preperiod.iter().chain(cycle.iter()).map(|u| u.t0()).collect();
    Ok(OrbitDecomposition { preperiod, cycle, t0_values })
}

/// `coefficient * base^p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerTerm {
    pub coefficient: BigRational,
    pub base: BigRational,
}

/// `S_p(x) = sum(pre) + sum(periodic) / (1 - 2^{-L p})`, `L = cycle_length`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedForm {
    pub preperiodic: Vec<PowerTerm>,
    pub periodic: Vec<PowerTerm>,
    pub cycle_length: usize,
}

fn collect(terms: impl Iterator<Item = BigRational>) -> Vec<PowerTerm> {
    let mut m: BTreeMap<BigRational, BigRational> = BTreeMap::new();
    for b in terms.filter(|b| !b.is_zero()) {
        *m.entry(b).or_insert_with(BigRational::zero) += BigRational::one();
    }
    m.into_iter().rev().map(|(base, coefficient)| PowerTerm { coefficient, base }).collect()
}

pub fn closed_form_sp(x: &RationalPoint) -> Result<ClosedForm> {
    let o = orbit(x)?;
    if o.len() > MAX_CLOSED_FORM_LEN {
        return Err(Error::Resource(format!(
            "orbit of {x} has {} elements (closed forms are limited to {MAX_CLOSED_FORM_LEN})",
            o.len()
        )));
    }
    let base = |n: usize, t: &RationalPoint| t.to_big() / BigRational::from_integer(BigInt::one() << n);
    let a = o.preperiod.len();
    let pre = collect(o.t0_values[..a].iter().enumerate().map(|(n, t)| base(n, t)));
    let per = collect(o.t0_values[a..].iter().enumerate().map(|(j, t)| base(a + j, t)));
    Ok(ClosedForm { preperiodic: pre, periodic: per, cycle_length: o.cycle.len() })
}

/// `q = odd_num/odd_den * 2^k` with the odd parts as `i128`.
fn split_pow2(q: &BigRational) -> Result<(i128, i128, i64)> {
    let mut n = q.numer().clone();
    let mut d = q.denom().clone();
    let zn = n.trailing_zeros().unwrap_or(0);
    let zd = d.trailing_zeros().unwrap_or(0);
    n >>= zn;
    d >>= zd;
    let on = n.to_i128().ok_or_else(|| Error::Overflow("closed-form base numerator".into()))?;
    let od = d.to_i128().ok_or_else(|| Error::Overflow("closed-form base denominator".into()))?;
    Ok((on, od, zn as i64 - zd as i64))
}

struct TermSum<N> {
    value: N,
    err: f64,
}

/// `sum c_i b_i^p` with an absolute error bound.
fn sum_powers<B: Backend>(b: &mut B, terms: &[PowerTerm], p: f64) -> Result<TermSum<B::Num>> {
    let u = b.ulp();
    let pn = b.from_f64(p);
    let mut vals = Vec::with_capacity(terms.len());
    let mut err = 0.0;
    let mut abs = 0.0;
    for t in terms {
        let (on, od, k) = split_pow2(&t.base)?;
        let (mut v, mut e) = if on == od {
            (b.from_f64(1.0), 0.0)
        } else {
            let (r, d) = b.from_ratio(on, od);
            (b.pow(&r, &pn), u + p * d)
        };
        if k != 0 {
            let kp = b.mul(&b.from_f64(k as f64), &pn);
            let s = b.exp2(&kp);
            v = b.mul(&v, &s);
            e += u * (2.0 + 0.7 * (k as f64 * p).abs());
        }
        if !t.coefficient.is_one() {
            let c = t.coefficient.numer().to_i128().filter(|_| t.coefficient.is_integer());
            let c = c.ok_or_else(|| Error::Overflow("closed-form coefficient".into()))?;
            let (cv, ce) = b.from_int(c);
            v = b.mul(&v, &cv);
            e += ce + u;
        }
        let vf = b.to_f64(&v).abs();
        err += vf * e;
        abs += vf;
        vals.push(v);
    }
    let mut acc = b.from_f64(0.0);
    for v in &vals {
        acc = b.add(&acc, v);
    }
    err += vals.len() as f64 * u * abs;
    Ok(TermSum { value: acc, err: err * 1.01 })
}

/// Numeric value of a [`ClosedForm`]; the radius covers rounding only.
pub fn eval_closed_form(cf: &ClosedForm, p: &PowerParam, ctx: &PrecisionCtx) -> Result<CertifiedValue> {
    let pv = p.value();
    with_backend!(*ctx, b => {
        let u = b.ulp();
        let pre = sum_powers(b, &cf.preperiodic, pv)?;
        if cf.periodic.is_empty() {
            return CertifiedValue::new(b.to_real(pre.value), round_up(pre.err));
        }
        let per = sum_powers(b, &cf.periodic, pv)?;
        let lp = cf.cycle_length as f64 * pv;
        let q = b.exp2(&b.from_f64(-lp));
        let one = b.from_f64(1.0);
        let d = b.sub(&one, &q);
        let df = b.to_f64(&d);
        let q_err = b.to_f64(&q) * u * (1.0 + 0.7 * lp) + u * df.abs();
        let e_d = q_err / df;
        if !(df > 0.0) || !(e_d < 0.25) {
            return Err(Error::precision(format!(
                "1 - 2^(-{lp}) cannot be resolved at {} bits",
                ctx.mantissa_bits()
            )));
        }
        let ratio = b.div(&per.value, &d);
        let res = b.add(&pre.value, &ratio);
        let rf = b.to_f64(&ratio).abs();
        let per_rel = per.err / b.to_f64(&per.value).abs();
        let err = pre.err + rf * (per_rel + e_d + u) * (1.0 + 2.0 * e_d) + u * b.to_f64(&res).abs();
        CertifiedValue::new(b.to_real(res), round_up(err * 1.01))
    })
}

fn lcm_all<'a>(it: impl Iterator<Item = &'a BigInt>) -> BigInt {
    it.fold(BigInt::one(), |acc, d| acc.lcm(d))
}

fn fmt_base(q: &BigRational) -> String {
    if q.is_integer() {
        format!("{}^p", q.numer())
    } else {
        format!("({}/{})^p", q.numer(), q.denom())
    }
}

fn fmt_terms(terms: &[PowerTerm], scale: Option<&BigInt>) -> String {
    terms
        .iter()
        .map(|t| {
            let b = match scale {
                Some(s) => &t.base * BigRational::from_integer(s.clone()),
                None => t.base.clone(),
            };
            if t.coefficient.is_one() {
                fmt_base(&b)
            } else {
                format!("{}*{}", t.coefficient, fmt_base(&b))
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

impl ClosedForm {
    /// The periodic part over integer bases, `(sum c_j B_j^p) / (Q^p - R^p)`,
    /// with `Q` the least common multiple of the base denominators and
    /// `2^L`, and `R = Q / 2^L`.
    pub fn periodic_integer_form(&self) -> Option<String> {
        if self.periodic.is_empty() {
            return None;
        }
        let two_l = BigInt::one() << self.cycle_length;
        let q = lcm_all(self.periodic.iter().map(|t| t.base.denom())).lcm(&two_l);
        let r = &q / &two_l;
        Some(format!("({}) / ({}^p - {}^p)", fmt_terms(&self.periodic, Some(&q)), q, r))
    }

    pub fn is_finite_sum(&self) -> bool {
        self.periodic.is_empty()
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.preperiodic.is_empty() {
            parts.push(fmt_terms(&self.preperiodic, None));
        }
        if let Some(p) = self.periodic_integer_form() {
            parts.push(p);
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct WireFrac {
    num: String,
    den: String,
}

#[derive(Serialize, Deserialize)]
struct WireTerm {
    coefficient: WireFrac,
    base: WireFrac,
}

#[derive(Serialize, Deserialize)]
struct WireForm {
    preperiodic: Vec<WireTerm>,
    periodic: Vec<WireTerm>,
    cycle_length: usize,
}

fn to_wire(q: &BigRational) -> WireFrac {
    WireFrac { num: q.numer().to_string(), den: q.denom().to_string() }
}

fn from_wire(w: &WireFrac) -> std::result::Result<BigRational, String> {
    let n: BigInt = w.num.parse().map_err(|e| format!("{e}"))?;
    let d: BigInt = w.den.parse().map_err(|e| format!("{e}"))?;
    if !d.is_positive() {
        return Err("denominator must be positive".into());
    }
    Ok(BigRational::new(n, d))
}

impl Serialize for ClosedForm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let conv = |ts: &[PowerTerm]| {
            ts.iter().map(|t| WireTerm { coefficient: to_wire(&t.coefficient), base: to_wire(&t.base) }).collect()
        };
        WireForm {
            preperiodic: conv(&self.preperiodic),
            periodic: conv(&self.periodic),
            cycle_length: self.cycle_length,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClosedForm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = WireForm::deserialize(d)?;
        let conv = |ts: &[WireTerm]| -> std::result::Result<Vec<PowerTerm>, D::Error> {
            ts.iter()
                .map(|t| {
                    Ok(PowerTerm {
                        coefficient: from_wire(&t.coefficient).map_err(D::Error::custom)?,
                        base: from_wire(&t.base).map_err(D::Error::custom)?,
                    })
                })
                .collect()
        };
        Ok(ClosedForm {
            preperiodic: conv(&w.preperiodic)?,
            periodic: conv(&w.periodic)?,
            cycle_length: w.cycle_length,
        })
    }
}
