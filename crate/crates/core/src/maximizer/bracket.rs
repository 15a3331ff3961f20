use std::fmt;

use serde::{Deserialize, Serialize};

use crate::certified::CertifiedValue;
use crate::error::{Error, Result};
use crate::holder_cert::HolderCertificate;
use crate::precision::{round_up, PrecisionCtx, Real};
use crate::rational::RationalPoint;
use crate::takagi_core::{eval_sp, sup_bound, PowerParam};

use super::dn::d_n;
use super::{MaxMethod, MaxReport};

/// Probe points for the sign of `D_n`: 0.01 and 0.1, 0.2, ..., 1.0.
pub const PROBE_S: [f64; 11] = [0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Deepest generation supported; keeps the endpoints inside `i128`.
pub const MAX_GENERATION: u32 = 100;

/// Generation `n` of the nested intervals `[a_n, b_n]` around `1/3`,
/// with midpoint `c_n = q_n / 2^{n+2}`, `q_n = (2^{n+2} + (-1)^{n+1}) / 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bracket {
    pub n: u32,
    pub a: RationalPoint,
    pub b: RationalPoint,
    pub c: RationalPoint,
}

impl Bracket {
    pub fn generation(n: u32) -> Result<Self> {
        if n > MAX_GENERATION {
            return Err(Error::domain(format!("generation must be <= {MAX_GENERATION}, got {n}")));
        }
        let den = 1i128 << (n + 2);
        let sign = if n % 2 == 0 { -1 } else { 1 };
        let q = (den + sign) / 3;
        Ok(Self {
            n,
            a: RationalPoint::new(q - 1, den)?,
            b: RationalPoint::new(q + 1, den)?,
            c: RationalPoint::new(q, den)?,
        })
    }

    pub fn width(&self) -> f64 {
        crate::precision::pow2(-(self.n as i32) - 1)
    }

    pub fn contains(&self, x: &RationalPoint) -> bool {
        self.a <= *x && *x <= self.b
    }

    /// The half the maximiser lies in, given the sign of `D_n`.
    fn descend(&self, positive: bool) -> (RationalPoint, RationalPoint) {
        if positive {
            (self.c, self.b)
        } else {
            (self.a, self.c)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BracketRow {
    pub n: u32,
    pub a: RationalPoint,
    pub b: RationalPoint,
    /// Certified sign of `D_n` on every probe point, `+1` or `-1`.
    pub sign: i8,
}

impl BracketRow {
    pub const CSV_HEADER: &'static str = "n,a,b,width,sign";
}

impl fmt::Display for BracketRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.b.checked_sub(&self.a).map_err(|_| fmt::Error)?;
        write!(f, "{},{},{},{},{}", self.n, self.a, self.b, w, self.sign)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketOutcome {
    pub report: MaxReport,
    pub trace: Vec<BracketRow>,
}

/// Certified sign of `D_n` shared by all probe points.
fn probe_sign(p: &PowerParam, n: u32, ctx: &PrecisionCtx) -> Result<i8> {
    let want: i8 = if n % 2 == 0 { 1 } else { -1 };
    for s in PROBE_S {
        let d = d_n(p, n, s, ctx)?;
        if d.lower() > 0.0 {
            if want < 0 {
                return Err(Error::Consistency(format!("D_{n}({s}) > 0 at p = {p}")));
            }
        } else if d.upper() < 0.0 {
            if want > 0 {
                return Err(Error::Consistency(format!("D_{n}({s}) < 0 at p = {p}")));
            }
        } else {
            return Err(Error::precision(format!("sign of D_{n}({s}) not resolved at p = {p}")));
        }
    }
    Ok(want)
}

/// Runs `depth` halvings of `[0, 1/2]`, keeping the half the sign of `D_n`
/// points to, and checks every generation against [`Bracket::generation`].
/// The trace has `depth + 1` rows. The reported value is an enclosure of
/// `max S_p` from the final bracket and the Hölder modulus.
pub fn bracket_max(p: &PowerParam, depth: u32, ctx: &PrecisionCtx) -> Result<BracketOutcome> {
    p.require_sub_unit("bracket_max")?;
    if depth > MAX_GENERATION {
        return Err(Error::domain(format!("depth must be <= {MAX_GENERATION}, got {depth}")));
    }
    let mut a = RationalPoint::ZERO;
    let mut b = RationalPoint::HALF;
    let mut trace = Vec::with_capacity(depth as usize + 1);
    for n in 0..=depth {
        let br = Bracket::generation(n)?;
        if (br.a, br.b) != (a, b) {
            return Err(Error::Consistency(format!(
                "generation {n}: descent gave [{a}, {b}], formula gives [{}, {}]",
                br.a, br.b
            )));
        }
        let sign = probe_sign(p, n, ctx)?;
        trace.push(BracketRow { n, a, b, sign });
        (a, b) = br.descend(sign > 0);
    }
    let last = Bracket::generation(depth)?;
    let tol = 1e-14_f64.max(ctx.ulp() * 1e4);
    let v = eval_sp(p, last.c, tol, ctx)?;
    // the maximiser is within half a width of c, so max S lies in
    // [S(c), S(c) + C omega(width / 2)], and never above 1/(2^p - 1)
    let half = last.width() / 2.0;
    let cert = HolderCertificate::new(p, ctx)?;
    let lo = v.lower();
    let hi = round_up(v.upper() + cert.modulus_sup_upper(half)).min(round_up(sup_bound(p)));
    let mid = lo + (hi - lo) / 2.0;
    let enclosure = CertifiedValue::new(Real::Native(mid), round_up((hi - mid).max(mid - lo)))?;
    let mirror = RationalPoint::integer(1).checked_sub(&last.c)?;
    let mut report = MaxReport::new(MaxMethod::Bracketing, p, vec![last.c, mirror], half, enclosure);
    report.upper_bound = Some(hi);
    Ok(BracketOutcome { report, trace })
}
