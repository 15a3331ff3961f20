use serde::{Deserialize, Serialize};

use crate::certified::CertifiedValue;
use crate::error::{Error, Result};
use crate::precision::{pow2, PrecisionCtx};
use crate::rational::RationalPoint;
use crate::takagi_core::{eval_sp, PowerParam};

/// Largest scale index; keeps `x0 ± 4^{-k}` inside `i128`.
pub const MAX_K: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DqSide {
    /// `(S(x0) - S(x0 - h)) / h`
    Left,
    /// `(S(x0 + h) - S(x0)) / h`
    Right,
    /// `(S(x0 + h) - S(x0 - h)) / 2h`
    Symmetric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DQScan {
    pub p: f64,
    pub x0: RationalPoint,
    pub side: DqSide,
    /// `k = 1..=k_max`; the step is `h_k = 4^{-k}`.
    pub ks: Vec<u32>,
    pub scales: Vec<f64>,
    pub quotients: Vec<CertifiedValue>,
}

impl DQScan {
    /// Largest `|quotient|` over `k` in `[k_lo, k_hi]`, together with its `k`.
    pub fn max_abs_in(&self, k_lo: u32, k_hi: u32) -> Option<(u32, f64)> {
        self.ks
            .iter()
            .zip(&self.quotients)
            .filter(|(k, _)| (k_lo..=k_hi).contains(*k))
            .map(|(k, q)| (*k, q.value_f64().abs()))
            .fold(None, |acc, (k, v)| match acc {
                Some((_, b)) if b >= v => acc,
                _ => Some((k, v)),
            })
    }
}

/// One-sided (or symmetric) difference quotients of `S_p` at `x0` with
/// steps `4^{-k}`, `k = 1..=k_max`. Each quotient has radius at most
/// `4^{-k_max}`; a precision error means `ctx` is too coarse for that.
pub fn dq_scan(p: &PowerParam, x0: RationalPoint, k_max: u32, side: DqSide, ctx: &PrecisionCtx) -> Result<DQScan> {
    p.require_at_most_one("dq_scan")?;
    if k_max == 0 || k_max > MAX_K {
        return Err(Error::domain(format!("k_max must lie in 1..={MAX_K}, got {k_max}")));
    }
    let target = pow2(-2 * k_max as i32);
    let base = if side == DqSide::Symmetric {
        None
    } else {
        Some(eval_sp(p, x0, target * pow2(-2 * k_max as i32) / 4.0, ctx)?)
    };
    let mut scan = DQScan { p: p.value(), x0, side, ks: vec![], scales: vec![], quotients: vec![] };
    for k in 1..=k_max {
        let h = RationalPoint::new(1, 1i128 << (2 * k))?;
        let tol = target * h.to_f64() / 4.0;
        let at = |y: Result<RationalPoint>| -> Result<CertifiedValue> { eval_sp(p, y?, tol, ctx) };
        let (diff, shift) = match (side, &base) {
            (DqSide::Right, Some(b)) => (at(x0.checked_add(&h))?.sub(b, *ctx), 2 * k as i32),
            (DqSide::Left, Some(b)) => (b.sub(&at(x0.checked_sub(&h))?, *ctx), 2 * k as i32),
            _ => (at(x0.checked_add(&h))?.sub(&at(x0.checked_sub(&h))?, *ctx), 2 * k as i32 - 1),
        };
        scan.ks.push(k);
        scan.scales.push(h.to_f64());
        scan.quotients.push(diff.scale2(shift, *ctx));
    }
    Ok(scan)
}
