//! Global maximum of `S_p` for `0 < p < 1`, located three independent ways:
//! the closed form at `1/3`, the nested-interval bracketing driven by the
//! sign of `D_n`, and a branch-and-bound search certified by the Hölder
//! modulus. Also difference-quotient scans at the maximisers.

mod bnb;
mod bracket;
mod dn;
mod dq;

pub use crate::sampling::SabSample;
pub use bnb::{holder_bb_max, BbOptions};
pub use bracket::{bracket_max, Bracket, BracketOutcome, BracketRow, PROBE_S};
pub use dn::{d_n, f_n, scaled_d_n, verify_dn_parity, verify_lemma_sab, verify_scaling_identity};
pub use dq::{dq_scan, DQScan, DqSide};

use serde::{Deserialize, Serialize};

use crate::certified::CertifiedValue;
use crate::error::Result;
use crate::precision::{round_up, with_backend, Backend, PrecisionCtx};
use crate::rational::RationalPoint;
use crate::takagi_core::PowerParam;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxMethod {
    ClosedForm,
    Bracketing,
    HolderBB,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxReport {
    pub method: MaxMethod,
    pub p: f64,
    /// Exact representatives of the maximisers found.
    pub argmax: Vec<RationalPoint>,
    pub argmax_points: Vec<f64>,
    /// Each true maximiser lies within this distance of a reported point.
    pub argmax_tolerance: f64,
    pub max_value: CertifiedValue,
    /// Certified upper bound on `max S_p` where the method produces one.
    pub upper_bound: Option<f64>,
    /// Search nodes evaluated (branch-and-bound only).
    pub nodes: Option<u64>,
}

impl MaxReport {
    pub(crate) fn new(
        method: MaxMethod,
        p: &PowerParam,
        argmax: Vec<RationalPoint>,
        argmax_tolerance: f64,
        max_value: CertifiedValue,
    ) -> Self {
        let argmax_points = argmax.iter().map(|x| x.to_f64()).collect();
        Self {
            method,
            p: p.value(),
            argmax,
            argmax_points,
            argmax_tolerance,
            max_value,
            upper_bound: None,
            nodes: None,
        }
    }

    /// Interval certified to contain `max S_p`: from the value found up to
    /// the upper bound when there is one.
    pub fn value_interval(&self) -> (f64, f64) {
        (self.max_value.lower(), self.upper_bound.unwrap_or(self.max_value.upper()))
    }

    /// Each maximiser of either report lies within the summed tolerances of
    /// one of the other, and the value intervals overlap.
    pub fn agrees_with(&self, other: &MaxReport) -> bool {
        let tol = self.argmax_tolerance + other.argmax_tolerance + 4.0 * f64::EPSILON;
        let near = |a: &MaxReport, b: &MaxReport| a.argmax_points.iter().all(|x| b.distance_to(*x) <= tol);
        let (a0, a1) = self.value_interval();
        let (b0, b1) = other.value_interval();
        near(self, other) && near(other, self) && a0 <= b1 && b0 <= a1
    }

    /// Distance from `x` to the nearest reported maximiser.
    pub fn distance_to(&self, x: f64) -> f64 {
        self.argmax_points.iter().map(|a| (a - x).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// `2^p / (6^p - 3^p)`, evaluated literally.
pub fn max_value_formula(p: &PowerParam, ctx: &PrecisionCtx) -> Result<CertifiedValue> {
    let pv = p.value();
    with_backend!(*ctx, b => {
        let u = b.ulp();
        let pn = b.from_f64(pv);
        let num = b.exp2(&pn);
        let six = b.pow(&b.from_f64(6.0), &pn);
        let three = b.pow(&b.from_f64(3.0), &pn);
        let den = b.sub(&six, &three);
        let df = b.to_f64(&den);
        let rel_den = u * (b.to_f64(&six) + b.to_f64(&three) + df) / df;
        let v = b.div(&num, &den);
        let err = b.to_f64(&v).abs() * (2.0 * u + rel_den) * 1.01;
        CertifiedValue::new(b.to_real(v), round_up(err))
    })
}

/// Maximisers `{1/3, 2/3}` and the value `2^p / (6^p - 3^p)`.
pub fn closed_form_max(p: &PowerParam, ctx: &PrecisionCtx) -> Result<MaxReport> {
    p.require_sub_unit("closed_form_max")?;
    let v = max_value_formula(p, ctx)?;
    Ok(MaxReport::new(MaxMethod::ClosedForm, p, vec![RationalPoint::THIRD, RationalPoint::TWO_THIRDS], 0.0, v))
}
