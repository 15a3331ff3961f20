//! Branch-and-bound over dyadic intervals of `[0, 1/2]` (enough by the
//! symmetry `S_p(x) = S_p(1 - x)`), processed one level at a time.
//!
//! On a level-`j` interval `I` (width `2^{-j}`) two upper bounds are used:
//!
//! * Hölder: `S_p(c) + C sup_{d <= h} d^p log2(1/d)` with `c` the centre
//!   and `h = 2^{-j-1}`;
//! * structural: for `n < j` each `T_0(2^n x)` is linear on `I`, so the head
//!   `g(x) = sum_{n<j} (T_0(2^n x)/2^n)^p` is concave there and
//!   `g <= g(c) + |g'(c)| h`. The tail is `2^{-jp} S_p(2^j x) <= 2^{-jp} M`.
//!
//! `M` itself is bounded by `m_hat`, the largest over live intervals of
//! `min(A / (1 - 2^{-jp}), B)`, where `A` is the head bound and `B` the
//! Hölder bound: the interval holding a maximiser is never pruned and
//! satisfies `M <= A + 2^{-jp} M`.

use crate::certified::CertifiedValue;
use crate::error::{Error, Result};
use crate::holder_cert::HolderCertificate;
use crate::par::{self, Exec};
use crate::precision::{pow2, round_up, PrecisionCtx};
use crate::rational::RationalPoint;
use crate::takagi_core::{eval_sp, partial_sum, sup_bound, PowerParam};

use super::{MaxMethod, MaxReport};

/// Deepest level; keeps every centre exact in an `f64`.
const MAX_LEVEL: u32 = 50;

#[derive(Clone, Copy, Debug)]
pub struct BbOptions {
    /// Maximum number of interval evaluations.
    pub node_budget: u64,
    /// Prune with the Hölder bound alone and use centre values as the only
    /// incumbents.
    pub holder_only: bool,
    pub exec: Exec,
}

impl Default for BbOptions {
    fn default() -> Self {
        Self { node_budget: 1_000_000, holder_only: false, exec: Exec::default() }
    }
}

impl BbOptions {
    pub fn holder_only() -> Self {
        Self { holder_only: true, ..Self::default() }
    }
}

struct NodeEval {
    holder_ub: f64,
    head_ub: f64,
    /// Best certified point value seen inside the interval.
    best: (RationalPoint, CertifiedValue),
}

/// Upper bound on `|g'(c)|` for the level-`j` head at the dyadic centre `c`.
fn head_slope_upper(p: f64, c: &RationalPoint, j: u32) -> f64 {
    let den = c.denominator();
    let mut r = c.numerator();
    let (mut sum, mut abs) = (0.0f64, 0.0f64);
    for n in 0..j {
        let sigma = if 2 * r < den { 1.0 } else { -1.0 };
        // exact: both sides are dyadic with < 53 significant bits
        let y = (r.min(den - r) as f64 / den as f64) * pow2(-(n as i32));
        let a = p * y.powf(p - 1.0);
        sum += sigma * a;
        abs += a;
        r = 2 * r % den;
    }
    round_up(sum.abs() + (4 + j) as f64 * f64::EPSILON * abs * 1.1)
}

fn eval_node(
    p: &PowerParam,
    cert: &HolderCertificate,
    j: u32,
    i: i128,
    tol: f64,
    ctx: &PrecisionCtx,
    holder_only: bool,
) -> Result<NodeEval> {
    let c = RationalPoint::new(2 * i + 1, 1 << (j + 1))?;
    let h = pow2(-(j as i32) - 1);
    let center = eval_sp(p, c, tol, ctx)?;
    let holder_ub = round_up(center.upper() + cert.modulus_sup_upper(h));
    if holder_only {
        return Ok(NodeEval { holder_ub, head_ub: f64::INFINITY, best: (c, center) });
    }
    let head = partial_sum(p, c, j as u64, ctx)?;
    let head_ub = round_up(head.upper() + head_slope_upper(p.value(), &c, j) * h);
    let lo = RationalPoint::new(i, 1 << j)?;
    let hi = RationalPoint::new(i + 1, 1 << j)?;
    let q = RationalPoint::simplest_between(&lo, &hi);
    let mut best = (c, center);
    if q != c {
        let v = eval_sp(p, q, tol, ctx)?;
        if v.lower() > best.1.lower() {
            best = (q, v);
        }
    }
    Ok(NodeEval { holder_ub, head_ub, best })
}

/// Maximal runs of consecutive indices, as `[lo, hi]` endpoints at level `j`.
fn components(j: u32, live: &[i128]) -> Result<Vec<(RationalPoint, RationalPoint)>> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < live.len() {
        let start = live[k];
        while k + 1 < live.len() && live[k + 1] == live[k] + 1 {
            k += 1;
        }
        out.push((RationalPoint::new(start, 1 << j)?, RationalPoint::new(live[k] + 1, 1 << j)?));
        k += 1;
    }
    Ok(out)
}

fn build_report(
    p: &PowerParam,
    comps: &[(RationalPoint, RationalPoint)],
    tol: f64,
    ctx: &PrecisionCtx,
    upper: f64,
    nodes: u64,
) -> Result<MaxReport> {
    let one = RationalPoint::integer(1);
    let mut argmax = Vec::new();
    let mut value: Option<CertifiedValue> = None;
    let mut width: f64 = 0.0;
    for (lo, hi) in comps {
        let q = RationalPoint::simplest_between(lo, hi);
        let v = eval_sp(p, q, tol, ctx)?;
        if value.as_ref().map_or(true, |b| v.lower() > b.lower()) {
            value = Some(v);
        }
        width = width.max(hi.to_f64() - lo.to_f64());
        argmax.push(q);
        argmax.push(one.checked_sub(&q)?);
    }
    argmax.sort();
    argmax.dedup();
    let value = value.ok_or_else(|| Error::Consistency("branch-and-bound pruned every interval".into()))?;
    let mut r = MaxReport::new(MaxMethod::HolderBB, p, argmax, width, value);
    r.upper_bound = Some(upper);
    r.nodes = Some(nodes);
    Ok(r)
}

/// Locates the maximisers of `S_p`, `0 < p < 1`, to within `x_tol`.
///
/// Every maximiser lies within `argmax_tolerance <= x_tol` of a reported
/// point; `upper_bound` is a certified bound on `max S_p` and `max_value`
/// the certified value at the best reported point.
pub fn holder_bb_max(
    p: &PowerParam,
    cert: &HolderCertificate,
    x_tol: f64,
    ctx: &PrecisionCtx,
    opts: &BbOptions,
) -> Result<MaxReport> {
    p.require_sub_unit("holder_bb_max")?;
    if cert.p != *p {
        return Err(Error::invalid("certificate was built for a different p"));
    }
    if !(x_tol >= pow2(-(MAX_LEVEL as i32)) && x_tol <= 0.5) {
        return Err(Error::domain(format!("x_tol must lie in [2^-{MAX_LEVEL}, 1/2], got {x_tol}")));
    }
    let pv = p.value();
    let tol = (ctx.ulp() * 1e5).max(1e-24);
    let sup = round_up(sup_bound(p));
    let mut upper = sup;
    let mut lb = f64::NEG_INFINITY;
    let mut nodes = 0u64;
    let mut j = 1u32;
    let mut live: Vec<i128> = vec![0];
    loop {
        if nodes + live.len() as u64 > opts.node_budget {
            let best = build_report(p, &components(j, &live)?, tol, ctx, upper, nodes)?;
            return Err(Error::BudgetExhausted { budget: opts.node_budget, best: Box::new(best) });
        }
        let evals = par::try_map(opts.exec, &live, |&i| eval_node(p, cert, j, i, tol, ctx, opts.holder_only))?;
        nodes += live.len() as u64;
        for e in &evals {
            lb = lb.max(e.best.1.lower());
        }
        let w = pow2(-(j as i32)).powf(pv) * (1.0 + 4.0 * f64::EPSILON);
        let mut m_hat: f64 = 0.0;
        for e in &evals {
            let own = if opts.holder_only { e.holder_ub } else { e.holder_ub.min(round_up(e.head_ub / (1.0 - w))) };
            m_hat = m_hat.max(own);
        }
        upper = upper.min(m_hat);
        let next: Vec<i128> = live
            .iter()
            .zip(&evals)
            .filter(|(_, e)| {
                let ub = if opts.holder_only { e.holder_ub } else { e.holder_ub.min(round_up(e.head_ub + w * upper)) };
                ub >= lb
            })
            .map(|(&i, _)| i)
            .collect();
        let comps = components(j, &next)?;
        if comps.is_empty() {
            return Err(Error::Consistency(format!("every interval pruned at level {j}")));
        }
        // once localised, keep refining while a second component survives
        // and there is room to: deeper levels usually prune it
        let localised = comps.iter().all(|(a, b)| b.to_f64() - a.to_f64() <= x_tol);
        let room = j < MAX_LEVEL && nodes + 2 * next.len() as u64 <= opts.node_budget;
        if localised && (comps.len() == 1 || !room) {
            return build_report(p, &comps, tol, ctx, upper, nodes);
        }
        if j == MAX_LEVEL {
            return Err(Error::precision(format!("no localisation to {x_tol} by level {MAX_LEVEL}")));
        }
        live = next.iter().flat_map(|&i| [2 * i, 2 * i + 1]).collect();
        j += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maximizer::closed_form_max;

    fn run(p: f64, opts: &BbOptions) -> Result<MaxReport> {
        let p = PowerParam::new(p).unwrap();
        let ctx = PrecisionCtx::native();
        let cert = HolderCertificate::new(&p, &ctx).unwrap();
        holder_bb_max(&p, &cert, 1e-6, &ctx, opts)
    }

    #[test]
    fn finds_one_third() {
        let ctx = PrecisionCtx::native();
        for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let r = run(p, &BbOptions::default()).unwrap();
            assert!(r.distance_to(1.0 / 3.0) <= 1e-6, "p={p}: {:?}", r.argmax);
            assert!(r.distance_to(2.0 / 3.0) <= 1e-6);
            assert!(r.argmax_tolerance <= 1e-6);
            let cf = closed_form_max(&PowerParam::new(p).unwrap(), &ctx).unwrap().max_value;
            assert!((r.max_value.value_f64() - cf.value_f64()).abs() < 1e-8);
            assert!(r.upper_bound.unwrap() >= cf.lower());
            assert!(r.nodes.unwrap() < 1_000_000);
        }
    }

    #[test]
    fn holder_only_at_large_p() {
        let r = run(0.9, &BbOptions::holder_only()).unwrap();
        assert!(r.distance_to(1.0 / 3.0) <= 1e-6);
    }

    #[test]
    fn budget_exhaustion_carries_best() {
        let opts = BbOptions { node_budget: 10, ..BbOptions::default() };
        match run(0.5, &opts) {
            Err(Error::BudgetExhausted { budget, best }) => {
                assert_eq!(budget, 10);
                assert!(best.nodes.unwrap() <= 10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn same_answer_both_executors() {
        let a = run(0.4, &BbOptions { exec: Exec::Sequential, ..BbOptions::default() }).unwrap();
        let b = run(0.4, &BbOptions { exec: Exec::Parallel, ..BbOptions::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn slope_bound_matches_finite_difference() {
        let p = 0.5;
        let c = RationalPoint::new(11, 64).unwrap();
        let s = head_slope_upper(p, &c, 5);
        let g = |x: f64| {
            (0..5)
                .map(|n| ((2f64.powi(n) * x).fract().min(1.0 - (2f64.powi(n) * x).fract()) / 2f64.powi(n)).powf(p))
                .sum::<f64>()
        };
        let x = c.to_f64();
        let fd = (g(x + 1e-7) - g(x - 1e-7)) / 2e-7;
        assert!((s - fd.abs()).abs() < 1e-4, "{s} vs {fd}");
    }
}
