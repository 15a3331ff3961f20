//! Reproducible sample sets. Every generator is a pure function of its
//! arguments (ChaCha8 seeded from `seed`), and every point is an exact
//! rational so that `q - x`, `x + 1` and `2^m x` stay exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rational::RationalPoint;

pub const DEFAULT_SEED: u64 = 42;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// `i / n` for `i = 0..n`.
pub fn uniform_grid(n: usize) -> Vec<RationalPoint> {
    (0..n).map(|i| RationalPoint::new(i as i128, n as i128).expect("grid point")).collect()
}

/// `i / (n - 1)` for `i = 0..n`, i.e. both endpoints of `[0, 1]` included.
pub fn closed_grid(n: usize) -> Vec<RationalPoint> {
    match n {
        0 => vec![],
        1 => vec![RationalPoint::ZERO],
        _ => (0..n).map(|i| RationalPoint::new(i as i128, (n - 1) as i128).expect("grid point")).collect(),
    }
}

fn random_unit(r: &mut ChaCha8Rng, i: usize) -> RationalPoint {
    if i % 2 == 0 {
        // f64-like dyadic point: terminating orbit
        RationalPoint::new(r.gen_range(0..1i128 << 53), 1 << 53).unwrap()
    } else {
        // generic rational: eventually periodic orbit
        let d: i128 = r.gen_range(3..=1 << 20);
        RationalPoint::new(r.gen_range(0..d), d).unwrap()
    }
}

/// Random exact rationals in `[0, 1)`, alternating dyadic and non-dyadic.
pub fn random_points(n: usize, seed: u64) -> Vec<RationalPoint> {
    let mut r = rng(seed, 1);
    (0..n).map(|i| random_unit(&mut r, i)).collect()
}

/// Random exact rationals in `[lo, hi)`.
pub fn random_points_in(n: usize, seed: u64, lo: i64, hi: i64) -> Vec<RationalPoint> {
    assert!(lo < hi);
    let mut r = rng(seed, 2);
    (0..n)
        .map(|i| {
            let k = RationalPoint::integer(r.gen_range(lo..hi));
            random_unit(&mut r, i).checked_add(&k).unwrap()
        })
        .collect()
}

/// Half uniform grid, half random points in `[0, 1)`.
pub fn default_points(n: usize, seed: u64) -> Vec<RationalPoint> {
    let mut v = uniform_grid(n / 2);
    v.extend(random_points(n - n / 2, seed));
    v
}

/// Pairs `(x, y)` with `|x - y| = h`, `log2(1/h)` uniform on
/// `[1, max_log2]`, `x` random in `[0, 1)`. `h` is an exact dyadic.
pub fn log_uniform_pairs(n: usize, seed: u64, max_log2: f64) -> Vec<(RationalPoint, RationalPoint)> {
    assert!(max_log2 >= 1.0 && max_log2 <= 60.0);
    let mut r = rng(seed, 3);
    (0..n)
        .map(|i| {
            let x = random_unit(&mut r, i);
            let e: f64 = r.gen_range(1.0..=max_log2);
            let h = RationalPoint::from_f64((-e).exp2()).unwrap();
            let y = if r.gen_bool(0.5) { x.checked_add(&h) } else { x.checked_sub(&h) }.unwrap();
            (x, y)
        })
        .collect()
}

/// One random input for the `T_0` / power inequalities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaSample {
    pub x: f64,
    pub y: f64,
    pub a: f64,
    pub b: f64,
}

/// `x, y` uniform on `[-8, 8]` (every tenth pair close together), `a, b`
/// uniform on `[0, 4]`.
pub fn lemma_samples(n: usize, seed: u64) -> Vec<LemmaSample> {
    let mut r = rng(seed, 4);
    (0..n)
        .map(|i| {
            let x: f64 = r.gen_range(-8.0..8.0);
            let y = if i % 10 == 0 { x + r.gen_range(-1e-3..1e-3) } else { r.gen_range(-8.0..8.0) };
            LemmaSample { x, y, a: r.gen_range(0.0..4.0), b: r.gen_range(0.0..4.0) }
        })
        .collect()
}

/// Input of `(a+s)^p - (a-s)^p > (b+s)^p - (b-s)^p`, `0 < s <= a < b`, `0 < p < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SabSample {
    pub a: f64,
    pub b: f64,
    pub s: f64,
    pub p: f64,
}

/// `a` uniform on `(0, 8]`, `b - a` on `(0, 8]`, `s / a` on `(0, 1]` and
/// `p` on `(0, 1)`; every tenth sample has `b` within `1e-3` of `a`.
pub fn sab_samples(n: usize, seed: u64) -> Vec<SabSample> {
    let mut r = rng(seed, 6);
    (0..n)
        .map(|i| {
            let a = 8.0 - r.gen_range(0.0..8.0);
            let gap = if i % 10 == 0 { 1e-3 - r.gen_range(0.0..1e-3) } else { 8.0 - r.gen_range(0.0..8.0) };
            let s = a * (1.0 - r.gen_range(0.0..1.0));
            let p = r.gen_range(0.0..1.0_f64).max(1e-3);
            SabSample { a, b: a + gap, s, p }
        })
        .collect()
}

/// `n` exponents uniform on `(0, 1]`.
pub fn random_exponents(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed, 5);
    (0..n).map(|_| 1.0 - r.gen_range(0.0..1.0)).collect()
}
