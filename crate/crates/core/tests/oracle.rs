//! Library values against the 512-bit mpmath tables in `oracle/`.

use takagi::exact_rational::{closed_form_sp, eval_closed_form};
use takagi::holder_cert::constant_c;
use takagi::maximizer::{d_n, dq_scan, f_n, DqSide};
use takagi::{eval_sp, tail_bound, PowerParam, PrecisionCtx, RationalPoint};

const TABLE: &str = include_str!("oracle/oracle_values.txt");

fn pp(p: f64) -> PowerParam {
    PowerParam::new(p).unwrap()
}

fn value_of(prefix: &str) -> f64 {
    let line = TABLE.lines().find(|l| l.starts_with(prefix)).unwrap_or_else(|| panic!("no line {prefix}"));
    line.rsplit('=').next().unwrap().trim().parse().unwrap()
}

fn close(got: f64, radius: f64, want: f64) -> bool {
    (got - want).abs() <= radius + 4.0 * f64::EPSILON * want.abs()
}

#[test]
fn series_values() {
    let ctx = PrecisionCtx::default();
    let v = eval_sp(&pp(0.4), RationalPoint::new(37, 100).unwrap(), 1e-15, &ctx).unwrap();
    assert!(close(v.value_f64(), v.f64_radius(), value_of("S_0.4(37/100)")));
    assert!((tail_bound(&pp(0.5), 20) - value_of("tail(p=0.5,N=20)")).abs() < 1e-14);
    let x = RationalPoint::new(2, 5).unwrap();
    let cf = closed_form_sp(&x).unwrap();
    for p in ["0.2", "0.4", "0.7", "1"] {
        let want = value_of(&format!("S_{p}(2/5) 2000"));
        let p = pp(p.parse().unwrap());
        let a = eval_sp(&p, x, 1e-15, &ctx).unwrap();
        let b = eval_closed_form(&cf, &p, &ctx).unwrap();
        assert!(close(a.value_f64(), a.f64_radius(), want));
        assert!(close(b.value_f64(), b.f64_radius(), want));
    }
}

#[test]
fn holder_constants() {
    for line in TABLE.lines().filter(|l| l.starts_with("C(")) {
        let p: f64 = line[2..line.find(')').unwrap()].parse().unwrap();
        let c = constant_c(&pp(p), &PrecisionCtx::new(256).unwrap()).unwrap();
        assert!(close(c.value_f64(), c.f64_radius(), value_of(&format!("C({p})"))), "{line}");
    }
}

#[test]
fn sign_sums() {
    let ctx = PrecisionCtx::default();
    let d = d_n(&pp(0.3), 6, 0.37, &ctx).unwrap();
    assert!(close(d.value_f64(), d.f64_radius(), value_of("d_6(p=0.3,s=0.37)")));
    let d = d_n(&pp(0.4), 3, 0.5, &ctx).unwrap();
    assert!(close(d.value_f64(), d.f64_radius(), value_of("d_3(p=0.4,s=0.5)")));
    let f = f_n(&pp(0.4), 3, 0.5, &ctx).unwrap();
    assert!(close(f.value_f64(), f.f64_radius(), value_of("f_3(p=0.4,s=0.5)")));
}

/// `(p, x0) -> [(k, left, right)]`
fn dq_tables() -> Vec<(f64, RationalPoint, Vec<(u32, f64, f64)>)> {
    let mut out: Vec<(f64, RationalPoint, Vec<(u32, f64, f64)>)> = Vec::new();
    for line in TABLE.lines() {
        if let Some(rest) = line.strip_prefix("dq p=") {
            let (p, x0) = rest.split_once(" x0=").unwrap();
            out.push((p.parse().unwrap(), x0.parse().unwrap(), Vec::new()));
        } else if let Some(rest) = line.trim_start().strip_prefix("k=") {
            let mut it = rest.split_whitespace();
            let k = it.next().unwrap().parse().unwrap();
            let l = it.next().unwrap().trim_start_matches("left=").parse().unwrap();
            let r = it.next().unwrap().trim_start_matches("right=").parse().unwrap();
            out.last_mut().unwrap().2.push((k, l, r));
        }
    }
    out
}

#[test]
fn difference_quotients() {
    let ctx = PrecisionCtx::new(256).unwrap();
    let tables = dq_tables();
    assert_eq!(tables.len(), 6);
    for (p, x0, rows) in tables {
        let l = dq_scan(&pp(p), x0, 18, DqSide::Left, &ctx).unwrap();
        let r = dq_scan(&pp(p), x0, 18, DqSide::Right, &ctx).unwrap();
        assert_eq!(rows.len(), 18);
        for (i, (k, lw, rw)) in rows.into_iter().enumerate() {
            assert_eq!(l.ks[i], k);
            // table has 20 significant digits
            let (a, b) = (&l.quotients[i], &r.quotients[i]);
            assert!((a.value_f64() - lw).abs() <= a.f64_radius() + 1e-15 * lw.abs(), "p={p} x0={x0} k={k}");
            assert!((b.value_f64() - rw).abs() <= b.f64_radius() + 1e-15 * rw.abs(), "p={p} x0={x0} k={k}");
        }
    }
}
