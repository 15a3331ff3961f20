use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use takagi::sampling::closed_grid;
use takagi::takagi_core::eval_sp_batch;
use takagi::{CertifiedValue, Error, Point, PowerParam, RationalPoint, Result};

use crate::commands::{ctx, emit, to_json};
use crate::{Common, Format};

const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Serialize)]
struct Sample {
    x: RationalPoint,
    value: CertifiedValue,
}

#[derive(Serialize)]
struct Curve {
    p: f64,
    points: Vec<Sample>,
    markers: Vec<Sample>,
}

fn curve(c: &Common, p: &PowerParam, points: usize) -> Result<Curve> {
    if points < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 points, got {points}")));
    }
    let ctx = ctx(c)?;
    let xs = closed_grid(points);
    let pts: Vec<Point> = xs.iter().map(|x| Point::Rational(*x)).collect();
    let vs = eval_sp_batch(p, &pts, c.tol, &ctx)?;
    let marks = [RationalPoint::THIRD, RationalPoint::TWO_THIRDS];
    let mpts: Vec<Point> = marks.iter().map(|x| Point::Rational(*x)).collect();
    let mv = eval_sp_batch(p, &mpts, c.tol, &ctx)?;
    let zip = |xs: &[RationalPoint], vs: Vec<CertifiedValue>| {
        xs.iter().zip(vs).map(|(x, value)| Sample { x: *x, value }).collect::<Vec<_>>()
    };
    Ok(Curve { p: p.value(), points: zip(&xs, vs), markers: zip(&marks, mv) })
}

fn csv(cv: &Curve) -> String {
    let mut s = String::from("x,value,error_radius\n");
    for pt in &cv.points {
        writeln!(s, "{},{},{:.3e}", pt.x.to_f64(), pt.value.to_decimal(), pt.value.error_radius()).unwrap();
    }
    for m in &cv.markers {
        writeln!(s, "# marker x={} value={} error_radius={:.3e}", m.x, m.value.to_decimal(), m.value.error_radius())
            .unwrap();
    }
    s
}

fn svg(curves: &[Curve]) -> String {
    let (w, h, pad) = (800.0, 450.0, 40.0);
    let ymax = curves.iter().flat_map(|c| c.points.iter().map(|p| p.value.value_f64())).fold(0.0f64, f64::max) * 1.05;
    let ymax = if ymax > 0.0 { ymax } else { 1.0 };
    let sx = |x: f64| pad + x * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - y / ymax * (h - 2.0 * pad);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<path d="M{:.2},{:.2} H{:.2} M{:.2},{:.2} V{:.2}" stroke="black" fill="none"/>"#,
        sx(0.0),
        sy(0.0),
        sx(1.0),
        sx(0.0),
        sy(0.0),
        sy(ymax)
    )
    .unwrap();
    for x in [1.0 / 3.0, 2.0 / 3.0] {
        writeln!(
            s,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#888" stroke-dasharray="4 4"/>"##,
            sx(x),
            sy(0.0),
            sy(ymax)
        )
        .unwrap();
    }
    for (i, cv) in curves.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let pts: Vec<String> =
            cv.points.iter().map(|pt| format!("{:.2},{:.2}", sx(pt.x.to_f64()), sy(pt.value.value_f64()))).collect();
        writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1" points="{}"/>"#, pts.join(" "))
            .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" fill="{colour}">p = {}</text>"#,
            w - pad - 80.0,
            pad + 18.0 * (i as f64 + 1.0),
            cv.p
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// One CSV per exponent. With several exponents `--output` names a
/// directory that receives `S_p<p>.csv` files; on stdout the curves follow
/// each other, each introduced by a `# p = ...` line.
pub fn run(c: &Common, ps: &[PowerParam], points: usize, svg_path: Option<&Path>) -> Result<bool> {
    let curves = ps.iter().map(|p| curve(c, p, points)).collect::<Result<Vec<_>>>()?;
    let io = |path: &Path, e: std::io::Error| Error::Resource(format!("{}: {e}", path.display()));
    if let Some(path) = svg_path {
        std::fs::write(path, svg(&curves)).map_err(|e| io(path, e))?;
    }
    if c.format == Format::Json {
        return emit(c, &to_json(&curves)).map(|_| true);
    }
    match (&c.output, curves.len()) {
        (Some(dir), n) if n > 1 => {
            std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
            for cv in &curves {
                let path = dir.join(format!("S_p{}.csv", cv.p));
                std::fs::write(&path, csv(cv)).map_err(|e| io(&path, e))?;
            }
        }
        (_, 1) => emit(c, &csv(&curves[0]))?,
        _ => {
            let all: String = curves.iter().map(|cv| format!("# p = {}\n{}", cv.p, csv(cv))).collect();
            emit(c, &all)?;
        }
    }
    Ok(true)
}
