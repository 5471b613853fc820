//! SVG output. Tree coordinates are used directly (y flipped so that the
//! picture has the usual orientation); the view box is the bounding box
//! grown by 5% of its larger side.

use std::fmt::Write;

use steiner_core::{EmbeddedTree, PolyPath, PointF64};

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    unit: f64,
}

fn flip(y: f64) -> f64 {
    0.0 - y
}

fn frame(points: &[PointF64]) -> Frame {
    let (mut lx, mut ly, mut hx, mut hy) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lx = lx.min(p.re);
        hx = hx.max(p.re);
        ly = ly.min(flip(p.im));
        hy = hy.max(flip(p.im));
    }
    let side = (hx - lx).max(hy - ly);
    let side = if side > 0.0 { side } else { 1.0 };
    let m = 0.05 * side;
    Frame {
        x0: lx - m,
        y0: ly - m,
        w: hx - lx + 2.0 * m,
        h: hy - ly + 2.0 * m,
        unit: side / 200.0,
    }
}

fn header(out: &mut String, f: &Frame) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}">"#,
        f.x0, f.y0, f.w, f.h
    )
    .unwrap();
}

fn segment(out: &mut String, a: PointF64, b: PointF64, width: f64, extra: &str) {
    writeln!(
        out,
        r#"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-width="{width}"{extra}/>"#,
        a.re,
        flip(a.im),
        b.re,
        flip(b.im)
    )
    .unwrap();
}

fn dot(out: &mut String, p: PointF64, r: f64, fill: &str, width: f64) {
    writeln!(
        out,
        r#"  <circle cx="{}" cy="{}" r="{r}" fill="{fill}" stroke="black" stroke-width="{width}"/>"#,
        p.re,
        flip(p.im)
    )
    .unwrap();
}

/// Edges as segments, terminals as filled dots, Steiner points as hollow dots.
pub fn tree_svg(tree: &EmbeddedTree<f64>) -> String {
    let f = frame(tree.positions());
    let mut out = String::new();
    header(&mut out, &f);
    let topo = tree.topology();
    for (c, p) in topo.edges() {
        segment(&mut out, tree.position(c), tree.position(p), f.unit, "");
    }
    for v in topo.steiner_points() {
        dot(&mut out, tree.position(v), 1.5 * f.unit, "white", 0.6 * f.unit);
    }
    for v in topo.terminals() {
        dot(&mut out, tree.position(v), 2.0 * f.unit, "black", 0.6 * f.unit);
    }
    out.push_str("</svg>\n");
    out
}

/// The path's segments, its vertices, and a dashed chord between the endpoints.
pub fn path_svg(path: &PolyPath<f64>) -> String {
    let f = frame(path.vertices());
    let mut out = String::new();
    header(&mut out, &f);
    let dash = format!(r#" stroke-dasharray="{} {}""#, 3.0 * f.unit, 2.0 * f.unit);
    segment(&mut out, path.start(), path.end(), 0.6 * f.unit, &dash);
    for w in path.vertices().windows(2) {
        segment(&mut out, w[0], w[1], f.unit, "");
    }
    for &v in path.vertices() {
        dot(&mut out, v, 1.2 * f.unit, "white", 0.6 * f.unit);
    }
    for v in [path.start(), path.end()] {
        dot(&mut out, v, 2.0 * f.unit, "black", 0.6 * f.unit);
    }
    out.push_str("</svg>\n");
    out
}
