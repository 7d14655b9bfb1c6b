//! Grid, contour and sweep output: CSV, JSON and SVG.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use vmi_core::contour::{Contour, SliceGrid};
use vmi_core::joint::{lower_set_vertices_binary, to_stp};
use vmi_core::optimizer::Sweep;
use vmi_core::{Error, JointDistribution, Scalar};

/// `s,t,value` rows in row-major order (`s` outer). Values carry 17
/// significant digits, so parsing the file back gives identical bits.
pub fn grid_csv(grid: &SliceGrid) -> String {
    let mut out = String::from("s,t,value\n");
    for i in 0..grid.n {
        for j in 0..grid.n {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", grid.coord(i), grid.coord(j), grid.values[i][j]);
        }
    }
    out
}

/// Inverse of [`grid_csv`]. The slice height and label are not stored in the
/// CSV and must be supplied.
pub fn parse_grid_csv(text: &str, p0: f64, label: &str) -> Result<SliceGrid, Error> {
    let mut vals = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if k == 0 {
            if line.trim() != "s,t,value" {
                return Err(Error::Parse("expected header s,t,value".into()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected three fields", k + 1)));
        }
        let v = f[2].trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", k + 1)))?;
        vals.push(v);
    }
    let n = (vals.len() as f64).sqrt().round() as usize;
    if n < 2 || n * n != vals.len() {
        return Err(Error::Parse(format!("{} values do not form a square grid", vals.len())));
    }
    let values = vals.chunks(n).map(<[f64]>::to_vec).collect();
    Ok(SliceGrid { p0, n, values, label: label.into() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridJson {
    pub label: String,
    pub p0: f64,
    pub n: usize,
    pub values: Vec<Vec<f64>>,
}

impl From<&SliceGrid> for GridJson {
    fn from(g: &SliceGrid) -> Self {
        GridJson { label: g.label.clone(), p0: g.p0, n: g.n, values: g.values.clone() }
    }
}

impl From<GridJson> for SliceGrid {
    fn from(g: GridJson) -> Self {
        SliceGrid { p0: g.p0, n: g.n, values: g.values, label: g.label }
    }
}

pub fn grid_json(grid: &SliceGrid) -> String {
    serde_json::to_string_pretty(&GridJson::from(grid)).expect("grid serializes")
}

/// A closed polygon drawn over the plot, in `(s, t)` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Overlay {
    pub name: String,
    pub vertices: Vec<(f64, f64)>,
    pub color: String,
}

/// The lower set of a binary joint within its slice: the parallelogram with
/// corners `(0,0)`, `(s,t)`, `(1,1)`, `(1−s,1−t)`.
pub fn lower_set_overlay<S: Scalar>(u: &JointDistribution<S>, color: &str) -> Result<Overlay, Error> {
    let v = lower_set_vertices_binary(u)?;
    let mut vertices = Vec::with_capacity(4);
    for k in [3, 0, 2, 1] {
        let (c, _) = to_stp(&v[k])?;
        vertices.push((c.s.to_f64(), c.t.to_f64()));
    }
    Ok(Overlay { name: "lower set".into(), vertices, color: color.into() })
}

const SIZE: f64 = 400.0;
const MARGIN: f64 = 40.0;

fn px(s: f64, t: f64) -> (f64, f64) {
    (MARGIN + s * SIZE, MARGIN + (1.0 - t) * SIZE)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Grey-scale cell colour for `x` in `[lo, hi]`.
fn shade(x: f64, lo: f64, hi: f64) -> String {
    let f = if hi > lo { ((x - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    let g = (255.0 - 175.0 * f).round() as u8;
    format!("#{g:02x}{g:02x}{g:02x}")
}

/// Contour plot on the unit `(s, t)` square, optionally over a heat map of the
/// grid it came from.
pub fn contour_svg(grid: Option<&SliceGrid>, contours: &[Contour], overlays: &[Overlay], title: &str) -> String {
    let w = SIZE + 2.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{w}" viewBox="0 0 {w} {w}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, r##"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="#ffffff" stroke="#000000"/>"##);
    if let Some(g) = grid {
        let (lo, hi) = (g.min(), g.max());
        let h = g.step() * SIZE;
        let _ = writeln!(out, r#"<g id="heatmap" shape-rendering="crispEdges">"#);
        for i in 0..g.n {
            for j in 0..g.n {
                let (x, y) = px(g.coord(i), g.coord(j));
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.3}" y="{:.3}" width="{h:.3}" height="{h:.3}" fill="{}"/>"#,
                    x - h / 2.0,
                    y - h / 2.0,
                    shade(g.values[i][j], lo, hi)
                );
            }
        }
        out.push_str("</g>\n");
    }
    for c in contours {
        let _ = writeln!(out, r##"<g class="contour" data-level="{:e}" fill="none" stroke="#1f4e9c" stroke-width="1.2">"##, c.level);
        for line in &c.lines {
            if line.points.is_empty() {
                continue;
            }
            let mut d = String::new();
            for (k, &(s, t)) in line.points.iter().enumerate() {
                let (x, y) = px(s, t);
                let _ = write!(d, "{}{x:.3} {y:.3} ", if k == 0 { "M" } else { "L" });
            }
            if line.closed {
                d.push('Z');
            }
            let _ = writeln!(out, r#"<path d="{}"/>"#, d.trim_end());
        }
        out.push_str("</g>\n");
    }
    for o in overlays {
        let pts: Vec<String> = o
            .vertices
            .iter()
            .map(|&(s, t)| {
                let (x, y) = px(s, t);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polygon class="overlay" points="{}" fill="{}" fill-opacity="0.15" stroke="{}" stroke-dasharray="4 3"><title>{}</title></polygon>"#,
            pts.join(" "),
            escape(&o.color),
            escape(&o.color),
            escape(&o.name)
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">s</text>"#, MARGIN + SIZE / 2.0, w - 10.0);
    let _ = writeln!(out, r#"<text x="12" y="{}" font-size="12" text-anchor="middle">t</text>"#, MARGIN + SIZE / 2.0);
    out.push_str("</svg>\n");
    out
}

pub fn sweep_csv(sweep: &Sweep) -> String {
    let mut out = String::from("alpha,T,vmi_at_ustar,eq_a,eq_b,requester_utility\n");
    for r in &sweep.rows {
        let _ = writeln!(out, "{},{},{:.12},{},{},{:.12}", r.alpha, r.tasks, r.vmi_at_ustar, r.eq_a, r.eq_b, r.requester_utility);
    }
    out
}
