//! Binary slices `p = p0` of a measure or density, sampled on the `(s, t)`
//! square, and contour extraction by marching squares.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::joint::{from_stp, StpCoords};
use crate::measures::MeasureSpec;
use crate::vmi::DensitySpec;

/// `values[i][j]` is sampled at `s = i / (n−1)`, `t = j / (n−1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceGrid {
    pub p0: f64,
    pub n: usize,
    pub values: Vec<Vec<f64>>,
    /// What was sampled, e.g. `"DMI"` or `"density:Mountain"`.
    pub label: String,
}

impl SliceGrid {
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 / (self.n - 1) as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cell width `1 / (n−1)`.
    pub fn step(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }
}

fn check(p0: f64, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: n });
    }
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::CoordinateOutOfRange { name: "p", value: p0 });
    }
    Ok(())
}

fn fill(p0: f64, n: usize, label: String, mut f: impl FnMut(f64, f64) -> Result<f64>) -> Result<SliceGrid> {
    check(p0, n)?;
    let h = 1.0 / (n - 1) as f64;
    let mut values = vec![vec![0.0; n]; n];
    for (i, row) in values.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let x = f(i as f64 * h, j as f64 * h)?;
            if !x.is_finite() {
                return Err(Error::InvalidJoint(alloc::format!("non-finite value at ({i}, {j})")));
            }
            *v = x;
        }
    }
    Ok(SliceGrid { p0, n, values, label })
}

/// `measure(U(s, t, p0))` on the endpoint-inclusive lattice.
pub fn slice_grid(measure: &MeasureSpec, p0: f64, n: usize) -> Result<SliceGrid> {
    fill(p0, n, measure.name().into(), |s, t| {
        let u = from_stp(&StpCoords::new(s, t, p0))?;
        if let MeasureSpec::Poly(p) = measure {
            if p.nvars() != 4 {
                return Err(Error::NotBinary(libm::sqrt(p.nvars() as f64) as usize));
            }
        }
        measure.eval(u.matrix())
    })
}

/// The density itself on the slice.
pub fn density_heatmap_grid(density: &DensitySpec, p0: f64, n: usize) -> Result<SliceGrid> {
    if density.c() != 2 {
        return Err(Error::NotBinary(density.c()));
    }
    fill(p0, n, alloc::format!("density:{density:?}"), |s, t| {
        Ok(density.eval(from_stp(&StpCoords::new(s, t, p0))?.matrix()))
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    /// `(s, t)` points.
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    pub level: f64,
    pub lines: Vec<Polyline>,
}

/// Grid edge identity: horizontal edges join `(i, j)`–`(i+1, j)`, vertical
/// ones `(i, j)`–`(i, j+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum EdgeKey {
    H(usize, usize),
    V(usize, usize),
}

/// Marching squares with linear interpolation. Saddle cells are resolved by
/// comparing the cell average to the level; segments are stitched into
/// polylines through shared edges.
pub fn marching_squares(grid: &SliceGrid, levels: &[f64]) -> Result<Vec<Contour>> {
    if levels.is_empty() {
        return Err(Error::Empty("levels"));
    }
    if levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Parse("contour levels must be strictly increasing".into()));
    }
    levels.iter().map(|&l| Ok(Contour { level: l, lines: trace(grid, l) })).collect()
}

fn trace(g: &SliceGrid, level: f64) -> Vec<Polyline> {
    let n = g.n;
    let v = &g.values;
    let h = g.step();
    let point = |e: EdgeKey| -> (f64, f64) {
        let (a, b, pa, pb) = match e {
            EdgeKey::H(i, j) => (v[i][j], v[i + 1][j], (i, j), (i + 1, j)),
            EdgeKey::V(i, j) => (v[i][j], v[i][j + 1], (i, j), (i, j + 1)),
        };
        let f = if b == a { 0.5 } else { ((level - a) / (b - a)).clamp(0.0, 1.0) };
        let (x0, y0) = (pa.0 as f64 * h, pa.1 as f64 * h);
        let (x1, y1) = (pb.0 as f64 * h, pb.1 as f64 * h);
        (x0 + f * (x1 - x0), y0 + f * (y1 - y0))
    };
    let mut segs: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            // Corners counter-clockwise from (i, j); edges bottom, right, top, left.
            let c = [v[i][j], v[i + 1][j], v[i + 1][j + 1], v[i][j + 1]];
            let e = [EdgeKey::H(i, j), EdgeKey::V(i + 1, j), EdgeKey::H(i, j + 1), EdgeKey::V(i, j)];
            let idx = c.iter().enumerate().fold(0u8, |acc, (k, x)| acc | (((*x >= level) as u8) << k));
            let centre_above = (c.iter().sum::<f64>() / 4.0) >= level;
            let pairs: &[(usize, usize)] = match idx {
                0 | 15 => &[],
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(3, 2)],
                5 => {
                    if centre_above {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                10 => {
                    if centre_above {
                        &[(3, 0), (1, 2)]
                    } else {
                        &[(3, 2), (0, 1)]
                    }
                }
                _ => unreachable!(),
            };
            for &(a, b) in pairs {
                segs.push((e[a], e[b]));
            }
        }
    }
    stitch(&segs).into_iter().map(|(keys, closed)| Polyline { points: keys.into_iter().map(point).collect(), closed }).collect()
}

fn stitch(segs: &[(EdgeKey, EdgeKey)]) -> Vec<(Vec<EdgeKey>, bool)> {
    let mut adj: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (k, (a, b)) in segs.iter().enumerate() {
        adj.entry(*a).or_default().push(k);
        adj.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    let walk = |start: usize, from: EdgeKey, used: &mut Vec<bool>| -> (Vec<EdgeKey>, bool) {
        let mut keys = vec![from];
        let mut seg = start;
        let mut at = from;
        loop {
            used[seg] = true;
            let (a, b) = segs[seg];
            let next = if a == at { b } else { a };
            keys.push(next);
            if next == from {
                return (keys, true);
            }
            match adj[&next].iter().find(|&&s| !used[s]) {
                Some(&s) => {
                    seg = s;
                    at = next;
                }
                None => return (keys, false),
            }
        }
    };
    // Open lines start at edges touched once (the grid border).
    for (key, list) in &adj {
        if list.len() == 1 && !used[list[0]] {
            out.push(walk(list[0], *key, &mut used));
        }
    }
    for k in 0..segs.len() {
        if !used[k] {
            out.push(walk(k, segs[k].0, &mut used));
        }
    }
    out
}

/// The point of `line` farthest from the midline `s + t = 1`.
pub fn farthest_from_midline(line: &Polyline) -> Option<(f64, f64)> {
    line.points.iter().copied().max_by(|a, b| {
        let da = libm::fabs(a.0 + a.1 - 1.0);
        let db = libm::fabs(b.0 + b.1 - 1.0);
        da.partial_cmp(&db).unwrap_or(core::cmp::Ordering::Equal)
    })
}

/// Largest distance of the points from their total-least-squares line.
pub fn line_fit_deviation(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 3 {
        return 0.0;
    }
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.0 - mx, p.1 - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    // Direction of the principal axis.
    let theta = 0.5 * libm::atan2(2.0 * sxy, sxx - syy);
    let (dx, dy) = (libm::cos(theta), libm::sin(theta));
    points
        .iter()
        .map(|p| libm::fabs((p.0 - mx) * dy - (p.1 - my) * dx))
        .fold(0.0, f64::max)
}
