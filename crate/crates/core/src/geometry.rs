//! Fireline extraction and the comparison metrics built on it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2, ScalarField2};

pub type Point = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Point>,
    pub closed: bool,
}

/// Zero contour of a level-set field at one time. Loops touching the
/// domain edge are open.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Fireline {
    pub time: f64,
    pub loops: Vec<Polyline>,
}

impl Fireline {
    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        self.loops.iter().map(polyline_length).sum()
    }

    /// Arc-length resampled points of all loops.
    pub fn resampled(&self, delta: f64) -> Vec<Point> {
        self.loops.iter().flat_map(|l| resample(l, delta)).collect()
    }
}

/// Segments of one marching-squares cell as pairs of edge indices.
/// Corners are counter-clockwise from bottom-left; edge `k` joins corner
/// `k` and corner `k + 1`.
fn cell_segments(v: [f64; 4], level: f64) -> Vec<(usize, usize)> {
    let inside = v.map(|x| x < level);
    let crossed: Vec<usize> = (0..4).filter(|&k| inside[k] != inside[(k + 1) % 4]).collect();
    match crossed.len() {
        2 => vec![(crossed[0], crossed[1])],
        4 => {
            let centre_inside = (v.iter().sum::<f64>() / 4.0) < level;
            // cut off the corners that disagree with the centre
            (0..4)
                .filter(|&k| inside[k] != centre_inside)
                .map(|k| ((k + 3) % 4, k))
                .collect()
        }
        _ => Vec::new(),
    }
}

// Edge keys: (0, i, j) is the horizontal edge (i,j)-(i+1,j),
// (1, i, j) the vertical edge (i,j)-(i,j+1).
type EdgeKey = (u8, usize, usize);

/// Marching squares on `field` at `level`. Nodes with `ψ < level` are
/// inside. Saddle cells are resolved by the mean of the four corners.
pub fn extract_fireline(field: &ScalarField2, level: f64, time: f64) -> Fireline {
    let g = field.grid;
    let mut points: BTreeMap<EdgeKey, Point> = BTreeMap::new();
    let mut adjacency: BTreeMap<EdgeKey, Vec<EdgeKey>> = BTreeMap::new();

    let crossing = |key: EdgeKey| -> Point {
        let (dir, i, j) = key;
        let (a, b, pa, pb) = if dir == 0 {
            (field.at(i, j), field.at(i + 1, j), [g.x(i), g.y(j)], [g.x(i + 1), g.y(j)])
        } else {
            (field.at(i, j), field.at(i, j + 1), [g.x(i), g.y(j)], [g.x(i), g.y(j + 1)])
        };
        let s = (level - a) / (b - a);
        [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]
    };

    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            // corners counter-clockwise from bottom-left
            let v = [field.at(i, j), field.at(i + 1, j), field.at(i + 1, j + 1), field.at(i, j + 1)];
            let edges: [EdgeKey; 4] = [(0, i, j), (1, i + 1, j), (0, i, j + 1), (1, i, j)];
            let segments = cell_segments(v, level).into_iter().map(|(a, b)| (edges[a], edges[b]));
            for (a, b) in segments {
                for key in [a, b] {
                    points.entry(key).or_insert_with(|| crossing(key));
                }
                adjacency.entry(a).or_default().push(b);
                adjacency.entry(b).or_default().push(a);
            }
        }
    }

    let mut loops = Vec::new();
    let mut visited: BTreeMap<EdgeKey, bool> = adjacency.keys().map(|&k| (k, false)).collect();
    let walk = |start: EdgeKey, visited: &mut BTreeMap<EdgeKey, bool>| -> (Vec<EdgeKey>, bool) {
        let mut chain = vec![start];
        visited.insert(start, true);
        let mut current = start;
        let mut closed = false;
        loop {
            let next = adjacency[&current].iter().copied().find(|k| !visited[k]);
            match next {
                Some(n) => {
                    visited.insert(n, true);
                    chain.push(n);
                    current = n;
                }
                None => {
                    if chain.len() > 2 && adjacency[&current].contains(&start) {
                        closed = true;
                    }
                    break;
                }
            }
        }
        (chain, closed)
    };
    // open chains start at an end point
    let ends: Vec<EdgeKey> = adjacency
        .iter()
        .filter(|(_, n)| n.len() == 1)
        .map(|(&k, _)| k)
        .collect();
    for start in ends {
        if !visited[&start] {
            let (chain, _) = walk(start, &mut visited);
            loops.push((chain, false));
        }
    }
    let rest: Vec<EdgeKey> = adjacency.keys().copied().collect();
    for start in rest {
        if !visited[&start] {
            let (chain, closed) = walk(start, &mut visited);
            loops.push((chain, closed));
        }
    }

    let loops = loops
        .into_iter()
        .filter_map(|(chain, closed)| {
            let mut pts: Vec<Point> = Vec::with_capacity(chain.len());
            for k in chain {
                let p = points[&k];
                if pts.last() != Some(&p) {
                    pts.push(p);
                }
            }
            if closed && pts.len() > 1 && pts.first() == pts.last() {
                pts.pop();
            }
            let closed = closed && pts.len() >= 3;
            (pts.len() >= 2).then_some(Polyline { points: pts, closed })
        })
        .collect();
    Fireline { time, loops }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn segments(line: &Polyline) -> impl Iterator<Item = (Point, Point)> + '_ {
    let n = line.points.len();
    let count = if line.closed && n > 2 { n } else { n.saturating_sub(1) };
    (0..count).map(move |k| (line.points[k], line.points[(k + 1) % n]))
}

pub fn polyline_length(line: &Polyline) -> f64 {
    segments(line).map(|(a, b)| dist(a, b)).sum()
}

/// Shoelace area of a closed polyline.
pub fn polygon_area(line: &Polyline) -> Result<f64> {
    if !line.closed {
        return Err(Error::OpenPolyline);
    }
    if line.points.len() < 3 {
        return Err(Error::validation("a polygon needs at least 3 points"));
    }
    let p = &line.points;
    let n = p.len();
    let twice: f64 = (0..n)
        .map(|k| {
            let (a, b) = (p[k], p[(k + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    Ok(twice.abs() / 2.0)
}

/// Sum of loop areas; every loop must be closed.
pub fn fireline_area(line: &Fireline) -> Result<f64> {
    line.loops.iter().map(polygon_area).sum()
}

/// Points along the polyline with arc-length spacing at most `delta`,
/// including every vertex.
pub fn resample(line: &Polyline, delta: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for (a, b) in segments(line) {
        let n = (dist(a, b) / delta).ceil().max(1.0) as usize;
        for k in 0..n {
            let s = k as f64 / n as f64;
            out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    if !line.closed || line.points.len() <= 2 {
        if let Some(&last) = line.points.last() {
            out.push(last);
        }
    }
    out
}

/// Two-sided Hausdorff distance between finite point sets.
///
/// Exact; the inner scan starts at the previous nearest neighbour and
/// stops as soon as a point closer than the running maximum is found.
pub fn hausdorff_points(a: &[Point], b: &[Point]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(directed(a, b).max(directed(b, a)).sqrt())
}

fn directed(a: &[Point], b: &[Point]) -> f64 {
    let sq = |p: Point, q: Point| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
    let mut cmax = 0.0f64;
    let mut hint = 0;
    for &p in a {
        let mut cmin = f64::INFINITY;
        let (n, start) = (b.len(), hint);
        for off in 0..n {
            let k = (start + off) % n;
            let d = sq(p, b[k]);
            if d < cmin {
                cmin = d;
                hint = k;
            }
            if cmin < cmax {
                break;
            }
        }
        cmax = cmax.max(cmin);
    }
    cmax
}

/// Hausdorff distance between two firelines after resampling both at `delta`.
pub fn hausdorff(a: &Fireline, b: &Fireline, delta: f64) -> Result<f64> {
    hausdorff_points(&a.resampled(delta), &b.resampled(delta))
}

/// Area of `{ψ ≤ level}` with ψ linear on the two triangles of each cell.
/// Unlike [`fireline_area`] this works when the front leaves the grid.
pub fn region_area(field: &ScalarField2, level: f64) -> f64 {
    let g = field.grid;
    let tri = g.dx * g.dy / 2.0;
    let mut total = 0.0;
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let v00 = field.at(i, j) - level;
            let v10 = field.at(i + 1, j) - level;
            let v11 = field.at(i + 1, j + 1) - level;
            let v01 = field.at(i, j + 1) - level;
            total += tri * (triangle_fraction(v00, v10, v11) + triangle_fraction(v00, v11, v01));
        }
    }
    total
}

/// Fraction of a triangle where a linear function with these vertex
/// values is ≤ 0.
fn triangle_fraction(a: f64, b: f64, c: f64) -> f64 {
    let neg = [a, b, c].iter().filter(|&&v| v <= 0.0).count();
    let lone = |k: f64, p: f64, q: f64| (k / (k - p)) * (k / (k - q));
    match neg {
        0 => 0.0,
        3 => 1.0,
        1 => {
            if a <= 0.0 {
                lone(a, b, c)
            } else if b <= 0.0 {
                lone(b, a, c)
            } else {
                lone(c, a, b)
            }
        }
        _ => {
            if a > 0.0 {
                1.0 - lone(a, b, c)
            } else if b > 0.0 {
                1.0 - lone(b, a, c)
            } else {
                1.0 - lone(c, a, b)
            }
        }
    }
}

/// Anything that yields a level-set field on a physical grid at a time.
pub trait FieldSource {
    fn field_at(&self, t: f64, grid: &Grid2) -> Result<ScalarField2>;
}

impl FieldSource for crate::classical::FieldStack {
    fn field_at(&self, t: f64, grid: &Grid2) -> Result<ScalarField2> {
        if !self.grid.matches(grid, 1e-9) {
            return Err(Error::validation("requested grid differs from the stack grid"));
        }
        let k = self
            .time_index(t)
            .ok_or_else(|| Error::validation(format!("no snapshot at time {t}")))?;
        Ok(self.snapshot(k))
    }
}

/// A closed-form field `ψ(t, x, y)`.
pub struct AnalyticField<F>(pub F);

impl<F: Fn(f64, f64, f64) -> f64> FieldSource for AnalyticField<F> {
    fn field_at(&self, t: f64, grid: &Grid2) -> Result<ScalarField2> {
        Ok(ScalarField2::from_fn(*grid, |x, y| (self.0)(t, x, y)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AreaNormalization {
    #[default]
    Sqrt,
    Plain,
}

/// One time of a comparison. Distance fields are `None` when either
/// fireline is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub t: f64,
    pub d_h: Option<f64>,
    pub d_h_sqrt_area: Option<f64>,
    pub d_h_area: Option<f64>,
    pub d_h_perimeter: Option<f64>,
    pub area_a: f64,
    pub area_b: f64,
    pub perim_a: f64,
    pub perim_b: f64,
}

impl MetricsRecord {
    pub fn normalized(&self, mode: AreaNormalization) -> Option<f64> {
        match mode {
            AreaNormalization::Sqrt => self.d_h_sqrt_area,
            AreaNormalization::Plain => self.d_h_area,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub records: Vec<MetricsRecord>,
}

impl MetricsSeries {
    pub fn normalized(&self, mode: AreaNormalization) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.normalized(mode)).collect()
    }
}

/// Compares two sources at each time. Areas are regions `{ψ ≤ 0}` on the
/// grid; normalisation uses A's area and perimeter.
pub fn compare_series(
    a: &dyn FieldSource,
    b: &dyn FieldSource,
    times: &[f64],
    grid: &Grid2,
) -> Result<MetricsSeries> {
    grid.validate()?;
    let delta = grid.dx.min(grid.dy) / 2.0;
    let mut records = Vec::with_capacity(times.len());
    for &t in times {
        let fa = a.field_at(t, grid)?;
        let fb = b.field_at(t, grid)?;
        for (f, name) in [(&fa, "A"), (&fb, "B")] {
            if !f.is_finite() {
                return Err(Error::NonFinite {
                    what: format!("field {name}"),
                    point: vec![t],
                });
            }
        }
        let la = extract_fireline(&fa, 0.0, t);
        let lb = extract_fireline(&fb, 0.0, t);
        let (area_a, area_b) = (region_area(&fa, 0.0), region_area(&fb, 0.0));
        let (perim_a, perim_b) = (la.perimeter(), lb.perimeter());
        let d_h = if la.is_empty() || lb.is_empty() {
            None
        } else {
            Some(hausdorff(&la, &lb, delta)?)
        };
        let ratio = |den: f64| d_h.and_then(|d| (den > 0.0).then(|| d / den));
        records.push(MetricsRecord {
            t,
            d_h,
            d_h_sqrt_area: ratio(area_a.sqrt()),
            d_h_area: ratio(area_a),
            d_h_perimeter: ratio(perim_a),
            area_a,
            area_b,
            perim_a,
            perim_b,
        });
    }
    Ok(MetricsSeries { records })
}
