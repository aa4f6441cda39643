use delaunator::{triangulate, Point};
use serde::{Deserialize, Serialize};

use crate::data::dist2d;
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScagConfig {
    /// Hexagon grid resolution used when binning.
    pub bins: usize,
    /// Plots with more points than this are hex-binned.
    pub binning_threshold: usize,
}

impl Default for ScagConfig {
    fn default() -> Self {
        Self {
            bins: 40,
            binning_threshold: 250,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinnedPoint {
    pub pos: [f64; 2],
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Graph geometry of a scatterplot after unit-square normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScagGeometry {
    /// Every input point mapped into the unit square.
    pub normalized: Vec<[f64; 2]>,
    /// Distinct (or hex-binned) locations the graphs are built over.
    pub binned: Vec<BinnedPoint>,
    /// Grid resolution if binning happened.
    pub bins_used: Option<usize>,
    pub mst: Vec<MstEdge>,
    /// Convex hull, counter-clockwise.
    pub hull: Vec<[f64; 2]>,
    pub hull_area: f64,
    /// Delaunay triangles kept in the alpha shape.
    pub alpha_triangles: Vec<[usize; 3]>,
    pub alpha_area: f64,
    pub alpha_perimeter: f64,
    /// Outlier cutoff `q75 + 1.5 * IQR` of MST edge weights; also the alpha radius.
    pub omega: f64,
}

impl ScagGeometry {
    pub fn mst_length(&self) -> f64 {
        self.mst.iter().map(|e| e.weight).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.binned.len()];
        for e in &self.mst {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        deg
    }
}

pub fn scag_geometry(coords: &[[f64; 2]], cfg: &ScagConfig) -> Result<ScagGeometry> {
    if coords.len() < 3 {
        return Err(Error::Parameter(format!("scagnostics need >= 3 points, got {}", coords.len())));
    }
    if cfg.bins < 2 {
        return Err(Error::Parameter("scagnostics need at least 2 bins".into()));
    }
    let normalized = normalize(coords)?;
    let (binned, bins_used) = if coords.len() > cfg.binning_threshold {
        let mut bins = cfg.bins;
        loop {
            let b = hexbin(&normalized, bins);
            if b.len() <= cfg.binning_threshold || bins <= 2 {
                break (b, Some(bins));
            }
            bins /= 2;
        }
    } else {
        (dedup(&normalized), None)
    };
    if binned.len() < 2 {
        return Err(Error::DegeneratePlot("all points coincide".into()));
    }
    let pos: Vec<[f64; 2]> = binned.iter().map(|b| b.pos).collect();
    let mst = prim_mst(&pos);
    let weights: Vec<f64> = mst.iter().map(|e| e.weight).collect();
    let q25 = stats::quantile(&weights, 0.25);
    let q75 = stats::quantile(&weights, 0.75);
    let omega = q75 + 1.5 * (q75 - q25);
    let hull = convex_hull(&pos);
    let hull_area = polygon_area(&hull);
    let (alpha_triangles, alpha_area, alpha_perimeter) = alpha_shape(&pos, omega);
    Ok(ScagGeometry {
        normalized,
        binned,
        bins_used,
        mst,
        hull,
        hull_area,
        alpha_triangles,
        alpha_area,
        alpha_perimeter,
        omega,
    })
}

fn normalize(coords: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for c in coords {
        for a in 0..2 {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    let range = [hi[0] - lo[0], hi[1] - lo[1]];
    if !(range[0] > 0.0 || range[1] > 0.0) {
        return Err(Error::DegeneratePlot("all points coincide".into()));
    }
    if !(range[0].is_finite() && range[1].is_finite()) {
        return Err(Error::Data("non-finite coordinates".into()));
    }
    Ok(coords
        .iter()
        .map(|c| {
            let f = |a: usize| if range[a] > 0.0 { (c[a] - lo[a]) / range[a] } else { 0.0 };
            [f(0), f(1)]
        })
        .collect())
}

fn dedup(points: &[[f64; 2]]) -> Vec<BinnedPoint> {
    let mut sorted: Vec<[f64; 2]> = points.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut out: Vec<BinnedPoint> = Vec::new();
    for p in sorted {
        match out.last_mut() {
            Some(last) if last.pos == p => last.count += 1,
            _ => out.push(BinnedPoint { pos: p, count: 1 }),
        }
    }
    out
}

/// Hexagonal binning of unit-square points on a grid `bins` hexagons wide.
/// Bins are placed at hexagon centers and returned in row-major order.
fn hexbin(points: &[[f64; 2]], bins: usize) -> Vec<BinnedPoint> {
    let dx = 1.0 / bins as f64;
    let dy = dx * 3f64.sqrt();
    let mut cells: std::collections::BTreeMap<(i64, i64, u8), usize> = Default::default();
    for p in points {
        let sx = p[0] / dx;
        let sy = p[1] / dy;
        // two interleaved rectangular lattices; the closer center wins
        let (i1, j1) = (sx.round(), sy.round());
        let (i2, j2) = (sx.floor() + 0.5, sy.floor() + 0.5);
        let d1 = (sx - i1).powi(2) + 3.0 * (sy - j1).powi(2);
        let d2 = (sx - i2).powi(2) + 3.0 * (sy - j2).powi(2);
        let key = if d1 <= d2 {
            (j1 as i64, i1 as i64, 0)
        } else {
            (j2.floor() as i64, i2.floor() as i64, 1)
        };
        *cells.entry(key).or_default() += 1;
    }
    cells
        .into_iter()
        .map(|((j, i, lattice), count)| {
            let off = if lattice == 1 { 0.5 } else { 0.0 };
            BinnedPoint {
                pos: [(i as f64 + off) * dx, (j as f64 + off) * dy],
                count,
            }
        })
        .collect()
}

/// Minimum spanning tree of the complete Euclidean graph (Prim, `O(m^2)`).
/// Ties go to the lower vertex index.
pub(crate) fn prim_mst(pos: &[[f64; 2]]) -> Vec<MstEdge> {
    let m = pos.len();
    let mut in_tree = vec![false; m];
    let mut best = vec![f64::INFINITY; m];
    let mut parent = vec![usize::MAX; m];
    let mut edges = Vec::with_capacity(m.saturating_sub(1));
    best[0] = 0.0;
    for _ in 0..m {
        let mut u = usize::MAX;
        for v in 0..m {
            if !in_tree[v] && (u == usize::MAX || best[v] < best[u]) {
                u = v;
            }
        }
        in_tree[u] = true;
        if parent[u] != usize::MAX {
            edges.push(MstEdge {
                a: parent[u],
                b: u,
                weight: best[u],
            });
        }
        for v in 0..m {
            if !in_tree[v] {
                let d = dist2d(pos[u], pos[v]);
                if d < best[v] {
                    best[v] = d;
                    parent[v] = u;
                }
            }
        }
    }
    edges
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain; collinear points are dropped.
fn convex_hull(pos: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = pos.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut a = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        a += p[0] * q[1] - q[0] * p[1];
    }
    a.abs() / 2.0
}

/// Union of Delaunay triangles whose circumradius is at most `alpha`:
/// kept triangles, their total area and the length of the union's boundary.
fn alpha_shape(pos: &[[f64; 2]], alpha: f64) -> (Vec<[usize; 3]>, f64, f64) {
    let points: Vec<Point> = pos.iter().map(|p| Point { x: p[0], y: p[1] }).collect();
    let tri = triangulate(&points);
    let mut kept = Vec::new();
    let mut area = 0.0;
    let mut edge_use: std::collections::BTreeMap<(usize, usize), usize> = Default::default();
    for t in tri.triangles.chunks_exact(3) {
        let (a, b, c) = (pos[t[0]], pos[t[1]], pos[t[2]]);
        let ab = dist2d(a, b);
        let bc = dist2d(b, c);
        let ca = dist2d(c, a);
        let twice_area = cross(a, b, c).abs();
        if twice_area <= 0.0 {
            continue;
        }
        let circumradius = ab * bc * ca / (2.0 * twice_area);
        if circumradius > alpha {
            continue;
        }
        kept.push([t[0], t[1], t[2]]);
        area += twice_area / 2.0;
        for (u, v) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *edge_use.entry((u.min(v), u.max(v))).or_default() += 1;
        }
    }
    let perimeter = edge_use
        .iter()
        .filter(|(_, &uses)| uses == 1)
        .map(|(&(u, v), _)| dist2d(pos[u], pos[v]))
        .sum();
    (kept, area, perimeter)
}
