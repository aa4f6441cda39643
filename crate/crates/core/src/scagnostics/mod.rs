//! Graph-theoretic scatterplot diagnostics computed on 2D coordinates.
//!
//! Coordinates are mapped to the unit square per axis, optionally hex-binned,
//! and summarized through a minimum spanning tree, a convex hull and an
//! alpha shape whose radius is the MST outlier cutoff.

mod geometry;

pub use geometry::{scag_geometry, BinnedPoint, MstEdge, ScagConfig, ScagGeometry};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::Metric;
use crate::stats;

/// Relative slack for edge-weight comparisons, so rounding noise in equal
/// lengths is not read as structure.
const WEIGHT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scagnostics {
    pub outlying: f64,
    pub skewed: f64,
    pub clumpy: f64,
    pub sparse: f64,
    pub striated: f64,
    pub convex: f64,
    pub skinny: f64,
    pub stringy: f64,
    pub monotonic: f64,
}

impl Scagnostics {
    pub fn to_pairs(&self) -> [(Metric, f64); 9] {
        [
            (Metric::Outlying, self.outlying),
            (Metric::Skewed, self.skewed),
            (Metric::Clumpy, self.clumpy),
            (Metric::Sparse, self.sparse),
            (Metric::Striated, self.striated),
            (Metric::Convex, self.convex),
            (Metric::Skinny, self.skinny),
            (Metric::Stringy, self.stringy),
            (Metric::Monotonic, self.monotonic),
        ]
    }
}

/// Geometry and measures in one call.
pub fn scagnostics_of(coords: &[[f64; 2]], cfg: &ScagConfig) -> Result<Scagnostics> {
    let g = scag_geometry(coords, cfg)?;
    Ok(scagnostics(&g))
}

pub fn scagnostics(g: &ScagGeometry) -> Scagnostics {
    let weights: Vec<f64> = g.mst.iter().map(|e| e.weight).collect();
    let total = g.mst_length();
    let deg = g.degrees();
    let cutoff = g.omega * (1.0 + WEIGHT_SLACK);

    let outlying = if total > 0.0 {
        g.mst
            .iter()
            .filter(|e| e.weight > cutoff && (deg[e.a] == 1 || deg[e.b] == 1))
            .map(|e| e.weight)
            .sum::<f64>()
            / total
    } else {
        0.0
    };

    let q10 = stats::quantile(&weights, 0.10);
    let q50 = stats::quantile(&weights, 0.50);
    let q90 = stats::quantile(&weights, 0.90);
    let skewed = if q90 > q10 { (q90 - q50) / (q90 - q10) } else { 0.0 };
    let sparse = q90;

    let striated = striated(g, &deg);
    let clumpy = clumpy(g);

    let (convex, skinny) = if g.alpha_area > 0.0 {
        let convex = if g.hull_area > 0.0 { g.alpha_area / g.hull_area } else { 0.0 };
        let skinny = 1.0 - (4.0 * std::f64::consts::PI * g.alpha_area).sqrt() / g.alpha_perimeter;
        (convex, skinny)
    } else {
        (0.0, 1.0)
    };

    let stringy = if total > 0.0 { tree_diameter(g) / total } else { 0.0 };

    let (xs, ys): (Vec<f64>, Vec<f64>) = g.normalized.iter().map(|p| (p[0], p[1])).unzip();
    let monotonic = stats::spearman(&xs, &ys).map_or(0.0, |r| r * r);

    let c = |v: f64| v.clamp(0.0, 1.0) + 0.0;
    Scagnostics {
        outlying: c(outlying),
        skewed: c(skewed),
        clumpy: c(clumpy),
        sparse: c(sparse),
        striated: c(striated),
        convex: c(convex),
        skinny: c(skinny),
        stringy: c(stringy),
        monotonic: c(monotonic),
    }
}

fn adjacency(g: &ScagGeometry) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); g.binned.len()];
    for (k, e) in g.mst.iter().enumerate() {
        adj[e.a].push((e.b, k));
        adj[e.b].push((e.a, k));
    }
    adj
}

/// Fraction of vertices with exactly two MST neighbors at a near-straight angle.
fn striated(g: &ScagGeometry, deg: &[usize]) -> f64 {
    let adj = adjacency(g);
    let mut count = 0usize;
    for (v, nbrs) in adj.iter().enumerate() {
        if deg[v] != 2 {
            continue;
        }
        let p = g.binned[v].pos;
        let a = g.binned[nbrs[0].0].pos;
        let b = g.binned[nbrs[1].0].pos;
        let u = [a[0] - p[0], a[1] - p[1]];
        let w = [b[0] - p[0], b[1] - p[1]];
        let norm = (u[0].hypot(u[1])) * (w[0].hypot(w[1]));
        if norm > 0.0 && (u[0] * w[0] + u[1] * w[1]) / norm < -0.75 {
            count += 1;
        }
    }
    count as f64 / g.binned.len() as f64
}

/// For each MST edge, cut it and keep only strictly shorter edges; the side
/// with fewer edges is the runt. Runts without edges carry no clump signal
/// and are skipped.
fn clumpy(g: &ScagGeometry) -> f64 {
    let adj = adjacency(g);
    let mut best: f64 = 0.0;
    for e in &g.mst {
        let shorter = e.weight * (1.0 - WEIGHT_SLACK);
        let side = |start: usize| -> (usize, f64) {
            let mut seen = vec![false; g.binned.len()];
            let mut stack = vec![start];
            seen[start] = true;
            let (mut edges, mut max_w) = (0usize, 0.0f64);
            while let Some(v) = stack.pop() {
                for &(u, k) in &adj[v] {
                    let w = g.mst[k].weight;
                    if w < shorter && !seen[u] {
                        seen[u] = true;
                        edges += 1;
                        max_w = max_w.max(w);
                        stack.push(u);
                    }
                }
            }
            (edges, max_w)
        };
        let (ea, wa) = side(e.a);
        let (eb, wb) = side(e.b);
        let (edges, max_w) = if ea <= eb { (ea, wa) } else { (eb, wb) };
        if edges == 0 || e.weight <= 0.0 {
            continue;
        }
        best = best.max(1.0 - max_w / e.weight);
    }
    best
}

/// Longest weighted path in the MST (two sweeps).
fn tree_diameter(g: &ScagGeometry) -> f64 {
    let adj = adjacency(g);
    let farthest = |start: usize| -> (usize, f64) {
        let mut dist = vec![f64::NAN; g.binned.len()];
        dist[start] = 0.0;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &(u, k) in &adj[v] {
                if dist[u].is_nan() {
                    dist[u] = dist[v] + g.mst[k].weight;
                    stack.push(u);
                }
            }
        }
        let mut arg = start;
        for (i, &d) in dist.iter().enumerate() {
            if d > dist[arg] {
                arg = i;
            }
        }
        (arg, dist[arg])
    };
    let (a, _) = farthest(0);
    farthest(a).1
}
