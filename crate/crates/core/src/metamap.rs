//! Maps of projections: each embedding's metric vector becomes a 2D point,
//! and ranking scores are interpolated over the plane.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataSource, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{FeatureSpace, MetricVector};
use crate::generators::{generate, GeneratorSpec};
use crate::metrics::Metric;

pub const IDW_POWER: f64 = 2.0;
pub const IDW_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metamap {
    pub embedding_ids: Vec<String>,
    pub points: Vec<[f64; 2]>,
    pub scores: Vec<f64>,
    /// `grid[r][c]` is the field at `grid_x[c], grid_y[r]`.
    pub grid: Vec<Vec<f64>>,
    pub grid_x: Vec<f64>,
    pub grid_y: Vec<f64>,
    pub bbox: BoundingBox,
    pub technique_used: GeneratorSpec,
    /// Labels attached to the layout dataset, e.g. the source dataset of each projection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

/// Inverse-distance-weighted value at `q`. Within `IDW_EPSILON` of one or
/// more sites the mean of their values is returned.
pub fn idw(points: &[[f64; 2]], values: &[f64], q: [f64; 2]) -> f64 {
    let mut near_sum = 0.0;
    let mut near_n = 0usize;
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, &v) in points.iter().zip(values) {
        let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        if d < IDW_EPSILON {
            near_sum += v;
            near_n += 1;
        } else if near_n == 0 {
            let w = d.powf(-IDW_POWER);
            num += w * v;
            den += w;
        }
    }
    let raw = if near_n > 0 { near_sum / near_n as f64 } else { num / den };
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    raw.clamp(lo, hi)
}

fn linspace(lo: f64, hi: f64, g: usize) -> Vec<f64> {
    if g == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..g).map(|i| lo + (hi - lo) * i as f64 / (g - 1) as f64).collect()
}

/// Lays the vectors out with `spec` and interpolates `scores` on a g×g grid.
/// Absent metric values are filled with the batch median.
pub fn build_metamap(
    vectors: &[MetricVector],
    scores: &[f64],
    spec: &GeneratorSpec,
    g: usize,
    labels: Option<Vec<usize>>,
) -> Result<Metamap> {
    if vectors.len() < 3 {
        return Err(Error::Parameter(format!(
            "a metamap needs at least 3 embeddings, got {}",
            vectors.len()
        )));
    }
    if scores.len() != vectors.len() {
        return Err(Error::Structural(format!(
            "{} scores for {} embeddings",
            scores.len(),
            vectors.len()
        )));
    }
    if g == 0 {
        return Err(Error::Parameter("grid size must be positive".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Data("non-finite ranking score".into()));
    }
    let metrics: Vec<Metric> = Metric::ALL
        .into_iter()
        .filter(|&m| vectors.iter().any(|v| v.get(m).is_some()))
        .collect();
    if metrics.is_empty() {
        return Err(Error::Data("metric vectors carry no values".into()));
    }
    let space = FeatureSpace::fit(vectors, &metrics);
    let rows: Vec<Vec<f64>> = vectors.iter().map(|v| space.transform(v)).collect();
    let ds = Dataset::from_rows("metamap", &rows, labels.clone(), DataSource::Synthetic)?;
    let points = generate(&ds, spec)?.coords;

    let lo = [0, 1].map(|a| points.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min));
    let hi = [0, 1].map(|a| points.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max));
    let grid_x = linspace(lo[0], hi[0], g);
    let grid_y = linspace(lo[1], hi[1], g);
    let grid = grid_y
        .par_iter()
        .map(|&y| grid_x.iter().map(|&x| idw(&points, scores, [x, y])).collect())
        .collect();
    Ok(Metamap {
        embedding_ids: vectors.iter().map(|v| v.embedding_id.clone()).collect(),
        points,
        scores: scores.to_vec(),
        grid,
        grid_x,
        grid_y,
        bbox: BoundingBox { min: lo, max: hi },
        technique_used: spec.clone(),
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(id: usize, vals: &[(Metric, f64)]) -> MetricVector {
        let mut v = MetricVector::new(format!("e{id}"));
        for (m, x) in vals {
            v.values.insert(*m, *x);
        }
        v
    }

    #[test]
    fn idw_hits_sites_exactly() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let vals = [0.1, 0.5, 0.9];
        for (p, v) in pts.iter().zip(vals) {
            assert_eq!(idw(&pts, &vals, *p), v);
        }
        let mid = idw(&pts, &vals, [0.5, 0.0]);
        assert!((mid - 39.0 / 110.0).abs() < 1e-12);
    }

    #[test]
    fn idw_averages_coincident_sites() {
        let pts = [[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]];
        assert!((idw(&pts, &[0.2, 0.4, 1.0], [0.0, 0.0]) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn identical_vectors_coincide() {
        let vs: Vec<MetricVector> = (0..5).map(|i| vector(i, &[(Metric::Nerv, 0.3), (Metric::Cc, 0.8)])).collect();
        let mm = build_metamap(&vs, &[0.1, 0.2, 0.3, 0.4, 0.5], &GeneratorSpec::ClassicalMds, 4, None).unwrap();
        for p in &mm.points {
            assert!((p[0] - mm.points[0][0]).hypot(p[1] - mm.points[0][1]) < 1e-6);
        }
        for row in &mm.grid {
            for &v in row {
                assert!((0.1..=0.5).contains(&v));
            }
        }
    }

    #[test]
    fn two_clusters_separate() {
        let mut vs = Vec::new();
        for i in 0..10 {
            let base = if i < 5 { 0.1 } else { 0.9 };
            let jitter = 0.01 * (i % 5) as f64;
            vs.push(vector(i, &[(Metric::Nerv, base + jitter), (Metric::Cc, base - jitter), (Metric::Lcmc, base)]));
        }
        let scores: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mm = build_metamap(&vs, &scores, &GeneratorSpec::ClassicalMds, 8, None).unwrap();
        let d = |a: usize, b: usize| (mm.points[a][0] - mm.points[b][0]).hypot(mm.points[a][1] - mm.points[b][1]);
        let mut within = 0.0f64;
        let mut between = f64::INFINITY;
        for a in 0..10 {
            for b in (a + 1)..10 {
                if (a < 5) == (b < 5) {
                    within = within.max(d(a, b));
                } else {
                    between = between.min(d(a, b));
                }
            }
        }
        assert!(between / within > 2.0);
        assert_eq!(mm.grid.len(), 8);
        assert_eq!(mm.grid_x.first(), Some(&mm.bbox.min[0]));
    }

    #[test]
    fn too_few_embeddings() {
        let vs: Vec<MetricVector> = (0..2).map(|i| vector(i, &[(Metric::Nerv, 0.3)])).collect();
        assert!(matches!(
            build_metamap(&vs, &[0.0, 1.0], &GeneratorSpec::ClassicalMds, 4, None),
            Err(Error::Parameter(_))
        ));
    }
}
