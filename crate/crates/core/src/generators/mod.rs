//! Built-in projection techniques and diverse subset sampling.

mod sampling;
mod tsne;

pub use sampling::sample_diverse;
pub use tsne::{tsne, TsneRun};

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use petgraph::algo::{connected_components, dijkstra};
use petgraph::graph::{NodeIndex, UnGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Embedding, Technique};
use crate::error::{Error, Result};

/// A technique together with its complete parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "technique", content = "params")]
pub enum GeneratorSpec {
    #[serde(rename = "PCA")]
    Pca,
    #[serde(rename = "MDS")]
    ClassicalMds,
    #[serde(rename = "Isomap")]
    Isomap { n_neighbors: usize },
    #[serde(rename = "tSNE")]
    Tsne {
        perplexity: f64,
        iterations: usize,
        learning_rate: f64,
        seed: u64,
    },
    #[serde(rename = "GRP")]
    Grp { seed: u64 },
}

impl GeneratorSpec {
    /// t-SNE with perplexity 30, 1000 iterations and learning rate 200.
    pub fn tsne(seed: u64) -> Self {
        GeneratorSpec::Tsne {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            seed,
        }
    }

    pub fn technique(&self) -> Technique {
        match self {
            GeneratorSpec::Pca => Technique::Pca,
            GeneratorSpec::ClassicalMds => Technique::Mds,
            GeneratorSpec::Isomap { .. } => Technique::Isomap,
            GeneratorSpec::Tsne { .. } => Technique::Tsne,
            GeneratorSpec::Grp { .. } => Technique::Grp,
        }
    }

    pub fn params(&self) -> BTreeMap<String, String> {
        let mut p = BTreeMap::new();
        match self {
            GeneratorSpec::Pca | GeneratorSpec::ClassicalMds => {}
            GeneratorSpec::Isomap { n_neighbors } => {
                p.insert("n_neighbors".into(), n_neighbors.to_string());
            }
            GeneratorSpec::Tsne {
                perplexity,
                iterations,
                learning_rate,
                seed,
            } => {
                p.insert("perplexity".into(), perplexity.to_string());
                p.insert("iterations".into(), iterations.to_string());
                p.insert("learning_rate".into(), learning_rate.to_string());
                p.insert("seed".into(), seed.to_string());
            }
            GeneratorSpec::Grp { seed } => {
                p.insert("seed".into(), seed.to_string());
            }
        }
        p
    }

    /// Stable embedding id suffix, e.g. `isomap-k10`.
    pub fn slug(&self) -> String {
        match self {
            GeneratorSpec::Pca => "pca".into(),
            GeneratorSpec::ClassicalMds => "mds".into(),
            GeneratorSpec::Isomap { n_neighbors } => format!("isomap-k{n_neighbors}"),
            GeneratorSpec::Tsne {
                perplexity,
                iterations,
                learning_rate,
                seed,
            } => format!("tsne-p{perplexity}-i{iterations}-lr{learning_rate}-s{seed}"),
            GeneratorSpec::Grp { seed } => format!("grp-s{seed}"),
        }
    }
}

/// Projects `ds` to 2D. The embedding id is `<dataset>.<slug>`.
pub fn generate(ds: &Dataset, spec: &GeneratorSpec) -> Result<Embedding> {
    let coords = match spec {
        GeneratorSpec::Pca => pca(ds.points())?,
        GeneratorSpec::ClassicalMds => classical_mds(&sq_distance_matrix(ds.points()))?,
        GeneratorSpec::Isomap { n_neighbors } => isomap(ds.points(), *n_neighbors)?,
        GeneratorSpec::Tsne {
            perplexity,
            iterations,
            learning_rate,
            seed,
        } => tsne(ds.points(), *perplexity, *iterations, *learning_rate, *seed)?.coords,
        GeneratorSpec::Grp { seed } => grp(ds.points(), *seed),
    };
    Embedding::new(
        format!("{}.{}", ds.id(), spec.slug()),
        ds.id(),
        coords,
        spec.technique(),
        spec.params(),
    )
}

/// Runs every spec in parallel; results keep the input order.
pub fn generate_all(ds: &Dataset, specs: &[GeneratorSpec]) -> Vec<Result<Embedding>> {
    specs.par_iter().map(|s| generate(ds, s)).collect()
}

fn sq_distance_matrix(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (x.row(i) - x.row(j)).norm_squared();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Eigenpairs of a symmetric matrix, largest eigenvalue first.
fn top_eigen(m: DMatrix<f64>, count: usize) -> Result<Vec<(f64, nalgebra::DVector<f64>)>> {
    let eig = SymmetricEigen::try_new(m, 1e-12, 10_000)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(count)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
        .collect())
}

/// Makes each axis's largest-magnitude coordinate positive.
fn fix_signs(coords: &mut [[f64; 2]]) {
    for a in 0..2 {
        let pivot = coords
            .iter()
            .map(|c| c[a])
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            coords.iter_mut().for_each(|c| c[a] = -c[a]);
        }
    }
}

fn pca(x: &DMatrix<f64>) -> Result<Vec<[f64; 2]>> {
    let (n, d) = x.shape();
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let mut coords = vec![[0.0; 2]; n];
    if d <= n {
        let cov = centered.transpose() * &centered / (n as f64 - 1.0);
        for (a, (_, v)) in top_eigen(cov, 2)?.into_iter().enumerate() {
            let proj = &centered * v;
            for i in 0..n {
                coords[i][a] = proj[i];
            }
        }
    } else {
        let gram = &centered * centered.transpose();
        for (a, (lambda, u)) in top_eigen(gram, 2)?.into_iter().enumerate() {
            let s = lambda.max(0.0).sqrt();
            for i in 0..n {
                coords[i][a] = u[i] * s;
            }
        }
    }
    fix_signs(&mut coords);
    Ok(coords)
}

/// Classical (Torgerson) scaling of a squared-distance matrix.
fn classical_mds(sq: &DMatrix<f64>) -> Result<Vec<[f64; 2]>> {
    let n = sq.nrows();
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let mut coords = vec![[0.0; 2]; n];
    for (a, (lambda, u)) in top_eigen(b, 2)?.into_iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        for i in 0..n {
            coords[i][a] = u[i] * s;
        }
    }
    fix_signs(&mut coords);
    Ok(coords)
}

fn isomap(x: &DMatrix<f64>, k: usize) -> Result<Vec<[f64; 2]>> {
    let n = x.nrows();
    if k == 0 || k >= n {
        return Err(Error::Parameter(format!("isomap n_neighbors must be in [1, {}), got {k}", n)));
    }
    let sq = sq_distance_matrix(x);
    let mut graph: UnGraph<(), f64> = UnGraph::with_capacity(n, n * k);
    let nodes: Vec<NodeIndex> = (0..n).map(|_| graph.add_node(())).collect();
    let mut edges = std::collections::BTreeSet::new();
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| sq[(i, a)].total_cmp(&sq[(i, b)]).then(a.cmp(&b)));
        for &j in others.iter().take(k) {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    for (i, j) in edges {
        graph.add_edge(nodes[i], nodes[j], sq[(i, j)].sqrt());
    }
    let components = connected_components(&graph);
    if components > 1 {
        return Err(Error::DisconnectedGraph { components });
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let dist = dijkstra(&graph, nodes[i], None, |e| *e.weight());
            (0..n).map(|j| dist[&nodes[j]]).collect()
        })
        .collect();
    let geo = DMatrix::from_fn(n, n, |i, j| {
        // average the two directions so the matrix is exactly symmetric
        let g = 0.5 * (rows[i][j] + rows[j][i]);
        g * g
    });
    classical_mds(&geo)
}

fn grp(x: &DMatrix<f64>, seed: u64) -> Vec<[f64; 2]> {
    let d = x.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let r = DMatrix::from_fn(d, 2, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * scale
    });
    let proj = x * r;
    (0..x.nrows()).map(|i| [proj[(i, 0)], proj[(i, 1)]]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataSource;

    /// Residual of the best orthogonal alignment of `b` onto `a` (both centered).
    fn procrustes_residual(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
        let center = |p: &[[f64; 2]]| {
            let n = p.len() as f64;
            let m = [p.iter().map(|c| c[0]).sum::<f64>() / n, p.iter().map(|c| c[1]).sum::<f64>() / n];
            p.iter().map(|c| [c[0] - m[0], c[1] - m[1]]).collect::<Vec<_>>()
        };
        let (a, b) = (center(a), center(b));
        let mut m = nalgebra::Matrix2::zeros();
        for (p, q) in a.iter().zip(&b) {
            m += nalgebra::Matrix2::new(q[0] * p[0], q[0] * p[1], q[1] * p[0], q[1] * p[1]);
        }
        let svd = m.svd(true, true);
        let rot = svd.u.unwrap() * svd.v_t.unwrap();
        a.iter()
            .zip(&b)
            .map(|(p, q)| {
                let r = rot.transpose() * nalgebra::Vector2::new(q[0], q[1]);
                (r[0] - p[0]).powi(2) + (r[1] - p[1]).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    fn plane() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.7).sin() * 3.0, (t * 1.3).cos() + 0.1 * t]
            })
            .collect();
        Dataset::from_rows("plane", &rows, None, DataSource::Synthetic).unwrap()
    }

    fn as_coords(ds: &Dataset) -> Vec<[f64; 2]> {
        (0..ds.len()).map(|i| [ds.points()[(i, 0)], ds.points()[(i, 1)]]).collect()
    }

    #[test]
    fn pca_of_planar_data_is_rigid() {
        let ds = plane();
        let e = generate(&ds, &GeneratorSpec::Pca).unwrap();
        assert!(procrustes_residual(&as_coords(&ds), &e.coords) < 1e-8);
    }

    #[test]
    fn mds_recovers_planar_data() {
        let ds = plane();
        let e = generate(&ds, &GeneratorSpec::ClassicalMds).unwrap();
        assert!(procrustes_residual(&as_coords(&ds), &e.coords) < 1e-6);
    }

    #[test]
    fn wide_pca_uses_gram_path() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| (0..20).map(|j| ((i * 7 + j * 3) % 11) as f64).collect()).collect();
        let ds = Dataset::from_rows("wide", &rows, None, DataSource::Synthetic).unwrap();
        let pca_coords = generate(&ds, &GeneratorSpec::Pca).unwrap().coords;
        let mds_coords = generate(&ds, &GeneratorSpec::ClassicalMds).unwrap().coords;
        for (p, q) in pca_coords.iter().zip(&mds_coords) {
            assert!((p[0] - q[0]).abs() < 1e-8 && (p[1] - q[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn grp_is_seed_deterministic() {
        let ds = plane();
        let a = generate(&ds, &GeneratorSpec::Grp { seed: 3 }).unwrap();
        let b = generate(&ds, &GeneratorSpec::Grp { seed: 3 }).unwrap();
        let c = generate(&ds, &GeneratorSpec::Grp { seed: 4 }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.coords, c.coords);
    }

    #[test]
    fn isomap_reports_components() {
        let mut rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 0.0]).collect();
        rows.extend((0..10).map(|i| vec![i as f64 + 1000.0, 0.0]));
        let ds = Dataset::from_rows("split", &rows, None, DataSource::Synthetic).unwrap();
        let err = generate(&ds, &GeneratorSpec::Isomap { n_neighbors: 3 }).unwrap_err();
        assert!(matches!(err, Error::DisconnectedGraph { components: 2 }));
    }

    #[test]
    fn isomap_unrolls_a_curve() {
        // points on a half circle: geodesic order equals arclength order
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 39.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let ds = Dataset::from_rows("arc", &rows, None, DataSource::Synthetic).unwrap();
        let e = generate(&ds, &GeneratorSpec::Isomap { n_neighbors: 2 }).unwrap();
        let xs: Vec<f64> = e.coords.iter().map(|c| c[0]).collect();
        let increasing = xs.windows(2).all(|w| w[1] > w[0]);
        let decreasing = xs.windows(2).all(|w| w[1] < w[0]);
        assert!(increasing || decreasing);
    }

    #[test]
    fn spec_serde_shape() {
        let s = GeneratorSpec::Isomap { n_neighbors: 8 };
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"technique":"Isomap","params":{"n_neighbors":8}}"#);
        let pca: GeneratorSpec = serde_json::from_str(r#"{"technique":"PCA"}"#).unwrap();
        assert_eq!(pca, GeneratorSpec::Pca);
        assert!(serde_json::from_str::<GeneratorSpec>(r#"{"technique":"GRP","params":{}}"#).is_err());
    }
}
