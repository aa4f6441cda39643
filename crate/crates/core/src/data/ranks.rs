use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dist2d, sq_dist, Dataset, Embedding};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    #[default]
    Euclidean,
}

/// Pairwise distances and neighbor ranks in both spaces.
///
/// Rank `r[i][j]` is the 1-based position of `j` when the other points are
/// sorted by distance to `i`; equal distances are ordered by point index.
#[derive(Debug, Clone)]
pub struct DistanceRankModel {
    n: usize,
    d_hd: Vec<f64>,
    d_ld: Vec<f64>,
    r_hd: Vec<u32>,
    r_ld: Vec<u32>,
    order_hd: Vec<u32>,
    order_ld: Vec<u32>,
}

impl DistanceRankModel {
    pub fn build(ds: &Dataset, emb: &Embedding, metric: DistanceMetric) -> Result<Self> {
        emb.check_belongs_to(ds)?;
        let DistanceMetric::Euclidean = metric;
        let n = ds.len();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| ds.row(i)).collect();
        let d_hd = pairwise(n, |i, j| sq_dist(&rows[i], &rows[j]).sqrt());
        let d_ld = pairwise(n, |i, j| dist2d(emb.coords[i], emb.coords[j]));
        Self::from_distances(n, d_hd, d_ld)
    }

    /// Builds the model from two row-major `n×n` distance matrices.
    pub fn from_distances(n: usize, d_hd: Vec<f64>, d_ld: Vec<f64>) -> Result<Self> {
        if d_hd.len() != n * n || d_ld.len() != n * n {
            return Err(Error::Structural(format!(
                "distance matrices must be {n}x{n}"
            )));
        }
        if n < 3 {
            return Err(Error::Data(format!("need at least 3 points, got {n}")));
        }
        for (name, d) in [("HD", &d_hd), ("LD", &d_ld)] {
            if let Some(pos) = d.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "non-finite {name} distance between points {} and {}",
                    pos / n,
                    pos % n
                )));
            }
        }
        let (order_hd, r_hd) = rank_rows(n, &d_hd);
        let (order_ld, r_ld) = rank_rows(n, &d_ld);
        Ok(Self {
            n,
            d_hd,
            d_ld,
            r_hd,
            r_ld,
            order_hd,
            order_ld,
        })
    }

    /// The same model with the two spaces exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            n: self.n,
            d_hd: self.d_ld.clone(),
            d_ld: self.d_hd.clone(),
            r_hd: self.r_ld.clone(),
            r_ld: self.r_hd.clone(),
            order_hd: self.order_ld.clone(),
            order_ld: self.order_hd.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_hd(&self, i: usize, j: usize) -> f64 {
        self.d_hd[i * self.n + j]
    }

    pub fn d_ld(&self, i: usize, j: usize) -> f64 {
        self.d_ld[i * self.n + j]
    }

    /// Rank of `j` among the HD neighbors of `i`; zero on the diagonal.
    pub fn r_hd(&self, i: usize, j: usize) -> u32 {
        self.r_hd[i * self.n + j]
    }

    pub fn r_ld(&self, i: usize, j: usize) -> u32 {
        self.r_ld[i * self.n + j]
    }

    /// Other points sorted by HD distance to `i`.
    pub fn hd_order(&self, i: usize) -> &[u32] {
        let m = self.n - 1;
        &self.order_hd[i * m..(i + 1) * m]
    }

    pub fn ld_order(&self, i: usize) -> &[u32] {
        let m = self.n - 1;
        &self.order_ld[i * m..(i + 1) * m]
    }

    /// Upper-triangle `(d_hd, d_ld)` pairs in row-major order.
    pub fn upper_pairs(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            (i + 1..n).map(move |j| (i, j, self.d_hd(i, j), self.d_ld(i, j)))
        })
    }
}

fn pairwise(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Vec<f64> {
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| if j > i { f(i, j) } else { 0.0 }).collect())
        .collect();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            d[i * n + j] = upper[i][j];
            d[j * n + i] = upper[i][j];
        }
    }
    d
}

fn rank_rows(n: usize, d: &[f64]) -> (Vec<u32>, Vec<u32>) {
    let rows: Vec<(Vec<u32>, Vec<u32>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = &d[i * n..(i + 1) * n];
            let mut order: Vec<u32> = (0..n as u32).filter(|&j| j as usize != i).collect();
            order.sort_by(|&a, &b| {
                row[a as usize]
                    .total_cmp(&row[b as usize])
                    .then(a.cmp(&b))
            });
            let mut ranks = vec![0u32; n];
            for (pos, &j) in order.iter().enumerate() {
                ranks[j as usize] = pos as u32 + 1;
            }
            (order, ranks)
        })
        .collect();
    let mut order = Vec::with_capacity(n * (n - 1));
    let mut ranks = Vec::with_capacity(n * n);
    for (o, r) in rows {
        order.extend(o);
        ranks.extend(r);
    }
    (order, ranks)
}

/// HD and LD k-neighborhoods of every point, with intruders `U` and escapees `V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodPair {
    pub k: usize,
    /// `nu[i]`: HD k-nearest neighbors of `i`, sorted by index.
    pub nu: Vec<Vec<usize>>,
    /// `rho[i]`: LD k-nearest neighbors of `i`, sorted by index.
    pub rho: Vec<Vec<usize>>,
    /// `u[i] = rho[i] \ nu[i]`.
    pub u: Vec<Vec<usize>>,
    /// `v[i] = nu[i] \ rho[i]`.
    pub v: Vec<Vec<usize>>,
}

impl NeighborhoodPair {
    pub fn n(&self) -> usize {
        self.nu.len()
    }

    /// Total number of shared neighbors, `sum_i |nu_i ∩ rho_i|`.
    pub fn shared_count(&self) -> usize {
        self.nu
            .iter()
            .zip(&self.u)
            .map(|(nu, u)| nu.len() - u.len())
            .sum()
    }
}

pub fn neighborhoods(drm: &DistanceRankModel, k: usize) -> Result<NeighborhoodPair> {
    let n = drm.n();
    if k < 1 || k + 2 > n {
        return Err(Error::Parameter(format!(
            "neighborhood size k={k} outside 1..={}",
            n.saturating_sub(2)
        )));
    }
    let take = |order: &[u32]| {
        let mut s: Vec<usize> = order[..k].iter().map(|&j| j as usize).collect();
        s.sort_unstable();
        s
    };
    let nu: Vec<Vec<usize>> = (0..n).map(|i| take(drm.hd_order(i))).collect();
    let rho: Vec<Vec<usize>> = (0..n).map(|i| take(drm.ld_order(i))).collect();
    let diff = |a: &Vec<usize>, b: &Vec<usize>| -> Vec<usize> {
        a.iter().copied().filter(|x| b.binary_search(x).is_err()).collect()
    };
    let u = rho.iter().zip(&nu).map(|(r, v)| diff(r, v)).collect();
    let v = nu.iter().zip(&rho).map(|(v, r)| diff(v, r)).collect();
    Ok(NeighborhoodPair { k, nu, rho, u, v })
}
