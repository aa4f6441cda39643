//! Neighborhood-preservation metrics: LCMC, trustworthiness, continuity and
//! the co-ranking curves behind AUC_logRNX.

use crate::data::{DistanceRankModel, NeighborhoodPair};
use crate::error::{Error, Result};

/// `(1/n) * sum_i |nu_i ∩ rho_i|`, in `[0, k]`.
pub fn lcmc_raw(nb: &NeighborhoodPair) -> f64 {
    nb.shared_count() as f64 / nb.n() as f64
}

/// LCMC divided by `k`, so that perfect preservation scores 1.
pub fn lcmc(nb: &NeighborhoodPair) -> f64 {
    lcmc_raw(nb) / nb.k as f64
}

fn rank_penalty(
    drm: &DistanceRankModel,
    nb: &NeighborhoodPair,
    sets: &[Vec<usize>],
    rank: impl Fn(usize, usize) -> u32,
) -> Result<f64> {
    let n = drm.n();
    let k = nb.k;
    if 2 * k >= n {
        return Err(Error::Parameter(format!("k={k} must be below n/2 (n={n})")));
    }
    let total: u64 = sets
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.iter().map(move |&j| (i, j)))
        .map(|(i, j)| (rank(i, j) as u64).saturating_sub(k as u64))
        .sum();
    let (nf, kf) = (n as f64, k as f64);
    Ok(1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * total as f64)
}

/// Penalizes LD neighbors that are not HD neighbors by their HD rank.
pub fn trustworthiness(drm: &DistanceRankModel, nb: &NeighborhoodPair) -> Result<f64> {
    rank_penalty(drm, nb, &nb.u, |i, j| drm.r_hd(i, j))
}

/// Penalizes HD neighbors missing from the LD neighborhood by their LD rank.
pub fn continuity(drm: &DistanceRankModel, nb: &NeighborhoodPair) -> Result<f64> {
    rank_penalty(drm, nb, &nb.v, |i, j| drm.r_ld(i, j))
}

/// `Q_NX(k)` and `R_NX(k)` for every `k` in `1..=n-2`, stored at index `k-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoRankingCurves {
    pub q_nx: Vec<f64>,
    pub r_nx: Vec<f64>,
    /// `sum_i |nu_i^k ∩ rho_i^k|` for each `k`.
    pub shared: Vec<u64>,
}

/// Computes all co-ranking curves in `O(n^2)`.
///
/// `j` is a shared k-neighbor of `i` exactly when both of its ranks are at
/// most `k`, so counting pairs by `max(r_hd, r_ld)` and accumulating gives
/// every `k` at once.
pub fn coranking_curves(drm: &DistanceRankModel) -> Result<CoRankingCurves> {
    let n = drm.n();
    if n < 4 {
        return Err(Error::Parameter(format!("co-ranking needs n >= 4, got {n}")));
    }
    let mut by_max_rank = vec![0u64; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                by_max_rank[drm.r_hd(i, j).max(drm.r_ld(i, j)) as usize] += 1;
            }
        }
    }
    let (mut q_nx, mut r_nx, mut shared) = (Vec::new(), Vec::new(), Vec::new());
    let mut acc = 0u64;
    let nf = n as f64;
    for k in 1..=n - 2 {
        acc += by_max_rank[k];
        let kf = k as f64;
        let q = acc as f64 / (nf * kf);
        shared.push(acc);
        q_nx.push(q);
        r_nx.push(((nf - 1.0) * q - kf) / (nf - 1.0 - kf));
    }
    Ok(CoRankingCurves { q_nx, r_nx, shared })
}

/// Log-weighted average of `R_NX(k)`, emphasizing small neighborhoods.
pub fn auc_log_rnx(curves: &CoRankingCurves) -> f64 {
    let (num, den) = curves
        .r_nx
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(num, den), (idx, r)| {
            let w = 1.0 / (idx + 1) as f64;
            (num + r * w, den + w)
        });
    num / den
}
