//! Distance-preservation measures: non-metric (Kruskal), Sammon and CCA
//! stress, and the correlation of pairwise distances.

use serde::{Deserialize, Serialize};

use super::isotonic::isotonic_fit;
use crate::data::DistanceRankModel;
use crate::error::{Error, Result};
use crate::stats;

/// Kruskal stress-1 against the best monotone refit of LD distances on the
/// HD distance order (ties in HD distance ordered by pair index).
pub fn kruskal_stress(drm: &DistanceRankModel) -> Result<f64> {
    let mut pairs: Vec<(f64, f64)> = drm.upper_pairs().map(|(_, _, h, l)| (h, l)).collect();
    // stable: equal HD distances keep row-major pair order
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ld: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let denom: f64 = ld.iter().map(|d| d * d).sum();
    if denom == 0.0 {
        return Err(Error::DegenerateEmbedding("all LD distances are zero".into()));
    }
    let fit = isotonic_fit(&ld);
    let num: f64 = ld.iter().zip(&fit).map(|(d, f)| (d - f).powi(2)).sum();
    Ok((num / denom).sqrt().clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SammonStress {
    pub value: f64,
    /// Pairs skipped because their HD distance is zero.
    pub excluded_pairs: usize,
}

/// Sammon's non-linear mapping stress.
pub fn sammon_stress(drm: &DistanceRankModel) -> Result<SammonStress> {
    let (mut total, mut acc, mut excluded) = (0.0, 0.0, 0usize);
    for (_, _, h, l) in drm.upper_pairs() {
        if h == 0.0 {
            excluded += 1;
            continue;
        }
        total += h;
        acc += (h - l).powi(2) / h;
    }
    if total == 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "nlm",
            reason: "every HD distance is zero".into(),
        });
    }
    if excluded > 0 {
        log::warn!("sammon stress: excluded {excluded} pairs with zero HD distance");
    }
    Ok(SammonStress {
        value: acc / total,
        excluded_pairs: excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcaStress {
    pub value: f64,
    pub radius: f64,
}

/// Curvilinear component analysis stress with a hard ball weighting:
/// only pairs closer than `radius` in LD count. `None` uses the median LD
/// distance.
pub fn cca_stress(drm: &DistanceRankModel, radius: Option<f64>) -> Result<CcaStress> {
    let pairs: Vec<(f64, f64)> = drm.upper_pairs().map(|(_, _, h, l)| (h, l)).collect();
    let radius = match radius {
        Some(r) if r.is_finite() && r >= 0.0 => r,
        Some(r) => return Err(Error::Parameter(format!("CCA radius must be >= 0, got {r}"))),
        None => stats::median(&pairs.iter().map(|p| p.1).collect::<Vec<_>>()),
    };
    let sum: f64 = pairs
        .iter()
        .filter(|(_, l)| *l < radius)
        .map(|(h, l)| (h - l).powi(2))
        .sum();
    Ok(CcaStress {
        value: sum / pairs.len() as f64,
        radius,
    })
}

/// Pearson correlation of the HD and LD pairwise distances.
///
/// When a side has constant distances the correlation is undefined; it is
/// reported as 1 if both sides are constant and 0 otherwise.
pub fn distance_correlation(drm: &DistanceRankModel) -> f64 {
    let (hd, ld): (Vec<f64>, Vec<f64>) = drm.upper_pairs().map(|(_, _, h, l)| (h, l)).unzip();
    match stats::pearson(&hd, &ld) {
        Some(r) => r,
        None => {
            let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
            if constant(&hd) && constant(&ld) {
                1.0
            } else {
                0.0
            }
        }
    }
}
