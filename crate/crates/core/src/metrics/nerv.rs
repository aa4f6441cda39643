//! Neighbor-retrieval quality: smoothed precision and recall between
//! perplexity-calibrated neighbor distributions in both spaces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affinity::calibrate_row;
use crate::data::DistanceRankModel;
use crate::error::{Error, Result};

/// Probabilities below this are floored inside the KL divergences.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NervConfig {
    pub perplexity: f64,
}

impl Default for NervConfig {
    fn default() -> Self {
        Self { perplexity: 5.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NervReport {
    /// Mean of precision and recall, clamped to `[0, 1]`.
    pub value: f64,
    pub smoothed_recall: f64,
    pub smoothed_precision: f64,
    pub beta_hd: Vec<f64>,
    pub beta_ld: Vec<f64>,
}

pub(crate) fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            let a = a.max(PROB_FLOOR);
            a * (a / b.max(PROB_FLOOR)).ln()
        })
        .sum()
}

pub fn nerv_report(drm: &DistanceRankModel, cfg: &NervConfig) -> Result<NervReport> {
    let n = drm.n();
    if !(cfg.perplexity > 0.0 && cfg.perplexity < n as f64) {
        return Err(Error::Parameter(format!(
            "NeRV perplexity {} must lie in (0, n={n})",
            cfg.perplexity
        )));
    }
    let rows: Vec<Result<(f64, f64, f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let others = (0..n).filter(|&j| j != i);
            let hd: Vec<f64> = others.clone().map(|j| drm.d_hd(i, j).powi(2)).collect();
            let ld: Vec<f64> = others.map(|j| drm.d_ld(i, j).powi(2)).collect();
            let p = calibrate_row(&hd, cfg.perplexity, i)?;
            let q = calibrate_row(&ld, cfg.perplexity, i)?;
            Ok((kl(&p.probs, &q.probs), kl(&q.probs, &p.probs), p.beta, q.beta))
        })
        .collect();
    let mut recall_kl = 0.0;
    let mut precision_kl = 0.0;
    let mut beta_hd = Vec::with_capacity(n);
    let mut beta_ld = Vec::with_capacity(n);
    for r in rows {
        let (a, b, bh, bl) = r?;
        recall_kl += a;
        precision_kl += b;
        beta_hd.push(bh);
        beta_ld.push(bl);
    }
    let norm = ((n - 1) as f64).ln();
    let recall = 1.0 - recall_kl / n as f64 / norm;
    let precision = 1.0 - precision_kl / n as f64 / norm;
    Ok(NervReport {
        value: ((recall + precision) / 2.0).clamp(0.0, 1.0),
        smoothed_recall: recall,
        smoothed_precision: precision,
        beta_hd,
        beta_ld,
    })
}

pub fn nerv(drm: &DistanceRankModel, cfg: &NervConfig) -> Result<f64> {
    nerv_report(drm, cfg).map(|r| r.value)
}
