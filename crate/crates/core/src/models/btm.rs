//! Lasso-penalized Bradley-Terry model over metric features.
//!
//! `P(i beats j) = logistic(s_i - s_j)` with `s = w0 + w . z` and `z` the
//! standardized feature vector. The intercept cancels in every probability.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_row, Attribution, Scorer};
use crate::error::{Error, Result};
use crate::preferences::PairwisePreference;

pub const BTM_FORMAT: &str = "drjudge-btm";
pub const BTM_VERSION: u32 = 1;
pub const DEFAULT_LAMBDA: f64 = 0.021;
pub const MAX_ITERATIONS: usize = 10_000;
pub const TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BtmConfig {
    pub lambda: f64,
}

impl Default for BtmConfig {
    fn default() -> Self {
        Self { lambda: DEFAULT_LAMBDA }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtmModel {
    pub format: String,
    pub version: u32,
    /// Not identifiable from pairwise data; kept at 0.
    pub w0: f64,
    /// Weights in standardized units.
    pub w: Vec<f64>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub lambda: f64,
    pub feature_names: Vec<String>,
    pub iterations: usize,
    pub objective: f64,
}

fn logistic(d: f64) -> f64 {
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        1.0 - 1.0 / (1.0 + d.exp())
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl BtmModel {
    pub fn active_features(&self) -> usize {
        self.w.iter().filter(|&&v| v != 0.0).count()
    }

    fn diff(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(self.w.iter().zip(&self.scales))
            .map(|((x, y), (w, s))| w * ((x - y) / s))
            .sum()
    }

    /// Probability that the item with features `a` is preferred over `b`.
    /// Exactly antisymmetric: `p(a, b) + p(b, a) == 1`.
    pub fn probability(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_row(a, &self.feature_names)?;
        check_row(b, &self.feature_names)?;
        Ok(logistic(self.diff(a, b)))
    }

    pub fn utility(&self, x: &[f64]) -> Result<f64> {
        check_row(x, &self.feature_names)?;
        Ok(self.w0
            + x.iter()
                .zip(&self.means)
                .zip(self.w.iter().zip(&self.scales))
                .map(|((v, m), (w, s))| w * ((v - m) / s))
                .sum::<f64>())
    }

    /// Weights mapped back to raw feature units.
    pub fn raw_weights(&self) -> Vec<f64> {
        self.w.iter().zip(&self.scales).map(|(w, s)| w / s).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: BtmModel = serde_json::from_str(s)?;
        if m.format != BTM_FORMAT || m.version != BTM_VERSION {
            return Err(Error::Data(format!("unsupported BTm document {} v{}", m.format, m.version)));
        }
        Ok(m)
    }
}

impl Scorer for BtmModel {
    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn score(&self, x: &[f64]) -> Result<f64> {
        self.utility(x)
    }

    fn attribute(&self, x: &[f64]) -> Result<Attribution> {
        let prediction = self.utility(x)?;
        let contributions = x
            .iter()
            .zip(&self.means)
            .zip(self.w.iter().zip(&self.scales))
            .map(|((v, m), (w, s))| w * ((v - m) / s))
            .collect();
        Ok(Attribution {
            baseline: self.w0,
            contributions,
            prediction,
        })
    }
}

struct Problem {
    /// Standardized feature difference `z_a - z_b` per pair.
    dz: Vec<Vec<f64>>,
    target: Vec<f64>,
    weight: Vec<f64>,
}

impl Problem {
    fn loss(&self, w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((dz, &t), &n) in self.dz.iter().zip(&self.target).zip(&self.weight) {
            let d: f64 = dz.iter().zip(w).map(|(a, b)| a * b).sum();
            acc += n * (t * softplus(-d) + (1.0 - t) * softplus(d));
        }
        acc
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; w.len()];
        for ((dz, &t), &n) in self.dz.iter().zip(&self.target).zip(&self.weight) {
            let d: f64 = dz.iter().zip(w).map(|(a, b)| a * b).sum();
            let r = n * (logistic(d) - t);
            for (gk, zk) in g.iter_mut().zip(dz) {
                *gk += r * zk;
            }
        }
        g
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Fits by proximal gradient descent (ISTA) with backtracking on the
/// comparison-weighted mean negative log-likelihood plus `lambda * |w|_1`.
///
/// `features` maps embedding id to its raw feature vector. Standardization
/// uses every embedding that appears in `prefs`.
pub fn fit_btm(
    prefs: &[PairwisePreference],
    features: &BTreeMap<String, Vec<f64>>,
    feature_names: Vec<String>,
    cfg: &BtmConfig,
) -> Result<BtmModel> {
    if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
        return Err(Error::Parameter(format!("lambda must be >= 0, got {}", cfg.lambda)));
    }
    let f = feature_names.len();
    let lookup = |id: &str| -> Result<&Vec<f64>> {
        let v = features
            .get(id)
            .ok_or_else(|| Error::Structural(format!("no feature vector for embedding {id}")))?;
        check_row(v, &feature_names)?;
        Ok(v)
    };
    let decided: Vec<&PairwisePreference> = prefs.iter().filter(|p| p.n_comparisons > 0).collect();
    if decided.is_empty() {
        return Err(Error::Training("BTm needs at least one decided pair".into()));
    }
    let mut ids: Vec<&str> = decided.iter().flat_map(|p| [p.emb_a.as_str(), p.emb_b.as_str()]).collect();
    ids.sort_unstable();
    ids.dedup();
    let rows: Vec<&Vec<f64>> = ids.iter().map(|id| lookup(id)).collect::<Result<_>>()?;
    let mut means = vec![0.0; f];
    let mut scales = vec![1.0; f];
    for k in 0..f {
        let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        let m = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / col.len() as f64;
        means[k] = m;
        scales[k] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }

    let total: f64 = decided.iter().map(|p| p.n_comparisons as f64).sum();
    let mut problem = Problem {
        dz: Vec::with_capacity(decided.len()),
        target: Vec::with_capacity(decided.len()),
        weight: Vec::with_capacity(decided.len()),
    };
    for p in &decided {
        let (a, b) = (lookup(&p.emb_a)?, lookup(&p.emb_b)?);
        problem.dz.push((0..f).map(|k| (a[k] - b[k]) / scales[k]).collect());
        problem.target.push(p.pct_a_over_b);
        problem.weight.push(p.n_comparisons as f64 / total);
    }

    let penalty = |w: &[f64]| cfg.lambda * w.iter().map(|v| v.abs()).sum::<f64>();
    let mut w = vec![0.0; f];
    let mut loss = problem.loss(&w);
    let mut objective = loss;
    let mut step = 1.0;
    let mut trace = vec![objective];
    for iter in 1..=MAX_ITERATIONS {
        let g = problem.gradient(&w);
        let (next, next_loss) = loop {
            let cand: Vec<f64> = w
                .iter()
                .zip(&g)
                .map(|(wk, gk)| soft_threshold(wk - step * gk, step * cfg.lambda))
                .collect();
            let cand_loss = problem.loss(&cand);
            let delta: Vec<f64> = cand.iter().zip(&w).map(|(c, o)| c - o).collect();
            let lin: f64 = delta.iter().zip(&g).map(|(d, gk)| d * gk).sum();
            let quad: f64 = delta.iter().map(|d| d * d).sum::<f64>() / (2.0 * step);
            if cand_loss <= loss + lin + quad + 1e-15 || step < 1e-20 {
                break (cand, cand_loss);
            }
            step *= 0.5;
        };
        let next_objective = next_loss + penalty(&next);
        let decrease = objective - next_objective;
        w = next;
        loss = next_loss;
        objective = next_objective;
        trace.push(objective);
        if decrease.abs() < TOLERANCE {
            return Ok(BtmModel {
                format: BTM_FORMAT.into(),
                version: BTM_VERSION,
                w0: 0.0,
                w,
                means,
                scales,
                lambda: cfg.lambda,
                feature_names,
                iterations: iter,
                objective,
            });
        }
        if !objective.is_finite() {
            break;
        }
    }
    let tail: Vec<String> = trace.iter().rev().take(5).map(|v| format!("{v:.3e}")).collect();
    Err(Error::Numerical(format!(
        "BTm did not converge in {MAX_ITERATIONS} iterations; last objectives {}",
        tail.join(", ")
    )))
}

/// Fraction of pairs whose majority the model predicts (P > 0.5 vs pct > 0.5).
/// Ties (pct = 0.5) are skipped, as are pairs below `min_agreement` when
/// given. `None` when nothing is left to score.
pub fn btm_accuracy(
    m: &BtmModel,
    prefs: &[PairwisePreference],
    features: &BTreeMap<String, Vec<f64>>,
    min_agreement: Option<f64>,
) -> Result<Option<f64>> {
    let (mut right, mut total) = (0usize, 0usize);
    for p in prefs {
        if p.n_comparisons == 0 || p.pct_a_over_b == 0.5 {
            continue;
        }
        if let Some(a) = min_agreement {
            if p.pct_a_over_b.max(1.0 - p.pct_a_over_b) < a {
                continue;
            }
        }
        let fa = features
            .get(&p.emb_a)
            .ok_or_else(|| Error::Structural(format!("no feature vector for embedding {}", p.emb_a)))?;
        let fb = features
            .get(&p.emb_b)
            .ok_or_else(|| Error::Structural(format!("no feature vector for embedding {}", p.emb_b)))?;
        let prob = m.probability(fa, fb)?;
        total += 1;
        right += ((prob > 0.5) == (p.pct_a_over_b > 0.5)) as usize;
    }
    Ok((total > 0).then(|| right as f64 / total as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(w: Vec<f64>) -> BtmModel {
        let f = w.len();
        BtmModel {
            format: BTM_FORMAT.into(),
            version: BTM_VERSION,
            w0: 3.0,
            w,
            means: vec![0.0; f],
            scales: vec![1.0; f],
            lambda: 0.0,
            feature_names: (0..f).map(|i| format!("f{i}")).collect(),
            iterations: 0,
            objective: 0.0,
        }
    }

    fn pref(a: &str, b: &str, pct: f64, n: u32) -> PairwisePreference {
        PairwisePreference {
            dataset_id: "d".into(),
            emb_a: a.into(),
            emb_b: b.into(),
            pct_a_over_b: pct,
            n_comparisons: n,
        }
    }

    #[test]
    fn probability_examples() {
        let m = model(vec![1.0, 0.0]);
        assert_eq!(m.probability(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.5);
        assert_eq!(model(vec![0.0, 0.0]).probability(&[5.0, 1.0], &[0.0, 0.0]).unwrap(), 0.5);
        let p = m.probability(&[2.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((p - 1.0 / (1.0 + (-2f64).exp())).abs() < 1e-15);
        assert!(m.probability(&[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn antisymmetry_is_exact() {
        let m = model(vec![0.37, -1.3, 2.2]);
        let a = [0.1, 0.77, -3.0];
        let b = [1.9, -0.4, 0.05];
        assert_eq!(m.probability(&a, &b).unwrap() + m.probability(&b, &a).unwrap(), 1.0);
    }

    fn corpus() -> (Vec<PairwisePreference>, BTreeMap<String, Vec<f64>>) {
        let mut feats = BTreeMap::new();
        for i in 0..6 {
            feats.insert(format!("e{i}"), vec![i as f64, ((i * 5) % 7) as f64]);
        }
        let mut prefs = Vec::new();
        for i in 0..6 {
            for j in (i + 1)..6 {
                // higher first feature usually wins
                let pct = if j > i { 0.2 } else { 0.8 };
                prefs.push(pref(&format!("e{i}"), &format!("e{j}"), pct, 5));
            }
        }
        (prefs, feats)
    }

    #[test]
    fn large_lambda_shrinks_everything() {
        let (prefs, feats) = corpus();
        let m = fit_btm(&prefs, &feats, vec!["a".into(), "b".into()], &BtmConfig { lambda: 1e6 }).unwrap();
        assert_eq!(m.active_features(), 0);
        assert_eq!(m.probability(&feats["e0"], &feats["e5"]).unwrap(), 0.5);
    }

    #[test]
    fn learns_the_preferred_direction() {
        let (prefs, feats) = corpus();
        let m = fit_btm(&prefs, &feats, vec!["a".into(), "b".into()], &BtmConfig { lambda: 1e-3 }).unwrap();
        assert!(m.w[0] > 0.0);
        assert_eq!(btm_accuracy(&m, &prefs, &feats, None).unwrap(), Some(1.0));
        assert_eq!(BtmModel::from_json(&m.to_json().unwrap()).unwrap(), m);
    }

    #[test]
    fn accuracy_skips_ties_and_weak_pairs() {
        let m = model(vec![1.0]);
        let mut feats = BTreeMap::new();
        feats.insert("a".to_string(), vec![1.0]);
        feats.insert("b".to_string(), vec![0.0]);
        let prefs = vec![pref("a", "b", 0.5, 4), pref("a", "b", 0.6, 5), pref("a", "b", 0.1, 10)];
        assert_eq!(btm_accuracy(&m, &prefs, &feats, None).unwrap(), Some(0.5));
        assert_eq!(btm_accuracy(&m, &prefs, &feats, Some(0.8)).unwrap(), Some(0.0));
        assert_eq!(btm_accuracy(&m, &prefs[..1], &feats, None).unwrap(), None);
    }

    #[test]
    fn no_pairs_is_a_training_error() {
        let feats = BTreeMap::new();
        assert!(matches!(
            fit_btm(&[], &feats, vec![], &BtmConfig::default()),
            Err(Error::Training(_))
        ));
    }
}
