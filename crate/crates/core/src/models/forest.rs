//! Bagged classification forest for good/bad projection labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, GrowParams, Tree};
use super::{check_features, check_row, Attribution, Scorer};
use crate::error::{Error, Result};

pub const FOREST_FORMAT: &str = "drjudge-forest";
pub const FOREST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Draw a bootstrap sample per tree; otherwise every tree sees all rows.
    pub bootstrap: bool,
    /// Features tried per split; `None` uses `ceil(sqrt(F))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: 10,
            bootstrap: true,
            max_features: None,
            seed: 0,
        }
    }
}

impl ForestConfig {
    /// The fixed tuning grid: 100 or 200 trees, depth 5 or 10.
    pub fn grid(seed: u64) -> Vec<ForestConfig> {
        let mut out = Vec::new();
        for n_trees in [100, 200] {
            for max_depth in [5, 10] {
                out.push(ForestConfig {
                    n_trees,
                    max_depth,
                    seed,
                    ..Default::default()
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format: String,
    pub version: u32,
    pub config: ForestConfig,
    pub feature_names: Vec<String>,
    /// Node values are the fraction of "good" training rows reaching the node.
    pub trees: Vec<Tree>,
}

pub fn fit_forest(x: &[Vec<f64>], y: &[bool], feature_names: Vec<String>, cfg: &ForestConfig) -> Result<ForestModel> {
    check_features(x, &feature_names)?;
    if x.len() != y.len() {
        return Err(Error::Structural(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if cfg.n_trees == 0 {
        return Err(Error::Parameter("a forest needs at least one tree".into()));
    }
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::Training("forest training needs both good and bad labels".into()));
    }
    let f = feature_names.len();
    let params = GrowParams {
        max_depth: cfg.max_depth,
        min_leaf: 1,
        max_features: Some(cfg.max_features.unwrap_or((f as f64).sqrt().ceil() as usize).clamp(1, f)),
    };
    let targets: Vec<f64> = y.iter().map(|&v| v as u8 as f64).collect();
    let n = x.len();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let rows: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(x, &targets, rows, params, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        format: FOREST_FORMAT.into(),
        version: FOREST_VERSION,
        config: *cfg,
        feature_names,
        trees,
    })
}

impl ForestModel {
    /// Mean leaf probability over trees.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        check_row(x, &self.feature_names)?;
        if self.trees.is_empty() {
            return Err(Error::Parameter("forest has no trees".into()));
        }
        Ok(self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64)
    }

    /// Tree-path attribution averaged over trees.
    pub fn attribute(&self, x: &[f64]) -> Result<Attribution> {
        let prediction = self.predict_proba(x)?;
        let mut contributions = vec![0.0; self.feature_names.len()];
        let mut baseline = 0.0;
        for t in &self.trees {
            baseline += t.path_contributions(x, &mut contributions);
        }
        let k = self.trees.len() as f64;
        contributions.iter_mut().for_each(|c| *c /= k);
        Ok(Attribution {
            baseline: baseline / k,
            contributions,
            prediction,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ForestModel = serde_json::from_str(s)?;
        if m.format != FOREST_FORMAT || m.version != FOREST_VERSION {
            return Err(Error::Data(format!(
                "unsupported forest document {} v{}",
                m.format, m.version
            )));
        }
        Ok(m)
    }
}

impl Scorer for ForestModel {
    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn score(&self, x: &[f64]) -> Result<f64> {
        self.predict_proba(x)
    }

    fn attribute(&self, x: &[f64]) -> Result<Attribution> {
        ForestModel::attribute(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::Node;
    use crate::stats::roc_auc;

    fn names(f: usize) -> Vec<String> {
        (0..f).map(|i| format!("f{i}")).collect()
    }

    fn toy() -> (Vec<Vec<f64>>, Vec<bool>) {
        let x: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![(i % 10) as f64, ((i * 7) % 13) as f64, i as f64 / 60.0])
            .collect();
        let y = x.iter().map(|r| r[0] >= 5.0).collect();
        (x, y)
    }

    #[test]
    fn separable_feature_gives_perfect_auc() {
        let (x, y) = toy();
        let m = fit_forest(&x, &y, names(3), &ForestConfig { n_trees: 50, ..Default::default() }).unwrap();
        let scores: Vec<f64> = x.iter().map(|r| m.predict_proba(r).unwrap()).collect();
        assert_eq!(roc_auc(&scores, &y), Some(1.0));
    }

    #[test]
    fn constant_features_predict_prior() {
        let x = vec![vec![1.0, 2.0]; 8];
        let y = vec![true, false, false, true, false, false, false, true];
        let cfg = ForestConfig {
            n_trees: 5,
            bootstrap: false,
            ..Default::default()
        };
        let m = fit_forest(&x, &y, names(2), &cfg).unwrap();
        assert_eq!(m.predict_proba(&[1.0, 2.0]).unwrap(), 3.0 / 8.0);
        assert_eq!(m.predict_proba(&[9.0, -4.0]).unwrap(), 3.0 / 8.0);
    }

    #[test]
    fn seed_determinism_and_json_round_trip() {
        let (x, y) = toy();
        let cfg = ForestConfig {
            n_trees: 10,
            seed: 42,
            ..Default::default()
        };
        let a = fit_forest(&x, &y, names(3), &cfg).unwrap();
        let b = fit_forest(&x.clone(), &y.clone(), names(3), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ForestModel::from_json(&a.to_json().unwrap()).unwrap(), a);
        assert!(a.trees.iter().all(|t| t.depth() <= cfg.max_depth));
    }

    #[test]
    fn single_class_is_a_training_error() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            fit_forest(&x, &[true, true], names(1), &ForestConfig::default()),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn hand_traced_forest() {
        let stump = |f: usize, t: f64, lo: f64, hi: f64| Tree {
            nodes: vec![
                Node::Split {
                    feature: f,
                    threshold: t,
                    left: 1,
                    right: 2,
                    value: (lo + hi) / 2.0,
                    count: 4,
                },
                Node::Leaf { value: lo, count: 2 },
                Node::Leaf { value: hi, count: 2 },
            ],
        };
        let m = ForestModel {
            format: FOREST_FORMAT.into(),
            version: FOREST_VERSION,
            config: ForestConfig::default(),
            feature_names: names(2),
            trees: vec![stump(0, 0.5, 0.0, 1.0), stump(1, 2.0, 0.2, 0.6), stump(0, 0.1, 0.3, 0.9)],
        };
        // x = (0.3, 5.0): leaves 0.0, 0.6, 0.9
        let x = [0.3, 5.0];
        assert!((m.predict_proba(&x).unwrap() - 0.5).abs() < 1e-15);
        let a = m.attribute(&x).unwrap();
        // feature 0: (0.0 - 0.5) + (0.9 - 0.6); feature 1: 0.6 - 0.4; over 3 trees
        assert!((a.contributions[0] - (-0.2 / 3.0)).abs() < 1e-15);
        assert!((a.contributions[1] - (0.2 / 3.0)).abs() < 1e-15);
        assert!((a.baseline + a.contributions.iter().sum::<f64>() - a.prediction).abs() < 1e-12);
    }

    #[test]
    fn stump_attribution_lands_on_its_feature() {
        let (x, y) = toy();
        let cfg = ForestConfig {
            n_trees: 20,
            max_depth: 1,
            max_features: Some(3),
            ..Default::default()
        };
        let m = fit_forest(&x, &y, names(3), &cfg).unwrap();
        let a = m.attribute(&x[7]).unwrap();
        assert!(a.contributions[0] > 0.0);
        assert_eq!(a.contributions[1], 0.0);
        assert_eq!(a.contributions[2], 0.0);
    }
}
