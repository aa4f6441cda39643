//! LambdaMART ranker: boosted regression trees fit to |ΔNDCG|-weighted
//! RankNet gradients within groups of rated projections.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, GrowParams, Tree};
use super::{check_features, check_row, Attribution, Scorer};
use crate::error::{Error, Result};
use crate::preferences::TrialRecord;

pub const RANKER_FORMAT: &str = "drjudge-ranker";
pub const RANKER_VERSION: u32 = 1;

/// Relevance given to crossed-out projections.
pub const CROSSED_OUT_RELEVANCE: i32 = -1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankItem {
    pub embedding_id: String,
    pub features: Vec<f64>,
    /// Hearts awarded, or -1 if crossed out.
    pub relevance: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankGroup {
    pub group_id: String,
    pub dataset_id: String,
    pub items: Vec<RankItem>,
}

/// One group per trial. `features` returns the feature vector of an
/// embedding id, or `None` to drop it from the group.
pub fn rank_groups<'a>(trials: &[TrialRecord], features: impl Fn(&str) -> Option<&'a [f64]>) -> Vec<RankGroup> {
    trials
        .iter()
        .map(|t| RankGroup {
            group_id: t.trial_id.clone(),
            dataset_id: t.dataset_id.clone(),
            items: t
                .shown
                .iter()
                .enumerate()
                .filter_map(|(i, id)| {
                    features(id).map(|f| RankItem {
                        embedding_id: id.clone(),
                        features: f.to_vec(),
                        relevance: if t.crossed_out[i] {
                            CROSSED_OUT_RELEVANCE
                        } else {
                            t.hearts[i] as i32
                        },
                    })
                })
                .collect(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankerConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Recorded for provenance; the fit itself draws no random numbers.
    pub seed: u64,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self {
            n_trees: 15,
            learning_rate: 0.3,
            max_depth: 5,
            min_leaf: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedRanker {
    pub format: String,
    pub version: u32,
    pub config: RankerConfig,
    pub feature_names: Vec<String>,
    /// Leaf values are unscaled Newton steps; predictions multiply by the
    /// learning rate.
    pub trees: Vec<Tree>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub embedding_id: String,
    pub score: f64,
    /// 1-based position.
    pub rank: usize,
}

fn gain(relevance: i32) -> f64 {
    2f64.powi(relevance + 1)
}

fn discount(pos: usize) -> f64 {
    1.0 / ((pos + 2) as f64).log2()
}

/// Descending by score, ties by id.
fn order_by_score(ids: &[&str], scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ids.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| ids[a].cmp(ids[b]))
    });
    idx
}

/// Lambdas and hessians for one group; items in canonical id order.
fn group_lambdas(items: &[&RankItem], scores: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = items.len();
    let mut lambda = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let ids: Vec<&str> = items.iter().map(|i| i.embedding_id.as_str()).collect();
    let order = order_by_score(&ids, scores);
    let mut pos = vec![0; n];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let mut ideal: Vec<f64> = items.iter().map(|i| gain(i.relevance)).collect();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let max_dcg: f64 = ideal.iter().enumerate().map(|(p, g)| g * discount(p)).sum();
    for i in 0..n {
        for j in 0..n {
            if items[i].relevance <= items[j].relevance {
                continue;
            }
            let delta = ((gain(items[i].relevance) - gain(items[j].relevance))
                * (discount(pos[i]) - discount(pos[j])))
            .abs()
                / max_dcg;
            let rho = 1.0 / (1.0 + (scores[i] - scores[j]).exp());
            lambda[i] += rho * delta;
            lambda[j] -= rho * delta;
            let h = rho * (1.0 - rho) * delta;
            hess[i] += h;
            hess[j] += h;
        }
    }
    (lambda, hess)
}

fn canonical(group: &RankGroup) -> Vec<&RankItem> {
    let mut items: Vec<&RankItem> = group.items.iter().collect();
    items.sort_by(|a, b| a.embedding_id.cmp(&b.embedding_id));
    items
}

fn decided_pairs(items: &[&RankItem]) -> usize {
    let mut n = 0;
    for i in 0..items.len() {
        for j in (i + 1)..items.len() {
            n += (items[i].relevance != items[j].relevance) as usize;
        }
    }
    n
}

pub fn fit_ranker(groups: &[RankGroup], feature_names: Vec<String>, cfg: &RankerConfig) -> Result<BoostedRanker> {
    if !(cfg.learning_rate > 0.0) {
        return Err(Error::Parameter("ranker learning rate must be positive".into()));
    }
    let canon: Vec<Vec<&RankItem>> = groups.iter().map(canonical).collect();
    let rows: Vec<Vec<f64>> = canon.iter().flatten().map(|i| i.features.clone()).collect();
    check_features(&rows, &feature_names)?;
    if let Some(item) = canon.iter().flatten().find(|i| !(-1..=4).contains(&i.relevance)) {
        return Err(Error::Parameter(format!(
            "relevance of {} is {}, expected -1..=4",
            item.embedding_id, item.relevance
        )));
    }
    if canon.iter().all(|g| decided_pairs(g) == 0) {
        return Err(Error::Training("no group has two items with different relevance".into()));
    }
    let offsets: Vec<usize> = canon
        .iter()
        .scan(0, |acc, g| {
            let start = *acc;
            *acc += g.len();
            Some(start)
        })
        .collect();

    let params = GrowParams {
        max_depth: cfg.max_depth,
        min_leaf: cfg.min_leaf,
        max_features: None,
    };
    let mut scores = vec![0.0; rows.len()];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.n_trees {
        let per_group: Vec<(Vec<f64>, Vec<f64>)> = canon
            .par_iter()
            .zip(offsets.par_iter())
            .map(|(g, &off)| group_lambdas(g, &scores[off..off + g.len()]))
            .collect();
        let (lambda, hess): (Vec<f64>, Vec<f64>) = per_group
            .into_iter()
            .flat_map(|(l, h)| l.into_iter().zip(h))
            .unzip();
        let mut tree = grow(&rows, &lambda, (0..rows.len()).collect(), params, &mut rng);
        newton_leaves(&mut tree, &rows, &lambda, &hess);
        for (s, x) in scores.iter_mut().zip(&rows) {
            *s += cfg.learning_rate * tree.predict(x);
        }
        trees.push(tree);
    }
    Ok(BoostedRanker {
        format: RANKER_FORMAT.into(),
        version: RANKER_VERSION,
        config: *cfg,
        feature_names,
        trees,
    })
}

/// Replaces each leaf value by `sum(lambda) / sum(hessian)` over its rows.
fn newton_leaves(tree: &mut Tree, rows: &[Vec<f64>], lambda: &[f64], hess: &[f64]) {
    use super::tree::Node;
    let mut sums = vec![(0.0, 0.0); tree.nodes.len()];
    for (i, x) in rows.iter().enumerate() {
        let mut node = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } = tree.nodes[node]
        {
            node = if x[feature] <= threshold { left } else { right };
        }
        sums[node].0 += lambda[i];
        sums[node].1 += hess[i];
    }
    for (node, (l, h)) in tree.nodes.iter_mut().zip(sums) {
        if let Node::Leaf { value, .. } = node {
            *value = if h > 1e-12 { l / h } else { 0.0 };
        }
    }
    tree.refresh_internal_values();
}

impl BoostedRanker {
    pub fn empty(feature_names: Vec<String>, cfg: RankerConfig) -> Self {
        Self {
            format: RANKER_FORMAT.into(),
            version: RANKER_VERSION,
            config: cfg,
            feature_names,
            trees: Vec::new(),
        }
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        check_row(x, &self.feature_names)?;
        Ok(self.trees.iter().map(|t| self.config.learning_rate * t.predict(x)).sum())
    }

    pub fn attribute(&self, x: &[f64]) -> Result<Attribution> {
        let prediction = self.score(x)?;
        let mut contributions = vec![0.0; self.feature_names.len()];
        let mut baseline = 0.0;
        let lr = self.config.learning_rate;
        for t in &self.trees {
            let mut c = vec![0.0; contributions.len()];
            baseline += lr * t.path_contributions(x, &mut c);
            for (acc, v) in contributions.iter_mut().zip(c) {
                *acc += lr * v;
            }
        }
        Ok(Attribution {
            baseline,
            contributions,
            prediction,
        })
    }

    /// Scores and orders `(id, features)` pairs, best first, ties by id.
    pub fn rank(&self, items: &[(String, Vec<f64>)]) -> Result<Vec<RankedItem>> {
        let scores: Vec<f64> = items.iter().map(|(_, f)| self.score(f)).collect::<Result<_>>()?;
        let ids: Vec<&str> = items.iter().map(|(id, _)| id.as_str()).collect();
        Ok(order_by_score(&ids, &scores)
            .into_iter()
            .enumerate()
            .map(|(r, i)| RankedItem {
                embedding_id: items[i].0.clone(),
                score: scores[i],
                rank: r + 1,
            })
            .collect())
    }

    /// Fraction of decided intra-group pairs where the more relevant item
    /// scores strictly higher. `None` if no group has a decided pair.
    pub fn pairwise_accuracy(&self, groups: &[RankGroup]) -> Result<Option<f64>> {
        let (mut right, mut total) = (0usize, 0usize);
        for g in groups {
            let scores: Vec<f64> = g.items.iter().map(|i| self.score(&i.features)).collect::<Result<_>>()?;
            for i in 0..g.items.len() {
                for j in 0..g.items.len() {
                    if g.items[i].relevance > g.items[j].relevance {
                        total += 1;
                        right += (scores[i] > scores[j]) as usize;
                    }
                }
            }
        }
        Ok((total > 0).then(|| right as f64 / total as f64))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: BoostedRanker = serde_json::from_str(s)?;
        if m.format != RANKER_FORMAT || m.version != RANKER_VERSION {
            return Err(Error::Data(format!("unsupported ranker document {} v{}", m.format, m.version)));
        }
        Ok(m)
    }
}

impl Scorer for BoostedRanker {
    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn score(&self, x: &[f64]) -> Result<f64> {
        BoostedRanker::score(self, x)
    }

    fn attribute(&self, x: &[f64]) -> Result<Attribution> {
        BoostedRanker::attribute(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::Node;

    fn names(f: usize) -> Vec<String> {
        (0..f).map(|i| format!("f{i}")).collect()
    }

    /// Relevance follows the rank of feature 0 inside each group.
    fn groups(count: usize, offset: usize) -> Vec<RankGroup> {
        (0..count)
            .map(|g| {
                let mut vals: Vec<(f64, f64)> = (0..8)
                    .map(|i| {
                        let h = ((g + offset) * 31 + i * 17) % 97;
                        (h as f64 / 97.0, ((h * 13) % 29) as f64)
                    })
                    .collect();
                vals.sort_by(|a, b| a.0.total_cmp(&b.0));
                RankGroup {
                    group_id: format!("g{g}"),
                    dataset_id: "d".into(),
                    items: vals
                        .iter()
                        .enumerate()
                        .map(|(rank, &(a, b))| RankItem {
                            embedding_id: format!("g{g}-{rank}"),
                            features: vec![a, b],
                            relevance: (rank as i32 / 2) - 1,
                        })
                        .collect(),
                }
            })
            .collect()
    }

    #[test]
    fn learns_single_feature_order() {
        let m = fit_ranker(&groups(40, 0), names(2), &RankerConfig::default()).unwrap();
        let acc = m.pairwise_accuracy(&groups(20, 500)).unwrap().unwrap();
        assert!(acc >= 0.95, "accuracy {acc}");
    }

    #[test]
    fn equal_relevances_are_a_training_error() {
        let mut g = groups(3, 0);
        g.iter_mut().for_each(|g| g.items.iter_mut().for_each(|i| i.relevance = 2));
        assert!(matches!(
            fit_ranker(&g, names(2), &RankerConfig::default()),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn shuffled_groups_give_identical_model() {
        let g = groups(12, 3);
        let mut shuffled = g.clone();
        shuffled.iter_mut().for_each(|g| g.items.reverse());
        let a = fit_ranker(&g, names(2), &RankerConfig::default()).unwrap();
        let b = fit_ranker(&shuffled, names(2), &RankerConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(BoostedRanker::from_json(&a.to_json().unwrap()).unwrap(), a);
    }

    #[test]
    fn constant_feature_changes_nothing() {
        let g = groups(12, 3);
        let mut padded = g.clone();
        padded
            .iter_mut()
            .for_each(|g| g.items.iter_mut().for_each(|i| i.features.push(7.0)));
        let a = fit_ranker(&g, names(2), &RankerConfig::default()).unwrap();
        let b = fit_ranker(&padded, names(3), &RankerConfig::default()).unwrap();
        for item in g.iter().flat_map(|g| &g.items) {
            let mut x = item.features.clone();
            let sa = a.score(&x).unwrap();
            x.push(7.0);
            assert_eq!(sa, b.score(&x).unwrap());
        }
    }

    #[test]
    fn scoring_examples() {
        let empty = BoostedRanker::empty(names(1), RankerConfig::default());
        assert_eq!(empty.score(&[3.0]).unwrap(), 0.0);
        let mut m = empty.clone();
        m.trees.push(Tree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 0.0,
                    left: 1,
                    right: 2,
                    value: 0.0,
                    count: 2,
                },
                Node::Leaf { value: -1.0, count: 1 },
                Node::Leaf { value: 1.0, count: 1 },
            ],
        });
        assert!((m.score(&[1.0]).unwrap() - 0.3).abs() < 1e-15);
        assert!((m.score(&[-1.0]).unwrap() + 0.3).abs() < 1e-15);
        let a = m.attribute(&[1.0]).unwrap();
        assert!((a.baseline + a.contributions[0] - a.prediction).abs() < 1e-15);
    }

    #[test]
    fn rank_orders_and_breaks_ties_by_id() {
        let empty = BoostedRanker::empty(names(1), RankerConfig::default());
        let items = vec![("c".to_string(), vec![0.0]), ("a".to_string(), vec![1.0]), ("b".to_string(), vec![2.0])];
        let r = empty.rank(&items).unwrap();
        let ids: Vec<&str> = r.iter().map(|i| i.embedding_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(r[2].rank, 3);
        assert!(empty.rank(&[]).unwrap().is_empty());
    }
}
