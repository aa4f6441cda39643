//! Axis-aligned regression trees shared by the forest and the ranker.
//!
//! Splits minimize the summed squared error of the targets. For 0/1 targets
//! that is half the count-weighted Gini impurity, so the same builder grows
//! classification trees.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
        /// Mean prediction over the training rows reaching this node.
        value: f64,
        count: usize,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

impl Node {
    pub fn value(&self) -> f64 {
        match *self {
            Node::Split { value, .. } | Node::Leaf { value, .. } => value,
        }
    }

    pub fn count(&self) -> usize {
        match *self {
            Node::Split { count, .. } | Node::Leaf { count, .. } => count,
        }
    }
}

/// Flat tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64, count: usize) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value, count }],
        }
    }

    fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.nodes[self.leaf_index(x)].value()
    }

    /// Root value plus per-feature deltas along the decision path; the two
    /// sum to [`Tree::predict`].
    pub fn path_contributions(&self, x: &[f64], contributions: &mut [f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => break,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    value,
                    ..
                } => {
                    let next = if x[feature] <= threshold { left } else { right };
                    contributions[feature] += self.nodes[next].value() - value;
                    i = next;
                }
            }
        }
        self.nodes[0].value()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }

    /// Feature indices used by any split, deduplicated and sorted.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Rewrites internal node values as count-weighted means of their
    /// children, so path contributions telescope to the leaf value.
    pub(crate) fn refresh_internal_values(&mut self) {
        fn walk(nodes: &mut [Node], i: usize) -> (f64, usize) {
            match nodes[i] {
                Node::Leaf { value, count } => (value, count),
                Node::Split { left, right, .. } => {
                    let (lv, lc) = walk(nodes, left);
                    let (rv, rc) = walk(nodes, right);
                    let c = lc + rc;
                    let v = if c > 0 { (lv * lc as f64 + rv * rc as f64) / c as f64 } else { 0.0 };
                    if let Node::Split { value, count, .. } = &mut nodes[i] {
                        *value = v;
                        *count = c;
                    }
                    (v, c)
                }
            }
        }
        walk(&mut self.nodes, 0);
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
}

/// Grows a tree over `rows` (indices into `x`, repeats allowed).
pub(crate) fn grow(x: &[Vec<f64>], y: &[f64], rows: Vec<usize>, params: GrowParams, rng: &mut ChaCha8Rng) -> Tree {
    let mut tree = Tree { nodes: Vec::new() };
    grow_node(x, y, rows, 0, params, rng, &mut tree);
    tree
}

fn grow_node(
    x: &[Vec<f64>],
    y: &[f64],
    rows: Vec<usize>,
    depth: usize,
    params: GrowParams,
    rng: &mut ChaCha8Rng,
    tree: &mut Tree,
) -> usize {
    let count = rows.len();
    let sum: f64 = rows.iter().map(|&r| y[r]).sum();
    let value = if count > 0 { sum / count as f64 } else { 0.0 };
    let id = tree.nodes.len();
    tree.nodes.push(Node::Leaf { value, count });
    if depth >= params.max_depth || count < 2 * params.min_leaf.max(1) {
        return id;
    }
    let Some((feature, threshold)) = best_split(x, y, &rows, params, rng) else {
        return id;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][feature] <= threshold);
    let left = grow_node(x, y, l, depth + 1, params, rng, tree);
    let right = grow_node(x, y, r, depth + 1, params, rng, tree);
    tree.nodes[id] = Node::Split {
        feature,
        threshold,
        left,
        right,
        value,
        count,
    };
    id
}

fn best_split(x: &[Vec<f64>], y: &[f64], rows: &[usize], params: GrowParams, rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
    let n_features = x[rows[0]].len();
    let mut features: Vec<usize> = match params.max_features {
        Some(m) if m < n_features => sample(rng, n_features, m.max(1)).into_vec(),
        _ => (0..n_features).collect(),
    };
    features.sort_unstable();

    let n = rows.len() as f64;
    let total: f64 = rows.iter().map(|&r| y[r]).sum();
    let parent_sse_part = total * total / n;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = rows.to_vec();
    for &f in &features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let mut left_sum = 0.0;
        for pos in 0..order.len() - 1 {
            left_sum += y[order[pos]];
            let nl = pos + 1;
            let nr = order.len() - nl;
            let (lo, hi) = (x[order[pos]][f], x[order[pos + 1]][f]);
            if lo == hi || nl < params.min_leaf || nr < params.min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            // SSE reduction = sum_l^2/n_l + sum_r^2/n_r - total^2/n
            let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64 - parent_sse_part;
            if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, f, lo + (hi - lo) / 2.0));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    const ALL: GrowParams = GrowParams {
        max_depth: 10,
        min_leaf: 1,
        max_features: None,
    };

    #[test]
    fn splits_on_informative_feature() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i < 4 { 0.0 } else { 1.0 }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow(&x, &y, (0..10).collect(), ALL, &mut rng);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.split_features(), vec![1]);
        assert_eq!(t.predict(&[1.0, 3.0]), 0.0);
        assert_eq!(t.predict(&[1.0, 3.6]), 1.0);
    }

    #[test]
    fn constant_features_give_a_leaf() {
        let x = vec![vec![2.0]; 6];
        let y = vec![0.0, 1.0, 1.0, 0.0, 1.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow(&x, &y, (0..6).collect(), ALL, &mut rng);
        assert_eq!(t.nodes.len(), 1);
        assert!((t.predict(&[2.0]) - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn contributions_telescope() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64, (i % 5) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 0.3 + (r[1] > 2.0) as u8 as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = grow(&x, &y, (0..40).collect(), ALL, &mut rng);
        for row in &x {
            let mut c = vec![0.0; 2];
            let base = t.path_contributions(row, &mut c);
            assert!((base + c[0] + c[1] - t.predict(row)).abs() < 1e-12);
        }
    }

    #[test]
    fn min_leaf_is_respected() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..12).map(|i| (i == 0) as u8 as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = GrowParams { min_leaf: 5, ..ALL };
        let t = grow(&x, &y, (0..12).collect(), params, &mut rng);
        assert!(t.nodes.iter().all(|n| n.count() >= 5));
    }
}
