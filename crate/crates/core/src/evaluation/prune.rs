use serde::{Deserialize, Serialize};

use super::MetricVector;
use crate::metrics::{Metric, MetricCategory};
use crate::stats;

/// Metric order used to decide which of two correlated metrics survives;
/// earlier wins. Continuity, neighborhood hit and distance correlation go
/// last so their correlates are kept.
pub fn default_priority() -> Vec<Metric> {
    let demoted = [Metric::Continuity, Metric::Nh, Metric::Cc];
    let mut out: Vec<Metric> = Metric::ALL.into_iter().filter(|m| !demoted.contains(m)).collect();
    out.extend(demoted);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum DropReason {
    LowVariance,
    Correlated { with: Metric, r: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    /// Surviving metrics in priority order.
    pub active: Vec<Metric>,
    pub dropped: Vec<(Metric, DropReason)>,
}

/// Pearson correlation of two metrics over the vectors that have both.
fn pairwise_r(vectors: &[MetricVector], a: Metric, b: Metric) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = vectors
        .iter()
        .filter_map(|v| Some((v.get(a)?, v.get(b)?)))
        .unzip();
    stats::pearson(&xs, &ys)
}

/// Drops constant metrics, then walks the metrics in priority order and keeps
/// each one whose |r| with every kept metric is at most `threshold`.
/// Metrics missing from `priority` rank after it, in their natural order.
pub fn prune_correlated(vectors: &[MetricVector], threshold: f64, priority: &[Metric]) -> PruneReport {
    let mut order: Vec<Metric> = priority.to_vec();
    order.extend(Metric::ALL.into_iter().filter(|m| !priority.contains(m)));
    let mut active = Vec::new();
    let mut dropped = Vec::new();
    for m in order {
        let present: Vec<f64> = vectors.iter().filter_map(|v| v.get(m)).collect();
        if present.is_empty() {
            continue;
        }
        if present.iter().all(|&x| x == present[0]) {
            dropped.push((m, DropReason::LowVariance));
            continue;
        }
        let clash = active
            .iter()
            .find_map(|&k| pairwise_r(vectors, k, m).filter(|r| r.abs() > threshold).map(|r| (k, r)));
        match clash {
            Some((with, r)) => dropped.push((m, DropReason::Correlated { with, r })),
            None => active.push(m),
        }
    }
    PruneReport { active, dropped }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub metrics: Vec<Metric>,
    pub categories: Vec<MetricCategory>,
    /// `None` where a pair has fewer than two joint observations or no variance.
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn correlation_matrix(vectors: &[MetricVector], metrics: &[Metric]) -> CorrelationMatrix {
    let n = metrics.len();
    let mut values = vec![vec![None; n]; n];
    for i in 0..n {
        values[i][i] = Some(1.0);
        for j in (i + 1)..n {
            let r = pairwise_r(vectors, metrics[i], metrics[j]);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    CorrelationMatrix {
        metrics: metrics.to_vec(),
        categories: metrics.iter().map(|m| m.category()).collect(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vectors(cols: &[(Metric, [f64; 5])]) -> Vec<MetricVector> {
        (0..5)
            .map(|i| {
                let mut v = MetricVector::new(format!("e{i}"));
                for (m, col) in cols {
                    v.values.insert(*m, col[i]);
                }
                v
            })
            .collect()
    }

    const A: [f64; 5] = [0.1, 0.4, 0.2, 0.9, 0.5];
    const B: [f64; 5] = [0.3, 0.1, 0.8, 0.2, 0.6];

    #[test]
    fn identical_columns_keep_one() {
        let v = vectors(&[(Metric::Continuity, A), (Metric::Trustworthiness, A)]);
        let r = prune_correlated(&v, 0.95, &default_priority());
        assert_eq!(r.active, vec![Metric::Trustworthiness]);
        assert!(matches!(r.dropped[0], (Metric::Continuity, DropReason::Correlated { with: Metric::Trustworthiness, .. })));
    }

    #[test]
    fn uncorrelated_columns_survive_and_constants_go() {
        let v = vectors(&[(Metric::Nerv, A), (Metric::Lcmc, B), (Metric::Dsc, [0.7; 5])]);
        let r = prune_correlated(&v, 0.95, &default_priority());
        assert_eq!(r.active, vec![Metric::Lcmc, Metric::Nerv]);
        assert_eq!(r.dropped, vec![(Metric::Dsc, DropReason::LowVariance)]);
    }

    #[test]
    fn correlated_triple_keeps_highest_priority() {
        let near = |d: f64| [0.1 + d, 0.4, 0.2, 0.9 - d, 0.5];
        let v = vectors(&[(Metric::Cc, A), (Metric::Nms, near(0.01)), (Metric::Nlm, near(0.02))]);
        let prio = [Metric::Nlm, Metric::Nms, Metric::Cc];
        let r = prune_correlated(&v, 0.95, &prio);
        assert_eq!(r.active, vec![Metric::Nlm]);
        let again = prune_correlated(&v, 0.95, &r.active);
        assert_eq!(again.active, r.active);
    }

    #[test]
    fn matrix_is_symmetric_with_unit_diagonal() {
        let v = vectors(&[(Metric::Nerv, A), (Metric::Lcmc, B)]);
        let m = correlation_matrix(&v, &[Metric::Nerv, Metric::Lcmc]);
        assert_eq!(m.values[0][0], Some(1.0));
        assert_eq!(m.values[0][1], m.values[1][0]);
        assert_eq!(m.categories, vec![MetricCategory::Accuracy; 2]);
    }
}
