//! Class-separability measures over labelled 2D points.

use serde::{Deserialize, Serialize};

use crate::data::dist2d;
use crate::error::{Error, Result};

/// Labelled LD points with precomputed class centroids.
///
/// Class ids are compacted on construction so every class has a member.
#[derive(Debug, Clone)]
pub struct LabeledScatter {
    coords: Vec<[f64; 2]>,
    labels: Vec<usize>,
    centroids: Vec<[f64; 2]>,
    counts: Vec<usize>,
}

impl LabeledScatter {
    pub fn new(coords: Vec<[f64; 2]>, labels: &[usize]) -> Result<Self> {
        if coords.len() != labels.len() {
            return Err(Error::Structural(format!(
                "{} points but {} labels",
                coords.len(),
                labels.len()
            )));
        }
        if coords.is_empty() {
            return Err(Error::Data("empty scatter".into()));
        }
        let mut present: Vec<usize> = labels.to_vec();
        present.sort_unstable();
        present.dedup();
        let labels: Vec<usize> = labels
            .iter()
            .map(|l| present.binary_search(l).expect("label is present"))
            .collect();
        let c = present.len();
        let mut sums = vec![[0.0, 0.0]; c];
        let mut counts = vec![0usize; c];
        for (p, &l) in coords.iter().zip(&labels) {
            sums[l][0] += p[0];
            sums[l][1] += p[1];
            counts[l] += 1;
        }
        let centroids = sums
            .iter()
            .zip(&counts)
            .map(|(s, &n)| [s[0] / n as f64, s[1] / n as f64])
            .collect();
        Ok(Self {
            coords,
            labels,
            centroids,
            counts,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.centroids.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn centroids(&self) -> &[[f64; 2]] {
        &self.centroids
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.counts
    }

    fn require_classes(&self, metric: &'static str) -> Result<()> {
        if self.n_classes() < 2 {
            return Err(Error::Parameter(format!(
                "{metric} needs at least 2 classes, got {}",
                self.n_classes()
            )));
        }
        Ok(())
    }

    fn require_no_singletons(&self, metric: &'static str) -> Result<()> {
        if let Some(c) = self.counts.iter().position(|&n| n < 2) {
            return Err(Error::UndefinedMetric {
                metric,
                reason: format!("class {c} has a single member"),
            });
        }
        Ok(())
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        dist2d(self.coords[i], self.coords[j])
    }
}

/// Distance consistency: fraction of points whose nearest centroid belongs
/// to their own class (ties go to the lower class id).
pub fn dsc(ls: &LabeledScatter) -> Result<f64> {
    ls.require_classes("dsc")?;
    let consistent = ls
        .coords
        .iter()
        .zip(&ls.labels)
        .filter(|(p, &l)| {
            let nearest = ls
                .centroids
                .iter()
                .enumerate()
                .map(|(c, cen)| (dist2d(**p, *cen), c))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, c)| c);
            nearest == Some(l)
        })
        .count();
    Ok(consistent as f64 / ls.len() as f64)
}

/// Mean between-class distance over mean within-class distance.
pub fn abw(ls: &LabeledScatter) -> Result<f64> {
    let n = ls.len();
    let (mut within, mut n_within, mut between, mut n_between) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..n {
        for j in i + 1..n {
            let d = ls.dist(i, j);
            if ls.labels[i] == ls.labels[j] {
                within += d;
                n_within += 1;
            } else {
                between += d;
                n_between += 1;
            }
        }
    }
    if n_within == 0 || n_between == 0 {
        return Err(Error::UndefinedMetric {
            metric: "abw",
            reason: "needs both within-class and between-class pairs".into(),
        });
    }
    let within = within / n_within as f64;
    if within == 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "abw",
            reason: "mean within-class distance is zero".into(),
        });
    }
    Ok((between / n_between as f64) / within)
}

/// Sum over points of half the gap between the nearest other-class point
/// and the nearest same-class point.
pub fn hypothesis_margin(ls: &LabeledScatter) -> Result<f64> {
    ls.require_classes("hm")?;
    ls.require_no_singletons("hm")?;
    let n = ls.len();
    let mut total = 0.0;
    for i in 0..n {
        let (mut hit, mut miss) = (f64::INFINITY, f64::INFINITY);
        for j in (0..n).filter(|&j| j != i) {
            let d = ls.dist(i, j);
            if ls.labels[i] == ls.labels[j] {
                hit = hit.min(d);
            } else {
                miss = miss.min(d);
            }
        }
        total += 0.5 * (miss - hit);
    }
    Ok(total)
}

/// Mean fraction of each point's `k` nearest LD neighbors that share its label.
pub fn neighborhood_hit(ls: &LabeledScatter, k: usize) -> Result<f64> {
    let n = ls.len();
    if k < 1 || k >= n {
        return Err(Error::Parameter(format!("neighborhood hit k={k} outside 1..{n}")));
    }
    let mut total = 0.0;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i).map(|j| (ls.dist(i, j), j)));
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let hits = order[..k].iter().filter(|(_, j)| ls.labels[*j] == ls.labels[i]).count();
        total += hits as f64 / k as f64;
    }
    Ok(total / n as f64)
}

/// The between/within-group quantities behind the Calinski-Harabasz index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalDecomposition {
    pub wg: f64,
    pub bg: f64,
    pub a_k: f64,
    /// Mean squared distance over all pairs of points.
    pub dbar2: f64,
    /// Mean squared within-class distance per class (0 for singletons).
    pub dbar2_c: Vec<f64>,
    pub n_c: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalinskiHarabasz {
    pub score: f64,
    pub decomposition: CalDecomposition,
}

impl CalDecomposition {
    /// `(BG / (C-1)) / (WG / (n-C))`.
    pub fn ratio_form(&self) -> f64 {
        let (n, c) = self.sizes();
        (self.bg / (c - 1.0)) / (self.wg / (n - c))
    }

    /// `(dbar2 + (n-C)/(C-1) * A) / (dbar2 - A)`.
    pub fn mean_distance_form(&self) -> f64 {
        let (n, c) = self.sizes();
        (self.dbar2 + (n - c) / (c - 1.0) * self.a_k) / (self.dbar2 - self.a_k)
    }

    fn sizes(&self) -> (f64, f64) {
        (self.n_c.iter().sum::<usize>() as f64, self.n_c.len() as f64)
    }
}

pub fn calinski_harabasz(ls: &LabeledScatter) -> Result<CalinskiHarabasz> {
    ls.require_classes("cal")?;
    let n = ls.len();
    let c = ls.n_classes();
    if n <= c {
        return Err(Error::Parameter(format!("cal needs more points ({n}) than classes ({c})")));
    }
    let mut total = 0.0;
    let mut per_class = vec![0.0; c];
    for i in 0..n {
        for j in i + 1..n {
            let d2 = ls.dist(i, j).powi(2);
            total += d2;
            if ls.labels[i] == ls.labels[j] {
                per_class[ls.labels[i]] += d2;
            }
        }
    }
    let pairs = |m: usize| (m * m.saturating_sub(1) / 2) as f64;
    let dbar2 = total / pairs(n);
    let dbar2_c: Vec<f64> = per_class
        .iter()
        .zip(&ls.counts)
        .map(|(&s, &m)| if m > 1 { s / pairs(m) } else { 0.0 })
        .collect();
    let (nf, cf) = (n as f64, c as f64);
    let wg = 0.5
        * dbar2_c
            .iter()
            .zip(&ls.counts)
            .map(|(d, &m)| (m as f64 - 1.0) * d)
            .sum::<f64>();
    let a_k = dbar2_c
        .iter()
        .zip(&ls.counts)
        .map(|(d, &m)| (m as f64 - 1.0) * (dbar2 - d))
        .sum::<f64>()
        / (nf - cf);
    let bg = 0.5 * ((cf - 1.0) * dbar2 + (nf - cf) * a_k);
    if wg <= 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "cal",
            reason: "within-group dispersion is zero".into(),
        });
    }
    let decomposition = CalDecomposition {
        wg,
        bg,
        a_k,
        dbar2,
        dbar2_c,
        n_c: ls.counts.clone(),
    };
    Ok(CalinskiHarabasz {
        score: decomposition.ratio_form(),
        decomposition,
    })
}

/// Mean silhouette coefficient.
pub fn silhouette(ls: &LabeledScatter) -> Result<f64> {
    ls.require_classes("sc")?;
    ls.require_no_singletons("sc")?;
    let n = ls.len();
    let c = ls.n_classes();
    let mut total = 0.0;
    let mut sums = vec![0.0; c];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in (0..n).filter(|&j| j != i) {
            sums[ls.labels[j]] += ls.dist(i, j);
        }
        let own = ls.labels[i];
        let a = sums[own] / (ls.counts[own] - 1) as f64;
        let b = (0..c)
            .filter(|&k| k != own)
            .map(|k| sums[k] / ls.counts[k] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}
