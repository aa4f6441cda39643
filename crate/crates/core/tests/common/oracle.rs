//! Exhaustive reference implementations of the HD/LD and separability
//! metrics, written from the definitions without sharing any code with the
//! library. Used by the oracle tests and the acceptance runner.

#![allow(dead_code)]

use std::collections::BTreeMap;

use drjudge::data::{neighborhoods, DataSource, DistanceMetric, DistanceRankModel};
use drjudge::evaluation::{measure, MetricConfig};
use drjudge::metrics::nerv::PROB_FLOOR;
use drjudge::metrics::{self, default_k, LabeledScatter, NervConfig};
use drjudge::{Dataset, Embedding, Metric, Technique};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Instance {
    pub hd: Vec<Vec<f64>>,
    pub ld: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.ld.len()
    }

    pub fn dataset(&self) -> Dataset {
        Dataset::from_rows("oracle", &self.hd, Some(self.labels.clone()), DataSource::Synthetic).unwrap()
    }

    pub fn embedding(&self) -> Embedding {
        Embedding::new("oracle.e", "oracle", self.ld.clone(), Technique::External, BTreeMap::new()).unwrap()
    }
}

/// `n` in 7..=12, 2 to 5 HD dimensions, balanced labels with at least two
/// points per class. Every fourth seed snaps coordinates to a coarse integer
/// grid so distance ties and coincident points occur.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(7..=12);
    let d = rng.random_range(2..=5);
    let grid = seed % 4 == 3;
    let coord = |rng: &mut ChaCha8Rng| {
        if grid {
            rng.random_range(0..4) as f64
        } else {
            rng.random_range(-1.0..1.0)
        }
    };
    let hd: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| coord(&mut rng)).collect()).collect();
    let ld: Vec<[f64; 2]> = (0..n).map(|_| [coord(&mut rng), coord(&mut rng)]).collect();
    let c = rng.random_range(2..=(n / 2).min(3));
    let mut labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    labels.shuffle(&mut rng);
    Instance { hd, ld, labels }
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn distance_matrix<P: AsRef<[f64]>>(pts: &[P]) -> Vec<Vec<f64>> {
    pts.iter()
        .map(|a| pts.iter().map(|b| euclid(a.as_ref(), b.as_ref())).collect())
        .collect()
}

/// 1-based rank of `j` among the neighbors of `i`, by counting the points
/// strictly closer plus equally close points with a smaller index.
pub fn rank_matrix(d: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = d.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        return 0;
                    }
                    1 + (0..n)
                        .filter(|&m| m != i && m != j)
                        .filter(|&m| d[i][m] < d[i][j] || (d[i][m] == d[i][j] && m < j))
                        .count()
                })
                .collect()
        })
        .collect()
}

fn knn(r: &[Vec<usize>], i: usize, k: usize) -> Vec<usize> {
    (0..r.len()).filter(|&j| j != i && r[i][j] <= k).collect()
}

fn shared(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|x| b.contains(x)).count()
}

pub struct Spaces {
    pub n: usize,
    pub dh: Vec<Vec<f64>>,
    pub dl: Vec<Vec<f64>>,
    pub rh: Vec<Vec<usize>>,
    pub rl: Vec<Vec<usize>>,
}

impl Spaces {
    pub fn of(inst: &Instance) -> Self {
        let dh = distance_matrix(&inst.hd);
        let dl = distance_matrix(&inst.ld);
        Self {
            n: inst.n(),
            rh: rank_matrix(&dh),
            rl: rank_matrix(&dl),
            dh,
            dl,
        }
    }

    pub fn upper(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push((self.dh[i][j], self.dl[i][j]));
            }
        }
        out
    }

    pub fn shared_at(&self, k: usize) -> usize {
        (0..self.n).map(|i| shared(&knn(&self.rh, i, k), &knn(&self.rl, i, k))).sum()
    }

    pub fn lcmc(&self, k: usize) -> f64 {
        self.shared_at(k) as f64 / (self.n * k) as f64
    }

    fn penalty(&self, k: usize, intruders: bool) -> f64 {
        let n = self.n as f64;
        let kf = k as f64;
        let mut total = 0.0;
        for i in 0..self.n {
            let nu = knn(&self.rh, i, k);
            let rho = knn(&self.rl, i, k);
            let (from, not_in, ranks) = if intruders {
                (&rho, &nu, &self.rh)
            } else {
                (&nu, &rho, &self.rl)
            };
            for &j in from.iter().filter(|j| !not_in.contains(j)) {
                total += ranks[i][j] as f64 - kf;
            }
        }
        1.0 - 2.0 / (n * kf * (2.0 * n - 3.0 * kf - 1.0)) * total
    }

    pub fn trustworthiness(&self, k: usize) -> f64 {
        self.penalty(k, true)
    }

    pub fn continuity(&self, k: usize) -> f64 {
        self.penalty(k, false)
    }

    pub fn q_nx(&self) -> Vec<f64> {
        (1..=self.n - 2).map(|k| self.lcmc(k)).collect()
    }

    pub fn r_nx(&self) -> Vec<f64> {
        let n1 = (self.n - 1) as f64;
        self.q_nx()
            .iter()
            .enumerate()
            .map(|(idx, q)| {
                let k = (idx + 1) as f64;
                (n1 * q - k) / (n1 - k)
            })
            .collect()
    }

    pub fn auc_log_rnx(&self) -> f64 {
        let r = self.r_nx();
        let num: f64 = r.iter().enumerate().map(|(i, v)| v / (i + 1) as f64).sum();
        let den: f64 = (1..=r.len()).map(|k| 1.0 / k as f64).sum();
        num / den
    }

    /// Pairs in HD order, ties by upper-triangle position.
    fn ld_in_hd_order(&self) -> Vec<f64> {
        let mut idx: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                idx.push((self.dh[i][j], i, j));
            }
        }
        idx.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        idx.iter().map(|&(_, i, j)| self.dl[i][j]).collect()
    }

    pub fn kruskal(&self) -> Option<f64> {
        let y = self.ld_in_hd_order();
        let denom: f64 = y.iter().map(|v| v * v).sum();
        if denom == 0.0 {
            return None;
        }
        let fit = isotonic_minmax(&y);
        let num: f64 = y.iter().zip(&fit).map(|(a, b)| (a - b).powi(2)).sum();
        Some((num / denom).sqrt().min(1.0))
    }

    pub fn sammon(&self) -> Option<f64> {
        let pairs: Vec<(f64, f64)> = self.upper().into_iter().filter(|p| p.0 != 0.0).collect();
        let c: f64 = pairs.iter().map(|p| p.0).sum();
        if c == 0.0 {
            return None;
        }
        Some(pairs.iter().map(|(h, l)| (h - l).powi(2) / h).sum::<f64>() / c)
    }

    pub fn cca(&self) -> f64 {
        let pairs = self.upper();
        let mut l: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        l.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = l.len();
        let radius = if m % 2 == 1 { l[m / 2] } else { (l[m / 2 - 1] + l[m / 2]) / 2.0 };
        pairs.iter().filter(|p| p.1 < radius).map(|(h, l)| (h - l).powi(2)).sum::<f64>() / m as f64
    }

    pub fn cc(&self) -> f64 {
        let pairs = self.upper();
        let m = pairs.len() as f64;
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pairs.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = pairs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        let syy: f64 = pairs.iter().map(|(_, y)| (y - my).powi(2)).sum();
        match (sxx == 0.0, syy == 0.0) {
            (true, true) => 1.0,
            (true, false) | (false, true) => 0.0,
            _ => sxy / (sxx * syy).sqrt(),
        }
    }

    /// Row entropy runs from `ln(n-1)` at zero precision down to the log of
    /// the number of nearest neighbors tied at the minimum distance, so the
    /// target is reachable only inside that range (the lower end within the
    /// bisection tolerance).
    pub fn calibration_reachable(&self, perplexity: f64) -> bool {
        let ok = |d: &Vec<Vec<f64>>| {
            (0..self.n).all(|i| {
                let row: Vec<f64> = (0..self.n).filter(|&j| j != i).map(|j| d[i][j]).collect();
                let min = row.iter().copied().fold(f64::INFINITY, f64::min);
                let ties = row.iter().filter(|&&v| v == min).count();
                (ties as f64) <= perplexity && perplexity < row.len() as f64
            })
        };
        ok(&self.dh) && ok(&self.dl)
    }

    /// Neighbor distribution of point `i` at precision `beta`.
    pub fn neighbor_probs(d: &[Vec<f64>], i: usize, beta: f64) -> Vec<f64> {
        let w: Vec<f64> = (0..d.len())
            .filter(|&j| j != i)
            .map(|j| (-beta * d[i][j] * d[i][j]).exp())
            .collect();
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    }

    /// Both KL sums evaluated directly at the supplied per-point precisions.
    pub fn nerv(&self, beta_hd: &[f64], beta_ld: &[f64]) -> (f64, f64, f64) {
        let kl = |p: &[f64], q: &[f64]| -> f64 {
            p.iter()
                .zip(q)
                .map(|(&a, &b)| {
                    let a = a.max(PROB_FLOOR);
                    a * (a.ln() - b.max(PROB_FLOOR).ln())
                })
                .sum()
        };
        let (mut rec, mut prec) = (0.0, 0.0);
        for i in 0..self.n {
            let p = Self::neighbor_probs(&self.dh, i, beta_hd[i]);
            let q = Self::neighbor_probs(&self.dl, i, beta_ld[i]);
            rec += kl(&p, &q);
            prec += kl(&q, &p);
        }
        let norm = self.n as f64 * ((self.n - 1) as f64).ln();
        let recall = 1.0 - rec / norm;
        let precision = 1.0 - prec / norm;
        (((recall + precision) / 2.0).clamp(0.0, 1.0), recall, precision)
    }
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

/// Isotonic (non-decreasing) least-squares fit from the max-min formula
/// `fit_i = max_{a<=i} min_{b>=i} mean(y[a..=b])`, evaluated over all
/// level sets.
pub fn isotonic_minmax(y: &[f64]) -> Vec<f64> {
    let m = y.len();
    let mut prefix = vec![0.0; m + 1];
    for i in 0..m {
        prefix[i + 1] = prefix[i] + y[i];
    }
    let mean = |a: usize, b: usize| (prefix[b + 1] - prefix[a]) / (b + 1 - a) as f64;
    (0..m)
        .map(|i| {
            (0..=i)
                .map(|a| (i..m).map(|b| mean(a, b)).fold(f64::INFINITY, f64::min))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Separability metrics on labelled 2D points, from their textbook forms.
pub struct Classes<'a> {
    pub pts: &'a [[f64; 2]],
    pub labels: &'a [usize],
    pub classes: Vec<usize>,
}

impl<'a> Classes<'a> {
    pub fn new(pts: &'a [[f64; 2]], labels: &'a [usize]) -> Self {
        let mut classes = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        Self { pts, labels, classes }
    }

    fn d(&self, i: usize, j: usize) -> f64 {
        euclid(&self.pts[i], &self.pts[j])
    }

    fn members(&self, c: usize) -> Vec<usize> {
        (0..self.pts.len()).filter(|&i| self.labels[i] == c).collect()
    }

    fn centroid(&self, c: usize) -> [f64; 2] {
        let m = self.members(c);
        let k = m.len() as f64;
        [
            m.iter().map(|&i| self.pts[i][0]).sum::<f64>() / k,
            m.iter().map(|&i| self.pts[i][1]).sum::<f64>() / k,
        ]
    }

    pub fn dsc(&self) -> f64 {
        let cents: Vec<(usize, [f64; 2])> = self.classes.iter().map(|&c| (c, self.centroid(c))).collect();
        let ok = (0..self.pts.len())
            .filter(|&i| {
                let mut best = (f64::INFINITY, usize::MAX);
                for (c, cen) in &cents {
                    let d = euclid(&self.pts[i], cen);
                    if d < best.0 {
                        best = (d, *c);
                    }
                }
                best.1 == self.labels[i]
            })
            .count();
        ok as f64 / self.pts.len() as f64
    }

    pub fn abw(&self) -> Option<f64> {
        let (mut w, mut nw, mut b, mut nb) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..self.pts.len() {
            for j in 0..self.pts.len() {
                if i == j {
                    continue;
                }
                if self.labels[i] == self.labels[j] {
                    w += self.d(i, j);
                    nw += 1.0;
                } else {
                    b += self.d(i, j);
                    nb += 1.0;
                }
            }
        }
        if nw == 0.0 || nb == 0.0 || w == 0.0 {
            return None;
        }
        Some((b / nb) / (w / nw))
    }

    pub fn hm(&self) -> f64 {
        (0..self.pts.len())
            .map(|i| {
                let others = (0..self.pts.len()).filter(|&j| j != i);
                let hit = others
                    .clone()
                    .filter(|&j| self.labels[j] == self.labels[i])
                    .map(|j| self.d(i, j))
                    .fold(f64::INFINITY, f64::min);
                let miss = others
                    .filter(|&j| self.labels[j] != self.labels[i])
                    .map(|j| self.d(i, j))
                    .fold(f64::INFINITY, f64::min);
                0.5 * (miss - hit)
            })
            .sum()
    }

    pub fn nh(&self, k: usize) -> f64 {
        let dm = distance_matrix(self.pts);
        let r = rank_matrix(&dm);
        let n = self.pts.len();
        (0..n)
            .map(|i| {
                let nb = knn(&r, i, k);
                nb.iter().filter(|&&j| self.labels[j] == self.labels[i]).count() as f64 / k as f64
            })
            .sum::<f64>()
            / n as f64
    }

    /// Calinski-Harabasz from centroid scatter.
    pub fn ch(&self) -> Option<f64> {
        let n = self.pts.len() as f64;
        let c = self.classes.len() as f64;
        let all = [
            self.pts.iter().map(|p| p[0]).sum::<f64>() / n,
            self.pts.iter().map(|p| p[1]).sum::<f64>() / n,
        ];
        let (mut b, mut w) = (0.0, 0.0);
        for &k in &self.classes {
            let cen = self.centroid(k);
            let m = self.members(k);
            b += m.len() as f64 * euclid(&cen, &all).powi(2);
            w += m.iter().map(|&i| euclid(&self.pts[i], &cen).powi(2)).sum::<f64>();
        }
        if w == 0.0 {
            return None;
        }
        Some((b / (c - 1.0)) / (w / (n - c)))
    }

    pub fn silhouette(&self) -> f64 {
        let n = self.pts.len();
        let mut total = 0.0;
        for i in 0..n {
            let mean_to = |c: usize| {
                let m: Vec<usize> = self.members(c).into_iter().filter(|&j| j != i).collect();
                m.iter().map(|&j| self.d(i, j)).sum::<f64>() / m.len() as f64
            };
            let a = mean_to(self.labels[i]);
            let b = self
                .classes
                .iter()
                .filter(|&&c| c != self.labels[i])
                .map(|&c| mean_to(c))
                .fold(f64::INFINITY, f64::min);
            if a.max(b) > 0.0 {
                total += (b - a) / a.max(b);
            }
        }
        total / n as f64
    }
}

fn close(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol || (got.is_nan() && want.is_nan()) {
        Ok(())
    } else {
        Err(format!("{what}: library {got} vs oracle {want}"))
    }
}

fn close_rel(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    close(what, got, want, tol * want.abs().max(1.0))
}

/// Compares every HD/LD and separability metric of the library with the
/// oracle on one instance.
pub fn check_instance(inst: &Instance) -> Result<(), String> {
    let ds = inst.dataset();
    let emb = inst.embedding();
    let n = inst.n();
    let k = default_k(n);
    let nh_k = 3;
    let cfg = MetricConfig {
        nh_k,
        ..MetricConfig::default()
    };
    let mv = measure(&ds, &emb, &cfg).map_err(|e| e.to_string())?;
    let sp = Spaces::of(inst);
    let drm = DistanceRankModel::build(&ds, &emb, DistanceMetric::Euclidean).map_err(|e| e.to_string())?;

    for i in 0..n {
        for j in 0..n {
            if drm.r_hd(i, j) as usize != sp.rh[i][j] || drm.r_ld(i, j) as usize != sp.rl[i][j] {
                return Err(format!("rank mismatch at ({i}, {j})"));
            }
        }
    }
    let nb = neighborhoods(&drm, k).map_err(|e| e.to_string())?;
    for i in 0..n {
        if nb.nu[i] != knn(&sp.rh, i, k) || nb.rho[i] != knn(&sp.rl, i, k) {
            return Err(format!("neighborhood mismatch at {i}"));
        }
    }

    let get = |m: Metric| mv.get(m).ok_or_else(|| format!("{} absent: {:?}", m.name(), mv.provenance.get(&m)));
    close("lcmc", get(Metric::Lcmc)?, sp.lcmc(k), TOL)?;
    close("trustworthiness", get(Metric::Trustworthiness)?, sp.trustworthiness(k), TOL)?;
    close("continuity", get(Metric::Continuity)?, sp.continuity(k), TOL)?;
    let curves = metrics::coranking_curves(&drm).map_err(|e| e.to_string())?;
    for (idx, (q, r)) in sp.q_nx().iter().zip(sp.r_nx()).enumerate() {
        close(&format!("q_nx[{}]", idx + 1), curves.q_nx[idx], *q, TOL)?;
        close(&format!("r_nx[{}]", idx + 1), curves.r_nx[idx], r, TOL)?;
    }
    close("auc_log_rnx", get(Metric::AucLogRnx)?, sp.auc_log_rnx(), TOL)?;
    match sp.kruskal() {
        Some(v) => close("nms", get(Metric::Nms)?, v, TOL)?,
        None if mv.get(Metric::Nms).is_none() => {}
        None => return Err("nms defined where the oracle is not".into()),
    }
    match sp.sammon() {
        Some(v) => close("nlm", get(Metric::Nlm)?, v, TOL)?,
        None if mv.get(Metric::Nlm).is_none() => {}
        None => return Err("nlm defined where the oracle is not".into()),
    }
    close("cca", get(Metric::CcaStress)?, sp.cca(), TOL)?;
    close("cc", get(Metric::Cc)?, sp.cc(), TOL)?;

    let perplexity = NervConfig::default().perplexity;
    if !sp.calibration_reachable(perplexity) {
        if mv.get(Metric::Nerv).is_some() {
            return Err("nerv defined although some row cannot reach the perplexity".into());
        }
    } else {
        let report = metrics::nerv_report(&drm, &NervConfig::default()).map_err(|e| e.to_string())?;
        let target = perplexity.ln();
        for i in 0..n {
            for (d, beta, space) in [(&sp.dh, report.beta_hd[i], "HD"), (&sp.dl, report.beta_ld[i], "LD")] {
                let h = entropy(&Spaces::neighbor_probs(d, i, beta));
                if (h - target).abs() > 1e-5 + 1e-9 {
                    return Err(format!("{space} row {i} entropy {h} off target {target}"));
                }
            }
        }
        let (value, recall, precision) = sp.nerv(&report.beta_hd, &report.beta_ld);
        close("nerv", get(Metric::Nerv)?, value, TOL)?;
        close("nerv recall", report.smoothed_recall, recall, TOL)?;
        close("nerv precision", report.smoothed_precision, precision, TOL)?;
    }

    let cl = Classes::new(&inst.ld, &inst.labels);
    close("dsc", get(Metric::Dsc)?, cl.dsc(), TOL)?;
    match cl.abw() {
        Some(v) => close_rel("abw", get(Metric::Abw)?, v, TOL)?,
        None if mv.get(Metric::Abw).is_none() => {}
        None => return Err("abw defined where the oracle is not".into()),
    }
    close("hm", get(Metric::Hm)?, cl.hm(), TOL)?;
    close("nh", get(Metric::Nh)?, cl.nh(nh_k), TOL)?;
    match cl.ch() {
        Some(v) => close_rel("cal", get(Metric::Cal)?, v, TOL)?,
        None if mv.get(Metric::Cal).is_none() => {}
        None => return Err("cal defined where the oracle is not".into()),
    }
    close("sc", get(Metric::Sc)?, cl.silhouette(), TOL)?;
    Ok(())
}

/// Both CAL formulations against the centroid form, relative tolerance.
pub fn check_cal_forms(pts: &[[f64; 2]], labels: &[usize]) -> Result<(), String> {
    let ls = LabeledScatter::new(pts.to_vec(), labels).map_err(|e| e.to_string())?;
    let ch = metrics::calinski_harabasz(&ls).map_err(|e| e.to_string())?;
    let want = Classes::new(pts, labels).ch().ok_or("oracle undefined")?;
    let d = &ch.decomposition;
    close_rel("ratio form", d.ratio_form(), want, TOL)?;
    close_rel("mean-distance form", d.mean_distance_form(), want, TOL)?;
    close_rel("forms agree", d.ratio_form(), d.mean_distance_form(), TOL)
}

/// A random labelled cloud for the CAL identity: 6 to 60 points, 2 to 5
/// classes, every class holding at least two points.
pub fn random_labelled_cloud(seed: u64) -> (Vec<[f64; 2]>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ca1);
    let c = rng.random_range(2..=5);
    let n = rng.random_range(2 * c.max(3)..=60);
    let scale = 10f64.powf(rng.random_range(-2.0..3.0));
    let mut labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    labels.shuffle(&mut rng);
    let offsets: Vec<[f64; 2]> = (0..c)
        .map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
        .collect();
    let pts = labels
        .iter()
        .map(|&l| {
            [
                scale * (offsets[l][0] + rng.random_range(-1.0..1.0)),
                scale * (offsets[l][1] + rng.random_range(-1.0..1.0)),
            ]
        })
        .collect();
    (pts, labels)
}
