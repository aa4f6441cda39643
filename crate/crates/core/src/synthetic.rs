//! Seeded synthetic data: point clouds with known structure and a rating
//! corpus driven by a known sparse utility.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{DataSource, Dataset, Technique};
use crate::error::{Error, Result};
use crate::evaluation::{CvData, EmbeddingMeta, MetricVector};
use crate::metrics::Metric;
use crate::preferences::{Difficulty, TrialRecord, PROJECTIONS_PER_TRIAL};

/// Standard Gaussian cloud, unlabeled.
pub fn gaussian(id: &str, n: usize, d: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    Dataset::new(id, points, None, DataSource::Synthetic)
}

/// `centers` isotropic blobs of unit spread with centers drawn uniformly in
/// `[-spread, spread]^d`. Labels are blob indices; points cycle through blobs.
pub fn blobs(id: &str, n: usize, d: usize, centers: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if centers == 0 {
        return Err(Error::Parameter("blobs needs at least one center".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<Vec<f64>> = (0..centers)
        .map(|_| (0..d).map(|_| rng.random_range(-spread..=spread)).collect())
        .collect();
    let labels: Vec<usize> = (0..n).map(|i| i % centers).collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&l| c[l].iter().map(|&m| m + rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    Dataset::from_rows(id, &rows, Some(labels), DataSource::Synthetic)
}

/// Swiss roll: `t = 1.5π(1 + 2u)`, points `(t cos t, 21v, t sin t)` plus
/// Gaussian noise. Labels split `t` into four equal bands.
pub fn swiss_roll(id: &str, n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let t = 1.5 * std::f64::consts::PI * (1.0 + 2.0 * u);
        let mut p = [t * t.cos(), 21.0 * v, t * t.sin()];
        for x in &mut p {
            *x += noise * rng.sample::<f64, _>(StandardNormal);
        }
        rows.push(p.to_vec());
        labels.push(((u * 4.0) as usize).min(3));
    }
    Dataset::from_rows(id, &rows, Some(labels), DataSource::Synthetic)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusConfig {
    pub datasets: usize,
    pub embeddings_per_dataset: usize,
    pub trials_per_dataset: usize,
    pub features: usize,
    /// Scale of the logistic noise added to each utility before a trial is rated.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            datasets: 11,
            embeddings_per_dataset: 40,
            trials_per_dataset: 100,
            features: 20,
            noise_scale: 0.05,
            seed: 7,
        }
    }
}

/// Hearts handed out by rank within a trial; sums to the full budget.
pub const HEARTS_BY_RANK: [u32; PROJECTIONS_PER_TRIAL] = [4, 3, 3, 2, 2, 1, 0, 0];

/// Ground-truth weights: five active features, the rest zero.
pub const ACTIVE_WEIGHTS: [(usize, f64); 5] = [(0, 2.0), (3, -1.5), (7, 1.0), (11, -0.8), (16, 0.5)];

#[derive(Debug, Clone)]
pub struct PreferenceCorpus {
    pub metrics: Vec<Metric>,
    pub true_weights: Vec<f64>,
    pub vectors: BTreeMap<String, MetricVector>,
    pub meta: BTreeMap<String, EmbeddingMeta>,
    pub trials: Vec<TrialRecord>,
}

impl PreferenceCorpus {
    pub fn utility(&self, embedding_id: &str) -> Option<f64> {
        let v = self.vectors.get(embedding_id)?;
        Some(self.metrics.iter().zip(&self.true_weights).map(|(m, w)| w * v.values[m]).sum())
    }

    pub fn features(&self) -> BTreeMap<String, Vec<f64>> {
        self.vectors
            .iter()
            .map(|(id, v)| (id.clone(), self.metrics.iter().map(|m| v.values[m]).collect()))
            .collect()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.metrics.iter().map(|m| m.name().to_string()).collect()
    }

    pub fn cv_data(&self) -> CvData {
        CvData {
            vectors: self.vectors.clone(),
            meta: self.meta.clone(),
            trials: self.trials.clone(),
            active: self.metrics.clone(),
        }
    }
}

/// Each embedding gets uniform [0,1] features. In every trial eight
/// embeddings of one dataset are sorted by noisy utility, awarded
/// `HEARTS_BY_RANK`, and the last one is crossed out.
pub fn preference_corpus(cfg: &CorpusConfig) -> Result<PreferenceCorpus> {
    if cfg.features > Metric::ALL.len() || cfg.features <= ACTIVE_WEIGHTS.iter().map(|a| a.0).max().unwrap_or(0) {
        return Err(Error::Parameter(format!(
            "feature count must lie in {}..={}",
            ACTIVE_WEIGHTS.iter().map(|a| a.0 + 1).max().unwrap_or(1),
            Metric::ALL.len()
        )));
    }
    if cfg.embeddings_per_dataset < PROJECTIONS_PER_TRIAL {
        return Err(Error::Parameter(format!(
            "need at least {PROJECTIONS_PER_TRIAL} embeddings per dataset"
        )));
    }
    let metrics: Vec<Metric> = Metric::ALL[..cfg.features].to_vec();
    let mut true_weights = vec![0.0; cfg.features];
    for (i, w) in ACTIVE_WEIGHTS {
        true_weights[i] = w;
    }
    let techniques = [Technique::Pca, Technique::Mds, Technique::Isomap, Technique::Tsne, Technique::Grp];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vectors = BTreeMap::new();
    let mut meta = BTreeMap::new();
    let mut trials = Vec::new();
    let epoch: DateTime<Utc> = DateTime::from_timestamp(1_700_000_000, 0).unwrap_or_default();
    for d in 0..cfg.datasets {
        let dataset_id = format!("ds{d:02}");
        let ids: Vec<String> = (0..cfg.embeddings_per_dataset).map(|e| format!("{dataset_id}.e{e:02}")).collect();
        for (e, id) in ids.iter().enumerate() {
            let mut v = MetricVector::new(id.clone());
            v.normalized = true;
            for &m in &metrics {
                v.values.insert(m, rng.random::<f64>());
                v.provenance.insert(m, "synthetic".into());
            }
            vectors.insert(id.clone(), v);
            meta.insert(
                id.clone(),
                EmbeddingMeta {
                    dataset_id: dataset_id.clone(),
                    technique: techniques[e % techniques.len()],
                },
            );
        }
        for t in 0..cfg.trials_per_dataset {
            let picked = sample(&mut rng, ids.len(), PROJECTIONS_PER_TRIAL).into_vec();
            let mut noisy: Vec<(usize, f64)> = picked
                .iter()
                .map(|&i| {
                    let v = &vectors[&ids[i]];
                    let u: f64 = metrics.iter().zip(&true_weights).map(|(m, w)| w * v.values[m]).sum();
                    let p: f64 = rng.random_range(1e-12..1.0 - 1e-12);
                    (i, u + cfg.noise_scale * (p / (1.0 - p)).ln())
                })
                .collect();
            noisy.sort_by(|a, b| b.1.total_cmp(&a.1));
            let shown: Vec<String> = picked.iter().map(|&i| ids[i].clone()).collect();
            let mut hearts = vec![0; PROJECTIONS_PER_TRIAL];
            let mut crossed_out = vec![false; PROJECTIONS_PER_TRIAL];
            for (rank, (i, _)) in noisy.iter().enumerate() {
                let slot = picked.iter().position(|p| p == i).unwrap_or(0);
                hearts[slot] = HEARTS_BY_RANK[rank];
                crossed_out[slot] = rank == PROJECTIONS_PER_TRIAL - 1;
            }
            let n = trials.len();
            let trial = TrialRecord {
                trial_id: format!("{dataset_id}.t{t:03}"),
                user_id: format!("u{}", n % 9),
                dataset_id: dataset_id.clone(),
                shown,
                hearts,
                crossed_out,
                difficulty: [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard][n % 3],
                timestamp: epoch + Duration::minutes(n as i64),
            };
            trial.validate()?;
            trials.push(trial);
        }
    }
    Ok(PreferenceCorpus {
        metrics,
        true_weights,
        vectors,
        meta,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swiss_roll_is_deterministic_and_labelled() {
        let a = swiss_roll("s", 200, 0.1, 3).unwrap();
        let b = swiss_roll("s", 200, 0.1, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 3);
        assert_eq!(a.n_classes(), 4);
    }

    #[test]
    fn blobs_cycle_labels() {
        let ds = blobs("b", 30, 5, 3, 10.0, 1).unwrap();
        assert_eq!(&ds.labels().unwrap()[..4], &[0, 1, 2, 0]);
    }

    #[test]
    fn corpus_trials_follow_utility_without_noise() {
        let cfg = CorpusConfig {
            datasets: 2,
            trials_per_dataset: 5,
            noise_scale: 0.0,
            ..CorpusConfig::default()
        };
        let c = preference_corpus(&cfg).unwrap();
        assert_eq!(c.trials.len(), 10);
        for t in &c.trials {
            assert_eq!(t.hearts.iter().sum::<u32>(), 15);
            for i in 0..8 {
                for j in 0..8 {
                    if t.beats(i, j) {
                        assert!(c.utility(&t.shown[i]).unwrap() > c.utility(&t.shown[j]).unwrap());
                    }
                }
            }
        }
    }
}
