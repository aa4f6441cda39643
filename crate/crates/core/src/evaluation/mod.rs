//! Metric vectors: measurement, normalization, pruning, and
//! cross-validation of the preference models built on them.

mod cv;
mod prune;

pub use cv::{cross_validate, train_fold, CvConfig, CvData, CvReport, CvScheme, EmbeddingMeta, FeatureSpace, FittedModel, ModelKind, TrainedModel, train_all};
pub use prune::{correlation_matrix, default_priority, prune_correlated, CorrelationMatrix, DropReason, PruneReport};

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{neighborhoods, Dataset, DistanceMetric, DistanceRankModel, Embedding};
use crate::error::{Error, Result};
use crate::metrics::{self, default_k, LabeledScatter, Metric, NervConfig, Normalization};
use crate::scagnostics::{scagnostics_of, ScagConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    /// Neighborhood size for LCMC, trustworthiness and continuity; `None`
    /// uses [`default_k`].
    pub k: Option<usize>,
    /// Neighborhood size for neighborhood hit.
    pub nh_k: usize,
    pub nerv_perplexity: f64,
    /// `None` uses the median LD distance.
    pub cca_radius: Option<f64>,
    pub scagnostics: ScagConfig,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            k: None,
            nh_k: 5,
            nerv_perplexity: 5.0,
            cca_radius: None,
            scagnostics: ScagConfig::default(),
        }
    }
}

/// Metric values of one embedding, raw or normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub embedding_id: String,
    pub values: BTreeMap<Metric, f64>,
    /// How each value was obtained (parameters, conventions, flags).
    pub provenance: BTreeMap<Metric, String>,
    pub absent: BTreeSet<Metric>,
    pub normalized: bool,
}

impl MetricVector {
    pub fn new(embedding_id: impl Into<String>) -> Self {
        Self {
            embedding_id: embedding_id.into(),
            values: BTreeMap::new(),
            provenance: BTreeMap::new(),
            absent: BTreeSet::new(),
            normalized: false,
        }
    }

    pub fn get(&self, m: Metric) -> Option<f64> {
        self.values.get(&m).copied()
    }

    fn put(&mut self, m: Metric, v: Result<f64>, note: impl Into<String>) {
        match v {
            Ok(v) if v.is_finite() => {
                self.values.insert(m, v);
                self.provenance.insert(m, note.into());
            }
            Ok(v) => self.mark_absent(m, format!("non-finite value {v}")),
            Err(e) => self.mark_absent(m, e.to_string()),
        }
    }

    fn mark_absent(&mut self, m: Metric, reason: String) {
        self.values.remove(&m);
        self.absent.insert(m);
        self.provenance.insert(m, format!("absent: {reason}"));
    }
}

/// Computes every metric for `emb`. Metrics that fail on this input (no
/// labels, degenerate plot, ...) are recorded as absent with the reason;
/// only structural mismatches abort.
pub fn measure(ds: &Dataset, emb: &Embedding, cfg: &MetricConfig) -> Result<MetricVector> {
    emb.check_belongs_to(ds)?;
    let drm = DistanceRankModel::build(ds, emb, DistanceMetric::Euclidean)?;
    let n = ds.len();
    let mut mv = MetricVector::new(emb.id.clone());

    let k = cfg.k.unwrap_or_else(|| default_k(n));
    let knote = format!("k={k}");
    match neighborhoods(&drm, k) {
        Ok(nb) => {
            mv.put(Metric::Lcmc, Ok(metrics::lcmc(&nb)), format!("{knote}; normalized by k"));
            mv.put(Metric::Trustworthiness, metrics::trustworthiness(&drm, &nb), knote.clone());
            mv.put(Metric::Continuity, metrics::continuity(&drm, &nb), knote.clone());
        }
        Err(e) => {
            for m in [Metric::Lcmc, Metric::Trustworthiness, Metric::Continuity] {
                mv.mark_absent(m, e.to_string());
            }
        }
    }
    mv.put(
        Metric::AucLogRnx,
        metrics::coranking_curves(&drm).map(|c| metrics::auc_log_rnx(&c)),
        "1/K-weighted mean of R_NX",
    );
    mv.put(Metric::Nms, metrics::kruskal_stress(&drm), "Kruskal stress-1, isotonic refit");
    match metrics::sammon_stress(&drm) {
        Ok(s) => mv.put(Metric::Nlm, Ok(s.value), format!("excluded_pairs={}", s.excluded_pairs)),
        Err(e) => mv.put(Metric::Nlm, Err(e), ""),
    }
    match metrics::cca_stress(&drm, cfg.cca_radius) {
        Ok(s) => {
            let src = if cfg.cca_radius.is_some() { "configured" } else { "median LD distance" };
            mv.put(Metric::CcaStress, Ok(s.value), format!("radius={} ({src})", s.radius));
        }
        Err(e) => mv.put(Metric::CcaStress, Err(e), ""),
    }
    mv.put(Metric::Cc, Ok(metrics::distance_correlation(&drm)), "Pearson of pairwise distances");
    mv.put(
        Metric::Nerv,
        metrics::nerv(&drm, &NervConfig { perplexity: cfg.nerv_perplexity }),
        format!("perplexity={}", cfg.nerv_perplexity),
    );

    let separability = [Metric::Abw, Metric::Cal, Metric::Dsc, Metric::Hm, Metric::Nh, Metric::Sc];
    match ds.labels() {
        None => {
            for m in separability {
                mv.mark_absent(m, "dataset has no labels".into());
            }
        }
        Some(labels) => match LabeledScatter::new(emb.coords.clone(), labels) {
            Err(e) => {
                for m in separability {
                    mv.mark_absent(m, e.to_string());
                }
            }
            Ok(ls) => {
                mv.put(Metric::Abw, metrics::abw(&ls), "");
                mv.put(Metric::Cal, metrics::calinski_harabasz(&ls).map(|c| c.score), "");
                mv.put(Metric::Dsc, metrics::dsc(&ls), "fraction nearest to own centroid");
                mv.put(Metric::Hm, metrics::hypothesis_margin(&ls), "");
                mv.put(Metric::Nh, metrics::neighborhood_hit(&ls, cfg.nh_k), format!("k={}", cfg.nh_k));
                mv.put(Metric::Sc, metrics::silhouette(&ls), "");
            }
        },
    }

    let s = &cfg.scagnostics;
    let snote = format!("bins={}; binning above {} points; alpha=omega", s.bins, s.binning_threshold);
    match scagnostics_of(&emb.coords, s) {
        Ok(sc) => {
            for (m, v) in sc.to_pairs() {
                mv.put(m, Ok(v), snote.clone());
            }
        }
        Err(e) => {
            for m in Metric::ALL.into_iter().filter(|m| m.category() == metrics::MetricCategory::Scagnostics) {
                mv.mark_absent(m, e.to_string());
            }
        }
    }
    Ok(mv)
}

/// [`measure`] over many embeddings in parallel, preserving order.
pub fn measure_all(ds: &Dataset, embs: &[Embedding], cfg: &MetricConfig) -> Result<Vec<MetricVector>> {
    embs.par_iter().map(|e| measure(ds, e, cfg)).collect()
}

/// Maps raw metric vectors of one dataset's embeddings onto `[0, 1]`,
/// higher meaning better. Batch-relative metrics are min-max scaled over the
/// embeddings that have them; a batch with a single distinct value maps to
/// 0.5.
pub fn normalize(batch: &[MetricVector]) -> Result<Vec<MetricVector>> {
    if let Some(v) = batch.iter().find(|v| v.normalized) {
        return Err(Error::Parameter(format!("{} is already normalized", v.embedding_id)));
    }
    let mut ranges: BTreeMap<Metric, (f64, f64, usize)> = BTreeMap::new();
    for v in batch {
        for (&m, &x) in &v.values {
            let e = ranges.entry(m).or_insert((f64::INFINITY, f64::NEG_INFINITY, 0));
            e.0 = e.0.min(x);
            e.1 = e.1.max(x);
            e.2 += 1;
        }
    }
    Ok(batch
        .iter()
        .map(|v| {
            let mut out = v.clone();
            out.normalized = true;
            for (&m, x) in out.values.iter_mut() {
                let (mapped, flag) = match m.normalization() {
                    Normalization::Identity => (x.clamp(0.0, 1.0), None),
                    Normalization::SignedUnit => (((*x + 1.0) / 2.0).clamp(0.0, 1.0), None),
                    Normalization::ClampBelow => (x.max(0.0), None),
                    Normalization::Complement => ((1.0 - *x).clamp(0.0, 1.0), None),
                    Normalization::Reciprocal => (1.0 / (1.0 + x.max(0.0)), None),
                    Normalization::BatchMinMax => {
                        let (lo, hi, count) = ranges[&m];
                        if hi > lo {
                            ((*x - lo) / (hi - lo), Some(format!("batch min-max over {count} embeddings")))
                        } else {
                            (0.5, Some(format!("batch of {count} with a single value; set to 0.5")))
                        }
                    }
                };
                *x = mapped;
                if let Some(flag) = flag {
                    let p = out.provenance.entry(m).or_default();
                    if !p.is_empty() {
                        p.push_str("; ");
                    }
                    p.push_str(&flag);
                }
            }
            out
        })
        .collect())
}

/// One row per embedding, one column per metric; absent values are empty.
pub fn write_metrics_csv<W: Write>(vectors: &[MetricVector], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["embedding_id".to_string()];
    header.extend(Metric::ALL.iter().map(|m| m.name().to_string()));
    w.write_record(&header)?;
    for v in vectors {
        let mut row = vec![v.embedding_id.clone()];
        row.extend(Metric::ALL.iter().map(|m| v.get(*m).map_or(String::new(), |x| x.to_string())));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<metrics csv>", e))?;
    Ok(())
}

/// Reads a metrics CSV. Unknown columns are rejected; missing metric
/// columns and empty cells become absent values.
pub fn read_metrics_csv<R: Read>(reader: R, normalized: bool) -> Result<Vec<MetricVector>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.get(0) != Some("embedding_id") {
        return Err(Error::Structural("metrics CSV must start with an embedding_id column".into()));
    }
    let cols: Vec<Metric> = headers
        .iter()
        .skip(1)
        .map(|h| Metric::from_name(h).ok_or_else(|| Error::Structural(format!("unknown metric column {h}"))))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut mv = MetricVector::new(&rec[0]);
        mv.normalized = normalized;
        for (m, cell) in cols.iter().zip(rec.iter().skip(1)) {
            if cell.is_empty() {
                mv.absent.insert(*m);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::Data(format!("{}: bad {} value {cell:?}", mv.embedding_id, m)))?;
                mv.values.insert(*m, v);
            }
        }
        for m in Metric::ALL {
            if !mv.values.contains_key(&m) {
                mv.absent.insert(m);
            }
        }
        out.push(mv);
    }
    Ok(out)
}
