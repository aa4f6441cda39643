use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetricVector;
use crate::data::Technique;
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::models::{
    btm_accuracy, fit_btm, Attribution, fit_forest, fit_ranker, rank_groups, BoostedRanker, BtmConfig, BtmModel, ForestConfig,
    ForestModel, RankGroup, RankItem, RankerConfig, Scorer,
};
use crate::preferences::{aggregate_pairwise, binary_labels, PairwisePreference, TrialRecord};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CvScheme {
    /// Leave one dataset out.
    #[serde(rename = "LODO")]
    Lodo,
    /// Leave one technique out.
    #[serde(rename = "LODRO")]
    Lodro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Forest,
    Btm,
    Ranker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub dataset_id: String,
    pub technique: Technique,
}

/// Everything cross-validation needs: normalized metric vectors and
/// metadata keyed by embedding id, the rating trials, and the metric set.
#[derive(Debug, Clone)]
pub struct CvData {
    pub vectors: BTreeMap<String, MetricVector>,
    pub meta: BTreeMap<String, EmbeddingMeta>,
    pub trials: Vec<TrialRecord>,
    pub active: Vec<Metric>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[derive(Default)]
pub struct CvConfig {
    pub forest: ForestConfig,
    /// Pick forest size and depth from the fixed grid by inner
    /// leave-one-group-out AUC on the training groups.
    pub tune_forest: bool,
    pub btm: BtmConfig,
    pub ranker: RankerConfig,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub scheme: CvScheme,
    pub model: ModelKind,
    pub fold_scores: BTreeMap<String, f64>,
    /// Folds that could not be scored, with the reason.
    pub skipped: BTreeMap<String, String>,
    pub mean: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

/// Median imputation plus absent-indicator features, fit on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub metrics: Vec<Metric>,
    pub medians: Vec<f64>,
    /// Metrics absent somewhere in training; each gets a 0/1 flag feature.
    pub flagged: Vec<Metric>,
}

impl FeatureSpace {
    pub fn fit<'a>(vectors: impl IntoIterator<Item = &'a MetricVector>, metrics: &[Metric]) -> Self {
        let vectors: Vec<&MetricVector> = vectors.into_iter().collect();
        let mut medians = Vec::with_capacity(metrics.len());
        let mut flagged = Vec::new();
        for &m in metrics {
            let present: Vec<f64> = vectors.iter().filter_map(|v| v.get(m)).collect();
            medians.push(if present.is_empty() { 0.5 } else { stats::median(&present) });
            if present.len() < vectors.len() {
                flagged.push(m);
            }
        }
        Self {
            metrics: metrics.to_vec(),
            medians,
            flagged,
        }
    }

    pub fn names(&self) -> Vec<String> {
        let mut n: Vec<String> = self.metrics.iter().map(|m| m.name().to_string()).collect();
        n.extend(self.flagged.iter().map(|m| format!("absent:{}", m.name())));
        n
    }

    pub fn transform(&self, v: &MetricVector) -> Vec<f64> {
        let mut x: Vec<f64> = self
            .metrics
            .iter()
            .zip(&self.medians)
            .map(|(m, med)| v.get(*m).unwrap_or(*med))
            .collect();
        x.extend(self.flagged.iter().map(|m| v.get(*m).is_none() as u8 as f64));
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum FittedModel {
    Forest(ForestModel),
    Btm(BtmModel),
    Ranker(BoostedRanker),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub features: FeatureSpace,
    pub model: FittedModel,
}

impl TrainedModel {
    /// Higher is better for every model kind.
    pub fn score(&self, v: &MetricVector) -> Result<f64> {
        let x = self.features.transform(v);
        match &self.model {
            FittedModel::Forest(m) => m.score(&x),
            FittedModel::Btm(m) => m.score(&x),
            FittedModel::Ranker(m) => m.score(&x),
        }
    }

    pub fn attribute(&self, v: &MetricVector) -> Result<Attribution> {
        let x = self.features.transform(v);
        match &self.model {
            FittedModel::Forest(m) => m.attribute(&x),
            FittedModel::Btm(m) => m.attribute(&x),
            FittedModel::Ranker(m) => m.attribute(&x),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self.model {
            FittedModel::Forest(_) => ModelKind::Forest,
            FittedModel::Btm(_) => ModelKind::Btm,
            FittedModel::Ranker(_) => ModelKind::Ranker,
        }
    }
}

fn group_of<'a>(data: &'a CvData, scheme: CvScheme, emb: &str) -> Option<&'a str> {
    let meta = data.meta.get(emb)?;
    Some(match scheme {
        CvScheme::Lodo => meta.dataset_id.as_str(),
        CvScheme::Lodro => meta.technique.as_str(),
    })
}

/// Features of every embedding with a metric vector.
fn feature_map(data: &CvData, space: &FeatureSpace) -> BTreeMap<String, Vec<f64>> {
    data.vectors.iter().map(|(id, v)| (id.clone(), space.transform(v))).collect()
}

/// Trials with every item of the held-out group stripped. Under LODO this
/// drops the held-out dataset's trials entirely.
fn training_trials(data: &CvData, scheme: CvScheme, held_out: &str) -> Vec<TrialRecord> {
    data.trials
        .iter()
        .filter_map(|t| {
            let keep: Vec<usize> = (0..t.shown.len())
                .filter(|&i| group_of(data, scheme, &t.shown[i]).is_some_and(|g| g != held_out))
                .collect();
            if keep.is_empty() {
                return None;
            }
            let mut t = t.clone();
            t.shown = keep.iter().map(|&i| t.shown[i].clone()).collect();
            t.hearts = keep.iter().map(|&i| t.hearts[i]).collect();
            t.crossed_out = keep.iter().map(|&i| t.crossed_out[i]).collect();
            Some(t)
        })
        .collect()
}

fn ranker_groups(trials: &[TrialRecord], features: &BTreeMap<String, Vec<f64>>) -> Vec<RankGroup> {
    rank_groups(trials, |id| features.get(id).map(|v| v.as_slice()))
}

fn forest_rows(trials: &[TrialRecord], features: &BTreeMap<String, Vec<f64>>) -> (Vec<Vec<f64>>, Vec<bool>, Vec<String>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut ids = Vec::new();
    for l in binary_labels(trials) {
        if let Some(f) = features.get(&l.embedding_id) {
            x.push(f.clone());
            y.push(l.good);
            ids.push(l.embedding_id);
        }
    }
    (x, y, ids)
}

fn forest_auc(m: &ForestModel, x: &[Vec<f64>], y: &[bool]) -> Result<Option<f64>> {
    let scores: Vec<f64> = x.iter().map(|r| m.predict_proba(r)).collect::<Result<_>>()?;
    Ok(stats::roc_auc(&scores, y))
}

fn tuned_forest_config(
    x: &[Vec<f64>],
    y: &[bool],
    groups: &[&str],
    names: &[String],
    base: &ForestConfig,
) -> Result<ForestConfig> {
    let distinct: BTreeSet<&str> = groups.iter().copied().collect();
    let mut best: Option<(f64, ForestConfig)> = None;
    for cfg in ForestConfig::grid(base.seed) {
        let cfg = ForestConfig {
            bootstrap: base.bootstrap,
            max_features: base.max_features,
            ..cfg
        };
        let mut aucs = Vec::new();
        for &g in &distinct {
            let (train, test): (Vec<usize>, Vec<usize>) = (0..x.len()).partition(|&i| groups[i] != g);
            let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
            let ty: Vec<bool> = train.iter().map(|&i| y[i]).collect();
            let Ok(m) = fit_forest(&tx, &ty, names.to_vec(), &cfg) else {
                continue;
            };
            let vx: Vec<Vec<f64>> = test.iter().map(|&i| x[i].clone()).collect();
            let vy: Vec<bool> = test.iter().map(|&i| y[i]).collect();
            if let Some(a) = forest_auc(&m, &vx, &vy)? {
                aucs.push(a);
            }
        }
        if aucs.is_empty() {
            continue;
        }
        let mean = stats::mean(&aucs);
        if best.as_ref().is_none_or(|(b, _)| mean > *b) {
            best = Some((mean, cfg));
        }
    }
    Ok(best.map_or(*base, |(_, c)| c))
}

/// Trains one fold's model on every group except `held_out`. Nothing about
/// the held-out group's ratings reaches the model.
pub fn train_fold(kind: ModelKind, data: &CvData, scheme: CvScheme, held_out: &str, cfg: &CvConfig) -> Result<TrainedModel> {
    train(kind, data, Some((scheme, held_out)), cfg)
}

/// Trains on every rated embedding.
pub fn train_all(kind: ModelKind, data: &CvData, cfg: &CvConfig) -> Result<TrainedModel> {
    train(kind, data, None, cfg)
}

fn train(kind: ModelKind, data: &CvData, held_out: Option<(CvScheme, &str)>, cfg: &CvConfig) -> Result<TrainedModel> {
    let keep = |id: &str| match held_out {
        Some((scheme, g)) => group_of(data, scheme, id).is_some_and(|x| x != g),
        None => true,
    };
    let space = FeatureSpace::fit(data.vectors.iter().filter(|(id, _)| keep(id)).map(|(_, v)| v), &data.active);
    let features = feature_map(data, &space);
    let names = space.names();
    let trials = match held_out {
        Some((scheme, g)) => training_trials(data, scheme, g),
        None => data.trials.clone(),
    };
    let scheme = held_out.map_or(CvScheme::Lodo, |h| h.0);
    let model = match kind {
        ModelKind::Forest => {
            let (x, y, ids) = forest_rows(&trials, &features);
            let fcfg = if cfg.tune_forest {
                let groups: Vec<&str> = ids.iter().map(|id| group_of(data, scheme, id).unwrap_or("")).collect();
                tuned_forest_config(&x, &y, &groups, &names, &cfg.forest)?
            } else {
                cfg.forest
            };
            FittedModel::Forest(fit_forest(&x, &y, names, &fcfg)?)
        }
        ModelKind::Btm => {
            let prefs: Vec<PairwisePreference> = aggregate_pairwise(&trials)
                .into_iter()
                .filter(|p| features.contains_key(&p.emb_a) && features.contains_key(&p.emb_b))
                .collect();
            FittedModel::Btm(fit_btm(&prefs, &features, names, &cfg.btm)?)
        }
        ModelKind::Ranker => {
            let groups = ranker_groups(&trials, &features);
            FittedModel::Ranker(fit_ranker(&groups, names, &cfg.ranker)?)
        }
    };
    Ok(TrainedModel { features: space, model })
}

fn held_out_score(
    trained: &TrainedModel,
    data: &CvData,
    scheme: CvScheme,
    held_out: &str,
) -> Result<Option<f64>> {
    let features = feature_map(data, &trained.features);
    let in_fold = |id: &str| group_of(data, scheme, id) == Some(held_out);
    match &trained.model {
        FittedModel::Forest(m) => {
            let (x, y, ids) = forest_rows(&data.trials, &features);
            let keep: Vec<usize> = (0..ids.len()).filter(|&i| in_fold(&ids[i])).collect();
            let x: Vec<Vec<f64>> = keep.iter().map(|&i| x[i].clone()).collect();
            let y: Vec<bool> = keep.iter().map(|&i| y[i]).collect();
            forest_auc(m, &x, &y)
        }
        FittedModel::Btm(m) => {
            let prefs: Vec<PairwisePreference> = aggregate_pairwise(&data.trials)
                .into_iter()
                .filter(|p| features.contains_key(&p.emb_a) && features.contains_key(&p.emb_b))
                .filter(|p| match scheme {
                    CvScheme::Lodo => p.dataset_id == held_out,
                    CvScheme::Lodro => in_fold(&p.emb_a) || in_fold(&p.emb_b),
                })
                .collect();
            btm_accuracy(m, &prefs, &features, None)
        }
        FittedModel::Ranker(m) => {
            let groups = ranker_groups(&data.trials, &features);
            let (mut right, mut total) = (0usize, 0usize);
            for g in &groups {
                let scores: Vec<f64> = g.items.iter().map(|i| m.score(&i.features)).collect::<Result<_>>()?;
                let counts = |i: &RankItem, j: &RankItem| match scheme {
                    CvScheme::Lodo => g.dataset_id == held_out,
                    CvScheme::Lodro => in_fold(&i.embedding_id) || in_fold(&j.embedding_id),
                };
                for (a, ia) in g.items.iter().enumerate() {
                    for (b, ib) in g.items.iter().enumerate() {
                        if ia.relevance > ib.relevance && counts(ia, ib) {
                            total += 1;
                            right += (scores[a] > scores[b]) as usize;
                        }
                    }
                }
            }
            Ok((total > 0).then(|| right as f64 / total as f64))
        }
    }
}

/// One fold per group (dataset or technique) among rated embeddings.
/// Folds are trained concurrently; fold scores are AUC for the forest and
/// pairwise accuracy for the other models.
pub fn cross_validate(kind: ModelKind, data: &CvData, scheme: CvScheme, cfg: &CvConfig) -> Result<CvReport> {
    let groups: BTreeSet<&str> = data
        .trials
        .iter()
        .flat_map(|t| t.shown.iter())
        .filter_map(|id| group_of(data, scheme, id))
        .collect();
    if groups.len() < 2 {
        return Err(Error::Parameter(format!(
            "cross-validation needs at least 2 groups, found {}",
            groups.len()
        )));
    }
    let groups: Vec<&str> = groups.into_iter().collect();
    let results: Vec<(String, std::result::Result<f64, String>)> = groups
        .par_iter()
        .map(|&g| {
            let outcome = match train_fold(kind, data, scheme, g, cfg) {
                Ok(m) => match held_out_score(&m, data, scheme, g) {
                    Ok(Some(s)) => Ok(s),
                    Ok(None) => Err("no evaluable items in held-out group".to_string()),
                    Err(e) => Err(e.to_string()),
                },
                Err(e) => Err(format!("training failed: {e}")),
            };
            (g.to_string(), outcome)
        })
        .collect();
    let mut fold_scores = BTreeMap::new();
    let mut skipped = BTreeMap::new();
    for (g, r) in results {
        match r {
            Ok(s) => {
                fold_scores.insert(g, s);
            }
            Err(why) => {
                log::warn!("fold {g} skipped: {why}");
                skipped.insert(g, why);
            }
        }
    }
    if fold_scores.is_empty() {
        return Err(Error::Training(format!("every fold was skipped: {skipped:?}")));
    }
    let scores: Vec<f64> = fold_scores.values().copied().collect();
    let (mean, ci95_low, ci95_high) = stats::t_interval_95(&scores);
    Ok(CvReport {
        scheme,
        model: kind,
        fold_scores,
        skipped,
        mean,
        ci95_low,
        ci95_high,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_space_imputes_training_median() {
        let mut a = MetricVector::new("a");
        a.values.insert(Metric::Nerv, 0.2);
        a.values.insert(Metric::Dsc, 0.9);
        let mut b = MetricVector::new("b");
        b.values.insert(Metric::Nerv, 0.6);
        let mut c = MetricVector::new("c");
        c.values.insert(Metric::Nerv, 0.4);
        c.values.insert(Metric::Dsc, 0.5);
        let fs = FeatureSpace::fit([&a, &b, &c], &[Metric::Nerv, Metric::Dsc]);
        assert_eq!(fs.names(), vec!["nerv", "dsc", "absent:dsc"]);
        assert_eq!(fs.transform(&b), vec![0.6, 0.7, 1.0]);
        assert_eq!(fs.transform(&a), vec![0.2, 0.9, 0.0]);
    }
}
