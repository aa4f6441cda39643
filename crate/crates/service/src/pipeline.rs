//! Pipeline stages shared by the CLI and the HTTP service. Every stage
//! records its inputs and outputs in a [`Run`] that ends as a manifest.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use drjudge::data::{ingest_image_folder, read_dataset_csv, Embedding, Technique};
use drjudge::evaluation::{
    cross_validate, measure, normalize, prune_correlated, train_all, write_metrics_csv, CvData, CvReport, CvScheme,
    EmbeddingMeta, MetricVector, ModelKind, PruneReport, TrainedModel,
};
use drjudge::generators::{generate_all, GeneratorSpec};
use drjudge::metamap::{build_metamap, Metamap};
use drjudge::metrics::Metric;
use drjudge::models::Attribution;
use drjudge::preferences::{TrialRecord, TrialStore};
use serde::{Deserialize, Serialize};

use crate::config::{substream, DatasetInput, InputFormat, MetamapLabels, PipelineConfig};
use crate::error::{Result, ServiceError};
use crate::store::{sha256_hex, Store};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub skipped: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

/// Collects what a stage read and wrote.
pub struct Run<'a> {
    pub store: &'a Store,
    pub manifest: Manifest,
}

impl<'a> Run<'a> {
    pub fn new(store: &'a Store, command: &str, cfg: &PipelineConfig) -> Result<Self> {
        Ok(Self {
            store,
            manifest: Manifest {
                command: command.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: cfg.seed,
                config: serde_json::to_value(cfg).map_err(drjudge::Error::from)?,
                ..Manifest::default()
            },
        })
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let h = self.store.write_json(rel, value)?;
        self.manifest.outputs.insert(rel.to_string(), h);
        Ok(())
    }

    fn input_bytes(&mut self, name: &str, bytes: &[u8]) {
        self.manifest.inputs.insert(name.to_string(), sha256_hex(bytes));
    }

    /// Hashes a stored artifact this stage depends on.
    fn input_artifact(&mut self, rel: &str) -> Result<()> {
        let bytes = self.store.read_bytes(rel)?;
        self.input_bytes(rel, &bytes);
        Ok(())
    }

    fn skip(&mut self, what: impl Into<String>, why: impl ToString) {
        let what = what.into();
        let why = why.to_string();
        log::warn!("skipped {what}: {why}");
        self.manifest.skipped.insert(what, why);
    }

    pub fn finish(self) -> Result<Manifest> {
        let rel = format!("manifests/{}.json", self.manifest.command);
        self.store.write_json(&rel, &self.manifest)?;
        Ok(self.manifest)
    }
}

fn hash_tree(run: &mut Run, root: &Path) -> Result<()> {
    let mut stack = vec![root.to_path_buf()];
    let mut files = Vec::new();
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| ServiceError::io(&dir, e))? {
            let p = entry.map_err(|e| ServiceError::io(&dir, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files.sort();
    for f in files {
        let bytes = std::fs::read(&f).map_err(|e| ServiceError::io(&f, e))?;
        run.input_bytes(&f.display().to_string(), &bytes);
    }
    Ok(())
}

pub fn ingest_dataset(run: &mut Run, input: &DatasetInput) -> Result<()> {
    let (ds, class_names) = match input.format {
        InputFormat::Csv => {
            let bytes = std::fs::read(&input.path).map_err(|e| ServiceError::io(&input.path, e))?;
            run.input_bytes(&input.path.display().to_string(), &bytes);
            (read_dataset_csv(&input.id, bytes.as_slice())?, Vec::new())
        }
        InputFormat::Images => {
            hash_tree(run, &input.path)?;
            let ing = ingest_image_folder(&input.path, input.image_side)?;
            for (p, why) in &ing.report.skipped {
                run.skip(p.display().to_string(), why);
            }
            let ds = drjudge::Dataset::new(
                &input.id,
                ing.dataset.points().clone(),
                ing.dataset.labels().map(<[usize]>::to_vec),
                ing.dataset.source(),
            )?;
            (ds, ing.class_names)
        }
    };
    for (rel, h) in run.store.write_dataset(&ds, class_names)? {
        run.manifest.outputs.insert(rel, h);
    }
    Ok(())
}

pub fn read_trials_jsonl(path: &Path) -> Result<Vec<TrialRecord>> {
    let file = std::fs::File::open(path).map_err(|e| ServiceError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ServiceError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let t: TrialRecord = serde_json::from_str(&line)
            .map_err(|e| ServiceError::Config(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.push(t);
    }
    Ok(out)
}

/// Records one trial. Any existing trial with the same id is a conflict.
pub fn record_trial(trials: &mut TrialStore, t: TrialRecord) -> Result<()> {
    t.validate()?;
    if trials.contains(&t.trial_id) {
        return Err(drjudge::Error::Conflict(format!("trial {} already recorded", t.trial_id)).into());
    }
    trials.record(t)?;
    Ok(())
}

pub fn ingest(store: &Store, cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let mut run = Run::new(store, "ingest", cfg)?;
    for input in &cfg.datasets {
        ingest_dataset(&mut run, input)?;
    }
    if let Some(path) = &cfg.trials {
        let bytes = std::fs::read(path).map_err(|e| ServiceError::io(path, e))?;
        run.input_bytes(&path.display().to_string(), &bytes);
        let mut ts = TrialStore::open(store.trials_path())?;
        for t in read_trials_jsonl(path)? {
            t.validate()?;
            ts.record(t)?;
        }
        let h = sha256_hex(&store.read_bytes("trials.jsonl")?);
        run.manifest.outputs.insert("trials.jsonl".into(), h);
    }
    run.finish()
}

/// The spec actually run: seeded techniques draw from a substream named
/// after the dataset and the manifest entry.
pub fn resolve_spec(cfg_seed: u64, dataset_id: &str, spec: &GeneratorSpec) -> GeneratorSpec {
    let s = substream(cfg_seed, &format!("generator/{dataset_id}/{}", spec.slug()));
    match spec {
        GeneratorSpec::Tsne {
            perplexity,
            iterations,
            learning_rate,
            ..
        } => GeneratorSpec::Tsne {
            perplexity: *perplexity,
            iterations: *iterations,
            learning_rate: *learning_rate,
            seed: s,
        },
        GeneratorSpec::Grp { .. } => GeneratorSpec::Grp { seed: s },
        other => other.clone(),
    }
}

pub fn project_dataset(run: &mut Run, cfg: &PipelineConfig, specs: &[GeneratorSpec], dataset_id: &str) -> Result<()> {
    run.input_artifact(&format!("datasets/{dataset_id}/dataset.csv"))?;
    let ds = run.store.read_dataset(dataset_id)?;
    let resolved: Vec<GeneratorSpec> = specs.iter().map(|s| resolve_spec(cfg.seed, dataset_id, s)).collect();
    run.store.remove_dir(&format!("datasets/{dataset_id}/embeddings"))?;
    for (spec, result) in specs.iter().zip(generate_all(&ds, &resolved)) {
        let slug = spec.slug();
        match result {
            Ok(mut emb) => {
                emb.id = format!("{dataset_id}.{slug}");
                if let GeneratorSpec::Tsne { seed, .. } | GeneratorSpec::Grp { seed } = spec {
                    emb.params.insert("manifest_seed".into(), seed.to_string());
                }
                let (rel, h) = run.store.write_embedding(&emb, &slug)?;
                run.manifest.outputs.insert(rel, h);
            }
            Err(e) => run.skip(format!("{dataset_id}.{slug}"), e),
        }
    }
    Ok(())
}

fn selected(store: &Store, dataset: Option<&str>) -> Result<Vec<String>> {
    match dataset {
        Some(id) => {
            store.dataset_summary(id)?;
            Ok(vec![id.to_string()])
        }
        None => store.dataset_ids(),
    }
}

pub fn project(store: &Store, cfg: &PipelineConfig, dataset: Option<&str>) -> Result<Manifest> {
    let mut run = Run::new(store, "project", cfg)?;
    for id in selected(store, dataset)? {
        project_dataset(&mut run, cfg, &cfg.generators, &id)?;
    }
    run.finish()
}

/// Measures every stored embedding of a dataset and writes raw and
/// batch-normalized metric vectors. `progress` receives the fraction done.
pub fn measure_dataset(run: &mut Run, cfg: &PipelineConfig, dataset_id: &str, progress: &dyn Fn(f64)) -> Result<()> {
    run.input_artifact(&format!("datasets/{dataset_id}/dataset.csv"))?;
    let ds = run.store.read_dataset(dataset_id)?;
    let embs = run.store.read_embeddings(dataset_id)?;
    if embs.is_empty() {
        return Err(ServiceError::Precondition(format!("dataset {dataset_id} has no projections")));
    }
    let mut raw = Vec::with_capacity(embs.len());
    for (i, e) in embs.iter().enumerate() {
        let bytes = serde_json::to_vec_pretty(e).map_err(drjudge::Error::from)?;
        run.input_bytes(&format!("datasets/{dataset_id}/embeddings/{}", e.id), &bytes);
        raw.push(measure(&ds, e, &cfg.metrics)?);
        progress((i + 1) as f64 / embs.len() as f64);
    }
    let norm = normalize(&raw)?;
    let dir = format!("datasets/{dataset_id}/metrics");
    run.write_json(&format!("{dir}/raw.json"), &raw)?;
    run.write_json(&format!("{dir}/normalized.json"), &norm)?;
    let mut csv = Vec::new();
    write_metrics_csv(&norm, &mut csv)?;
    let rel = format!("{dir}/normalized.csv");
    let h = run.store.write_bytes(&rel, &csv)?;
    run.manifest.outputs.insert(rel, h);
    Ok(())
}

pub fn measure_stage(store: &Store, cfg: &PipelineConfig, dataset: Option<&str>) -> Result<Manifest> {
    let mut run = Run::new(store, "measure", cfg)?;
    for id in selected(store, dataset)? {
        measure_dataset(&mut run, cfg, &id, &|_| {})?;
    }
    run.finish()
}

/// Normalized vectors, embedding metadata and trials across all datasets.
pub fn load_cv_data(run: &mut Run) -> Result<CvData> {
    let mut vectors = BTreeMap::new();
    let mut meta = BTreeMap::new();
    for id in run.store.dataset_ids()? {
        let rel = format!("datasets/{id}/metrics/normalized.json");
        if !run.store.exists(&rel) {
            run.skip(format!("dataset {id}"), "not measured");
            continue;
        }
        run.input_artifact(&rel)?;
        for v in run.store.read_metrics(&id, true)? {
            vectors.insert(v.embedding_id.clone(), v);
        }
        for e in run.store.read_embeddings(&id)? {
            meta.insert(
                e.id.clone(),
                EmbeddingMeta {
                    dataset_id: id.clone(),
                    technique: e.technique,
                },
            );
        }
    }
    let trials = if run.store.exists("trials.jsonl") {
        run.input_artifact("trials.jsonl")?;
        TrialStore::open(run.store.trials_path())?.trials().to_vec()
    } else {
        Vec::new()
    };
    Ok(CvData {
        vectors,
        meta,
        trials,
        active: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub model_id: String,
    pub kind: ModelKind,
    pub pruning: PruneReport,
    pub trained: TrainedModel,
}

pub const MODEL_KINDS: [ModelKind; 3] = [ModelKind::Forest, ModelKind::Btm, ModelKind::Ranker];

pub fn model_id(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Forest => "forest",
        ModelKind::Btm => "btm",
        ModelKind::Ranker => "ranker",
    }
}

fn pruned(run: &mut Run, cfg: &PipelineConfig) -> Result<(CvData, PruneReport)> {
    let mut data = load_cv_data(run)?;
    let all: Vec<MetricVector> = data.vectors.values().cloned().collect();
    let report = prune_correlated(&all, cfg.pruning.threshold, &cfg.pruning.priority);
    if report.active.is_empty() {
        return Err(ServiceError::Precondition("no metric survives pruning".into()));
    }
    data.active = report.active.clone();
    Ok((data, report))
}

pub fn train(store: &Store, cfg: &PipelineConfig) -> Result<Manifest> {
    let mut run = Run::new(store, "train", cfg)?;
    let (data, pruning) = pruned(&mut run, cfg)?;
    let cv = cfg.cv_config();
    let mut trained_any = false;
    for kind in MODEL_KINDS {
        match train_all(kind, &data, &cv) {
            Ok(trained) => {
                let art = ModelArtifact {
                    model_id: model_id(kind).to_string(),
                    kind,
                    pruning: pruning.clone(),
                    trained,
                };
                run.write_json(&format!("models/{}.json", art.model_id), &art)?;
                trained_any = true;
            }
            Err(e) => run.skip(model_id(kind), e),
        }
    }
    if !trained_any {
        return Err(drjudge::Error::Training(format!("no model could be trained: {:?}", run.manifest.skipped)).into());
    }
    run.finish()
}

pub fn evaluate(store: &Store, cfg: &PipelineConfig) -> Result<Manifest> {
    let mut run = Run::new(store, "evaluate", cfg)?;
    let (data, _) = pruned(&mut run, cfg)?;
    let cv = cfg.cv_config();
    let mut reports: Vec<CvReport> = Vec::new();
    for kind in MODEL_KINDS {
        for scheme in [CvScheme::Lodo, CvScheme::Lodro] {
            let name = format!("{}-{}", model_id(kind), scheme_name(scheme));
            match cross_validate(kind, &data, scheme, &cv) {
                Ok(r) => {
                    run.write_json(&format!("evaluation/{name}.json"), &r)?;
                    reports.push(r);
                }
                Err(e) => run.skip(name, e),
            }
        }
    }
    run.write_json("evaluation/summary.json", &reports)?;
    run.finish()
}

fn scheme_name(s: CvScheme) -> &'static str {
    match s {
        CvScheme::Lodo => "lodo",
        CvScheme::Lodro => "lodro",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub rank: usize,
    pub embedding_id: String,
    pub technique: Technique,
    pub params: BTreeMap<String, String>,
    pub score: f64,
    pub metrics: BTreeMap<Metric, f64>,
    pub attribution: Attribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub dataset_id: String,
    pub model_id: String,
    pub feature_names: Vec<String>,
    pub rows: Vec<RankingRow>,
}

/// Scores every measured embedding of a dataset; descending score, ties by id.
pub fn compute_ranking(run: &mut Run, dataset_id: &str, model: &str) -> Result<(Ranking, Vec<MetricVector>)> {
    let model_rel = format!("models/{model}.json");
    let art: ModelArtifact = run.store.read_json(&model_rel)?;
    run.input_artifact(&model_rel)?;
    let metrics_rel = format!("datasets/{dataset_id}/metrics/normalized.json");
    let vectors = run.store.read_metrics(dataset_id, true)?;
    run.input_artifact(&metrics_rel)?;
    let embs: BTreeMap<String, Embedding> = run
        .store
        .read_embeddings(dataset_id)?
        .into_iter()
        .map(|e| (e.id.clone(), e))
        .collect();
    let mut rows = Vec::with_capacity(vectors.len());
    for v in &vectors {
        let emb = embs
            .get(&v.embedding_id)
            .ok_or_else(|| ServiceError::NotFound(format!("embedding {}", v.embedding_id)))?;
        rows.push(RankingRow {
            rank: 0,
            embedding_id: v.embedding_id.clone(),
            technique: emb.technique,
            params: emb.params.clone(),
            score: art.trained.score(v)?,
            metrics: v.values.clone(),
            attribution: art.trained.attribute(v)?,
        });
    }
    rows.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.embedding_id.cmp(&b.embedding_id)));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok((
        Ranking {
            dataset_id: dataset_id.to_string(),
            model_id: model.to_string(),
            feature_names: art.trained.features.names(),
            rows,
        },
        vectors,
    ))
}

pub fn rank_dataset(run: &mut Run, dataset_id: &str, model: &str) -> Result<Ranking> {
    let (ranking, _) = compute_ranking(run, dataset_id, model)?;
    run.write_json(&format!("rankings/{dataset_id}.json"), &ranking)?;
    Ok(ranking)
}

pub fn rank(store: &Store, cfg: &PipelineConfig, dataset: Option<&str>, model: &str) -> Result<Manifest> {
    let mut run = Run::new(store, "rank", cfg)?;
    for id in selected(store, dataset)? {
        rank_dataset(&mut run, &id, model)?;
    }
    run.finish()
}

pub fn metamap_dataset(run: &mut Run, cfg: &PipelineConfig, dataset_id: &str, model: &str) -> Result<Metamap> {
    let (ranking, vectors) = compute_ranking(run, dataset_id, model)?;
    let score_of: BTreeMap<&str, f64> = ranking.rows.iter().map(|r| (r.embedding_id.as_str(), r.score)).collect();
    let scores: Vec<f64> = vectors.iter().map(|v| score_of[v.embedding_id.as_str()]).collect();
    let labels = match cfg.metamap.labels {
        MetamapLabels::None => None,
        MetamapLabels::Technique => {
            let techniques: BTreeMap<&str, Technique> =
                ranking.rows.iter().map(|r| (r.embedding_id.as_str(), r.technique)).collect();
            let mut names: Vec<&str> = techniques.values().map(|t| t.as_str()).collect();
            names.sort();
            names.dedup();
            Some(
                vectors
                    .iter()
                    .map(|v| {
                        let t = techniques[v.embedding_id.as_str()].as_str();
                        names.iter().position(|n| *n == t).unwrap_or(0)
                    })
                    .collect(),
            )
        }
    };
    let layout = resolve_spec(cfg.seed, &format!("metamap/{dataset_id}"), &cfg.metamap.layout);
    let mut mm = build_metamap(&vectors, &scores, &layout, cfg.metamap.grid, labels)?;
    mm.technique_used = cfg.metamap.layout.clone();
    run.write_json(&format!("metamaps/{dataset_id}.json"), &mm)?;
    Ok(mm)
}

pub fn metamap(store: &Store, cfg: &PipelineConfig, dataset: Option<&str>, model: &str) -> Result<Manifest> {
    let mut run = Run::new(store, "metamap", cfg)?;
    for id in selected(store, dataset)? {
        metamap_dataset(&mut run, cfg, &id, model)?;
    }
    run.finish()
}

/// Every batch stage in order.
pub fn run_all(store: &Store, cfg: &PipelineConfig, model: &str) -> Result<Vec<Manifest>> {
    Ok(vec![
        ingest(store, cfg)?,
        project(store, cfg, None)?,
        measure_stage(store, cfg, None)?,
        train(store, cfg)?,
        evaluate(store, cfg)?,
        rank(store, cfg, None, model)?,
        metamap(store, cfg, None, model)?,
    ])
}
