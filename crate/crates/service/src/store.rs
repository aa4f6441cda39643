//! On-disk artifact tree rooted at the data directory.
//!
//! ```text
//! datasets/{id}/dataset.csv, dataset.json
//! datasets/{id}/embeddings/{slug}.json
//! datasets/{id}/metrics/raw.json, normalized.json, normalized.csv
//! models/{model_id}.json
//! evaluation/{model}-{scheme}.json
//! rankings/{dataset_id}.json
//! metamaps/{dataset_id}.json
//! trials.jsonl
//! manifests/{command}.json
//! ```

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use drjudge::data::{read_dataset_csv, write_dataset_csv, DataSource, Dataset, Embedding};
use drjudge::evaluation::MetricVector;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ServiceError};

pub const DATA_DIR_ENV: &str = "DRJUDGE_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub id: String,
    pub n: usize,
    pub dim: usize,
    pub labeled: bool,
    pub n_classes: usize,
    pub source: DataSource,
    #[serde(default)]
    pub class_names: Vec<String>,
}

impl DatasetSummary {
    pub fn of(ds: &Dataset, class_names: Vec<String>) -> Self {
        Self {
            id: ds.id().to_string(),
            n: ds.len(),
            dim: ds.dim(),
            labeled: ds.labels().is_some(),
            n_classes: ds.n_classes(),
            source: ds.source(),
            class_names,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| ServiceError::io(&root, e))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn trials_path(&self) -> PathBuf {
        self.path("trials.jsonl")
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.path(rel).exists()
    }

    /// Writes through a temporary file and a rename. Returns the content hash.
    pub fn write_bytes(&self, rel: &str, bytes: &[u8]) -> Result<String> {
        let path = self.path(rel);
        let dir = path.parent().unwrap_or(&self.root);
        std::fs::create_dir_all(dir).map_err(|e| ServiceError::io(dir, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| ServiceError::io(dir, e))?;
        tmp.write_all(bytes).map_err(|e| ServiceError::io(&path, e))?;
        tmp.as_file().sync_all().map_err(|e| ServiceError::io(&path, e))?;
        tmp.persist(&path).map_err(|e| ServiceError::io(&path, e.error))?;
        Ok(sha256_hex(bytes))
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<String> {
        let mut text = serde_json::to_string_pretty(value).map_err(drjudge::Error::from)?;
        text.push('\n');
        self.write_bytes(rel, text.as_bytes())
    }

    pub fn read_bytes(&self, rel: &str) -> Result<Vec<u8>> {
        let path = self.path(rel);
        std::fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => ServiceError::NotFound(rel.to_string()),
            _ => ServiceError::io(&path, e),
        })
    }

    pub fn read_json<T: DeserializeOwned>(&self, rel: &str) -> Result<T> {
        let bytes = self.read_bytes(rel)?;
        Ok(serde_json::from_slice(&bytes).map_err(drjudge::Error::from)?)
    }

    pub fn remove_dir(&self, rel: &str) -> Result<()> {
        let path = self.path(rel);
        match std::fs::remove_dir_all(&path) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
            Err(e) => Err(ServiceError::io(&path, e)),
        }
    }

    fn list(&self, rel: &str, ext: &str) -> Result<Vec<String>> {
        let dir = self.path(rel);
        let entries = match std::fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(ServiceError::io(&dir, e)),
        };
        let mut out = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| ServiceError::io(&dir, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if ext.is_empty() {
                if entry.path().is_dir() {
                    out.push(name);
                }
            } else if let Some(stem) = name.strip_suffix(ext) {
                out.push(stem.to_string());
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn dataset_ids(&self) -> Result<Vec<String>> {
        Ok(self
            .list("datasets", "")?
            .into_iter()
            .filter(|id| self.exists(&format!("datasets/{id}/dataset.json")))
            .collect())
    }

    pub fn write_dataset(&self, ds: &Dataset, class_names: Vec<String>) -> Result<BTreeMap<String, String>> {
        let id = ds.id();
        let mut csv = Vec::new();
        write_dataset_csv(ds, &mut csv)?;
        let mut out = BTreeMap::new();
        let rel = format!("datasets/{id}/dataset.csv");
        out.insert(rel.clone(), self.write_bytes(&rel, &csv)?);
        let rel = format!("datasets/{id}/dataset.json");
        out.insert(rel.clone(), self.write_json(&rel, &DatasetSummary::of(ds, class_names))?);
        Ok(out)
    }

    pub fn dataset_summary(&self, id: &str) -> Result<DatasetSummary> {
        self.read_json(&format!("datasets/{id}/dataset.json"))
    }

    pub fn read_dataset(&self, id: &str) -> Result<Dataset> {
        let summary = self.dataset_summary(id)?;
        let bytes = self.read_bytes(&format!("datasets/{id}/dataset.csv"))?;
        let ds = read_dataset_csv(id, bytes.as_slice())?;
        let labels = ds.labels().map(<[usize]>::to_vec);
        Ok(Dataset::new(id, ds.points().clone(), labels, summary.source)?)
    }

    pub fn write_embedding(&self, emb: &Embedding, slug: &str) -> Result<(String, String)> {
        let rel = format!("datasets/{}/embeddings/{slug}.json", emb.dataset_id);
        let h = self.write_json(&rel, emb)?;
        Ok((rel, h))
    }

    pub fn read_embeddings(&self, dataset_id: &str) -> Result<Vec<Embedding>> {
        let dir = format!("datasets/{dataset_id}/embeddings");
        let mut out: Vec<Embedding> = self
            .list(&dir, ".json")?
            .iter()
            .map(|slug| self.read_json(&format!("{dir}/{slug}.json")))
            .collect::<Result<_>>()?;
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }

    pub fn read_metrics(&self, dataset_id: &str, normalized: bool) -> Result<Vec<MetricVector>> {
        let file = if normalized { "normalized" } else { "raw" };
        self.read_json(&format!("datasets/{dataset_id}/metrics/{file}.json"))
    }

    pub fn model_ids(&self) -> Result<Vec<String>> {
        self.list("models", ".json")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_missing_is_not_found() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let h = store.write_json("a/b.json", &vec![1.5, 2.0]).unwrap();
        assert_eq!(h.len(), 64);
        let back: Vec<f64> = store.read_json("a/b.json").unwrap();
        assert_eq!(back, vec![1.5, 2.0]);
        assert!(matches!(store.read_json::<Vec<f64>>("nope.json"), Err(ServiceError::NotFound(_))));
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let rows = vec![vec![0.1, 0.2], vec![1.0 / 3.0, 4.0], vec![5.5, -6.25]];
        let ds = Dataset::from_rows("d", &rows, Some(vec![0, 1, 0]), DataSource::Synthetic).unwrap();
        store.write_dataset(&ds, Vec::new()).unwrap();
        assert_eq!(store.read_dataset("d").unwrap(), ds);
        assert_eq!(store.dataset_ids().unwrap(), vec!["d"]);
    }
}
