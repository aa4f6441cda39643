use std::path::{Path, PathBuf};

use drjudge::evaluation::{default_priority, CvConfig, MetricConfig};
use drjudge::generators::GeneratorSpec;
use drjudge::metrics::Metric;
use drjudge::models::{BtmConfig, ForestConfig, RankerConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    Csv,
    Images,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInput {
    pub id: String,
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
    pub format: InputFormat,
    #[serde(default = "default_image_side")]
    pub image_side: u32,
}

fn default_image_side() -> u32 {
    28
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[derive(Default)]
pub struct ModelsConfig {
    pub forest: ForestConfig,
    pub tune_forest: bool,
    pub btm: BtmConfig,
    pub ranker: RankerConfig,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PruningConfig {
    pub threshold: f64,
    pub priority: Vec<Metric>,
}

impl Default for PruningConfig {
    fn default() -> Self {
        Self {
            threshold: 0.95,
            priority: default_priority(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetamapLabels {
    None,
    Technique,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetamapConfig {
    pub grid: usize,
    pub layout: GeneratorSpec,
    pub labels: MetamapLabels,
}

impl Default for MetamapConfig {
    fn default() -> Self {
        Self {
            grid: 32,
            layout: GeneratorSpec::ClassicalMds,
            labels: MetamapLabels::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    #[serde(default)]
    pub datasets: Vec<DatasetInput>,
    /// JSON-lines file of trial records.
    #[serde(default)]
    pub trials: Option<PathBuf>,
    #[serde(default = "default_generators")]
    pub generators: Vec<GeneratorSpec>,
    #[serde(default)]
    pub metrics: MetricConfig,
    #[serde(default)]
    pub models: ModelsConfig,
    #[serde(default)]
    pub pruning: PruningConfig,
    #[serde(default)]
    pub metamap: MetamapConfig,
}

pub fn default_generators() -> Vec<GeneratorSpec> {
    vec![
        GeneratorSpec::Pca,
        GeneratorSpec::ClassicalMds,
        GeneratorSpec::Isomap { n_neighbors: 10 },
        GeneratorSpec::tsne(0),
        GeneratorSpec::Grp { seed: 0 },
    ]
}

impl PipelineConfig {
    /// A config with the default model and metric settings and no inputs.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            datasets: Vec::new(),
            trials: None,
            generators: default_generators(),
            metrics: MetricConfig::default(),
            models: ModelsConfig::default(),
            pruning: PruningConfig::default(),
            metamap: MetamapConfig::default(),
        }
    }

    /// Reads TOML, or JSON when the extension is `.json`, and resolves
    /// relative input paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut cfg.datasets {
            if d.path.is_relative() {
                d.path = base.join(&d.path);
            }
        }
        if let Some(t) = &mut cfg.trials {
            if t.is_relative() {
                *t = base.join(&*t);
            }
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Every referenced input must exist.
    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::BTreeSet::new();
        for d in &self.datasets {
            if !ids.insert(&d.id) {
                return Err(ServiceError::Config(format!("dataset id {} listed twice", d.id)));
            }
            if d.id.is_empty() || d.id.contains(['/', '\\', '.']) {
                return Err(ServiceError::Config(format!("invalid dataset id {:?}", d.id)));
            }
            if !d.path.exists() {
                return Err(ServiceError::Config(format!("input {} does not exist", d.path.display())));
            }
        }
        if let Some(t) = &self.trials {
            if !t.exists() {
                return Err(ServiceError::Config(format!("trials file {} does not exist", t.display())));
            }
        }
        if !(0.0..=1.0).contains(&self.pruning.threshold) {
            return Err(ServiceError::Config(format!(
                "pruning threshold {} not in [0, 1]",
                self.pruning.threshold
            )));
        }
        Ok(())
    }

    /// A seed derived from the config seed and a stream name.
    pub fn substream(&self, name: &str) -> u64 {
        substream(self.seed, name)
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            forest: ForestConfig {
                seed: self.substream("model/forest"),
                ..self.models.forest
            },
            tune_forest: self.models.tune_forest,
            btm: self.models.btm,
            ranker: RankerConfig {
                seed: self.substream("model/ranker"),
                ..self.models.ranker
            },
        }
    }
}

pub fn substream(seed: u64, name: &str) -> u64 {
    let digest = Sha256::digest(format!("{seed}/{name}").as_bytes());
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_mandatory() {
        let err = PipelineConfig::from_toml("datasets = []").unwrap_err();
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn toml_and_json_round_trip() {
        let cfg = PipelineConfig::with_seed(11);
        let t = cfg.to_toml().unwrap();
        assert_eq!(PipelineConfig::from_toml(&t).unwrap(), cfg);
        let j = serde_json::to_string(&cfg).unwrap();
        assert_eq!(PipelineConfig::from_json(&j).unwrap(), cfg);
    }

    #[test]
    fn substreams_differ_by_name_and_seed() {
        assert_ne!(substream(1, "a"), substream(1, "b"));
        assert_ne!(substream(1, "a"), substream(2, "a"));
        assert_eq!(substream(1, "a"), substream(1, "a"));
    }

    #[test]
    fn missing_input_fails_validation() {
        let mut cfg = PipelineConfig::with_seed(0);
        cfg.datasets.push(DatasetInput {
            id: "x".into(),
            path: "/definitely/not/here.csv".into(),
            format: InputFormat::Csv,
            image_side: 28,
        });
        assert!(matches!(cfg.validate(), Err(ServiceError::Config(_))));
    }
}
