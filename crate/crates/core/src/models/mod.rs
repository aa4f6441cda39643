//! Preference models over metric feature vectors: a good/bad forest, a
//! Bradley-Terry pairwise model and a LambdaMART ranker.

pub mod btm;
pub mod forest;
pub mod ranker;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use btm::{btm_accuracy, fit_btm, BtmConfig, BtmModel};
pub use forest::{fit_forest, ForestConfig, ForestModel};
pub use ranker::{fit_ranker, rank_groups, BoostedRanker, RankGroup, RankItem, RankedItem, RankerConfig};

use crate::error::{Error, Result};

/// Per-feature decomposition of a model output:
/// `baseline + sum(contributions) == prediction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub baseline: f64,
    pub contributions: Vec<f64>,
    pub prediction: f64,
}

/// Anything that maps a feature vector to a "higher is better" score.
pub trait Scorer {
    fn feature_names(&self) -> &[String];
    fn score(&self, x: &[f64]) -> Result<f64>;
    fn attribute(&self, x: &[f64]) -> Result<Attribution>;
}

pub(crate) fn check_row(x: &[f64], names: &[String]) -> Result<()> {
    if x.len() != names.len() {
        return Err(Error::Parameter(format!(
            "feature vector has {} entries, model expects {}",
            x.len(),
            names.len()
        )));
    }
    Ok(())
}

pub(crate) fn check_features(x: &[Vec<f64>], names: &[String]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Training("no training rows".into()));
    }
    if names.is_empty() {
        return Err(Error::Training("no features".into()));
    }
    for (i, row) in x.iter().enumerate() {
        if row.len() != names.len() {
            return Err(Error::Structural(format!(
                "row {i} has {} features, expected {}",
                row.len(),
                names.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("row {i} has a non-finite feature")));
        }
    }
    Ok(())
}
