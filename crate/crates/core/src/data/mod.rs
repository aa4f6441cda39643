//! Datasets, embeddings and the distance/rank machinery every metric shares.

mod csv_io;
mod images;
mod ranks;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{read_dataset_csv, read_embedding_csv, write_dataset_csv, write_embedding_csv};
pub use images::{ingest_image_folder, ImageIngest, IngestReport};
pub use ranks::{neighborhoods, DistanceMetric, DistanceRankModel, NeighborhoodPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    NumericTable,
    ImageFolder,
    Synthetic,
}

/// A high-dimensional point cloud, optionally labelled.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    id: String,
    points: DMatrix<f64>,
    labels: Option<Vec<usize>>,
    n_classes: usize,
    source: DataSource,
}

impl Dataset {
    pub fn new(
        id: impl Into<String>,
        points: DMatrix<f64>,
        labels: Option<Vec<usize>>,
        source: DataSource,
    ) -> Result<Self> {
        let id = id.into();
        let (n, d) = points.shape();
        if n < 3 {
            return Err(Error::Data(format!("dataset {id} has {n} points, need at least 3")));
        }
        if d < 1 {
            return Err(Error::Data(format!("dataset {id} has no features")));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "dataset {id} has a non-finite value at row {}",
                pos % n
            )));
        }
        let n_classes = match &labels {
            Some(l) if l.len() != n => {
                return Err(Error::Structural(format!(
                    "dataset {id}: {} labels for {n} points",
                    l.len()
                )))
            }
            Some(l) => l.iter().max().map_or(0, |m| m + 1),
            None => 0,
        };
        Ok(Self {
            id,
            points,
            labels,
            n_classes,
            source,
        })
    }

    /// Builds a dataset from row vectors.
    pub fn from_rows(
        id: impl Into<String>,
        rows: &[Vec<f64>],
        labels: Option<Vec<usize>>,
        source: DataSource,
    ) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Structural("ragged feature rows".into()));
        }
        let points = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(id, points, labels, source)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn source(&self) -> DataSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.points.row(i).iter().copied().collect()
    }
}

/// Dimensionality-reduction technique that produced an embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Technique {
    #[serde(rename = "PCA")]
    Pca,
    #[serde(rename = "MDS")]
    Mds,
    #[serde(rename = "Isomap")]
    Isomap,
    #[serde(rename = "tSNE")]
    Tsne,
    #[serde(rename = "GRP")]
    Grp,
    #[serde(rename = "external")]
    External,
}

impl Technique {
    pub fn as_str(self) -> &'static str {
        match self {
            Technique::Pca => "PCA",
            Technique::Mds => "MDS",
            Technique::Isomap => "Isomap",
            Technique::Tsne => "tSNE",
            Technique::Grp => "GRP",
            Technique::External => "external",
        }
    }
}

impl std::fmt::Display for Technique {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A 2D projection of a dataset together with how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub id: String,
    pub dataset_id: String,
    pub coords: Vec<[f64; 2]>,
    pub technique: Technique,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl Embedding {
    pub fn new(
        id: impl Into<String>,
        dataset_id: impl Into<String>,
        coords: Vec<[f64; 2]>,
        technique: Technique,
        params: BTreeMap<String, String>,
    ) -> Result<Self> {
        let id = id.into();
        if let Some(i) = coords.iter().position(|c| !(c[0].is_finite() && c[1].is_finite())) {
            return Err(Error::Data(format!("embedding {id} has a non-finite coordinate at row {i}")));
        }
        Ok(Self {
            id,
            dataset_id: dataset_id.into(),
            coords,
            technique,
            params,
        })
    }

    /// The dataset itself used as its own projection. Only valid for 2D data.
    pub fn identity(ds: &Dataset) -> Result<Self> {
        if ds.dim() != 2 {
            return Err(Error::Structural(format!(
                "identity embedding needs 2D data, dataset {} has {} features",
                ds.id(),
                ds.dim()
            )));
        }
        let coords = (0..ds.len())
            .map(|i| [ds.points()[(i, 0)], ds.points()[(i, 1)]])
            .collect();
        Self::new(
            format!("{}.identity", ds.id()),
            ds.id(),
            coords,
            Technique::External,
            BTreeMap::new(),
        )
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Checks that this embedding can be paired with `ds`.
    pub fn check_belongs_to(&self, ds: &Dataset) -> Result<()> {
        if self.coords.len() != ds.len() {
            return Err(Error::Structural(format!(
                "embedding {} has {} rows but dataset {} has {}",
                self.id,
                self.coords.len(),
                ds.id(),
                ds.len()
            )));
        }
        Ok(())
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist2d(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_invariants() {
        let ok = Dataset::from_rows("a", &[vec![0.0], vec![1.0], vec![2.0]], None, DataSource::Synthetic);
        assert!(ok.is_ok());
        let too_small = Dataset::from_rows("a", &[vec![0.0], vec![1.0]], None, DataSource::Synthetic);
        assert!(matches!(too_small, Err(Error::Data(_))));
        let nan = Dataset::from_rows(
            "a",
            &[vec![0.0], vec![f64::NAN], vec![2.0]],
            None,
            DataSource::Synthetic,
        );
        assert!(matches!(nan, Err(Error::Data(_))));
        let labels = Dataset::from_rows(
            "a",
            &[vec![0.0], vec![1.0], vec![2.0]],
            Some(vec![0, 1]),
            DataSource::Synthetic,
        );
        assert!(matches!(labels, Err(Error::Structural(_))));
    }

    #[test]
    fn embedding_rejects_nan() {
        let e = Embedding::new("e", "d", vec![[0.0, f64::INFINITY]], Technique::Pca, BTreeMap::new());
        assert!(e.is_err());
    }
}
