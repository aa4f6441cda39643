//! Projection quality metrics.
//!
//! [`accuracy`] compares HD and LD neighborhoods, [`stress`] compares pairwise
//! distances, [`nerv`] compares neighbor distributions and [`separability`]
//! scores how well labelled classes separate in the plot. The nine
//! scatterplot diagnostics live in [`crate::scagnostics`].

pub mod accuracy;
pub mod isotonic;
pub mod nerv;
pub mod separability;
pub mod stress;

use serde::{Deserialize, Serialize};

pub use accuracy::{
    auc_log_rnx, continuity, coranking_curves, lcmc, lcmc_raw, trustworthiness, CoRankingCurves,
};
pub use nerv::{nerv, nerv_report, NervConfig, NervReport};
pub use separability::{
    abw, calinski_harabasz, dsc, hypothesis_margin, neighborhood_hit, silhouette, CalDecomposition,
    CalinskiHarabasz, LabeledScatter,
};
pub use stress::{cca_stress, distance_correlation, kruskal_stress, sammon_stress, CcaStress, SammonStress};

/// Default fixed neighborhood size for LCMC, trustworthiness and continuity.
pub fn default_k(n: usize) -> usize {
    7.min(((n - 1) / 2).saturating_sub(1)).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricCategory {
    Scagnostics,
    Separability,
    Accuracy,
}

/// How a raw metric value is mapped onto `[0, 1]`, higher meaning better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Already in `[0, 1]`.
    Identity,
    /// `(x + 1) / 2` for values in `[-1, 1]`.
    SignedUnit,
    /// `max(x, 0)`.
    ClampBelow,
    /// `1 - x`.
    Complement,
    /// `1 / (1 + x)` for unbounded non-negative values.
    Reciprocal,
    /// Min-max within all embeddings of one dataset.
    BatchMinMax,
}

/// Every metric in the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "outlying")]
    Outlying,
    #[serde(rename = "skewed")]
    Skewed,
    #[serde(rename = "clumpy")]
    Clumpy,
    #[serde(rename = "sparse")]
    Sparse,
    #[serde(rename = "striated")]
    Striated,
    #[serde(rename = "convex")]
    Convex,
    #[serde(rename = "skinny")]
    Skinny,
    #[serde(rename = "stringy")]
    Stringy,
    #[serde(rename = "monotonic")]
    Monotonic,
    #[serde(rename = "abw")]
    Abw,
    #[serde(rename = "cal")]
    Cal,
    #[serde(rename = "dsc")]
    Dsc,
    #[serde(rename = "hm")]
    Hm,
    #[serde(rename = "nh")]
    Nh,
    #[serde(rename = "sc")]
    Sc,
    #[serde(rename = "cc")]
    Cc,
    #[serde(rename = "nms")]
    Nms,
    #[serde(rename = "cca")]
    CcaStress,
    #[serde(rename = "nlm")]
    Nlm,
    #[serde(rename = "lcmc")]
    Lcmc,
    #[serde(rename = "trustworthiness")]
    Trustworthiness,
    #[serde(rename = "continuity")]
    Continuity,
    #[serde(rename = "nerv")]
    Nerv,
    #[serde(rename = "auc_log_rnx")]
    AucLogRnx,
}

impl Metric {
    pub const ALL: [Metric; 24] = [
        Metric::Outlying,
        Metric::Skewed,
        Metric::Clumpy,
        Metric::Sparse,
        Metric::Striated,
        Metric::Convex,
        Metric::Skinny,
        Metric::Stringy,
        Metric::Monotonic,
        Metric::Abw,
        Metric::Cal,
        Metric::Dsc,
        Metric::Hm,
        Metric::Nh,
        Metric::Sc,
        Metric::Cc,
        Metric::Nms,
        Metric::CcaStress,
        Metric::Nlm,
        Metric::Lcmc,
        Metric::Trustworthiness,
        Metric::Continuity,
        Metric::Nerv,
        Metric::AucLogRnx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Outlying => "outlying",
            Metric::Skewed => "skewed",
            Metric::Clumpy => "clumpy",
            Metric::Sparse => "sparse",
            Metric::Striated => "striated",
            Metric::Convex => "convex",
            Metric::Skinny => "skinny",
            Metric::Stringy => "stringy",
            Metric::Monotonic => "monotonic",
            Metric::Abw => "abw",
            Metric::Cal => "cal",
            Metric::Dsc => "dsc",
            Metric::Hm => "hm",
            Metric::Nh => "nh",
            Metric::Sc => "sc",
            Metric::Cc => "cc",
            Metric::Nms => "nms",
            Metric::CcaStress => "cca",
            Metric::Nlm => "nlm",
            Metric::Lcmc => "lcmc",
            Metric::Trustworthiness => "trustworthiness",
            Metric::Continuity => "continuity",
            Metric::Nerv => "nerv",
            Metric::AucLogRnx => "auc_log_rnx",
        }
    }

    pub fn from_name(name: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn category(self) -> MetricCategory {
        use Metric::*;
        match self {
            Outlying | Skewed | Clumpy | Sparse | Striated | Convex | Skinny | Stringy | Monotonic => {
                MetricCategory::Scagnostics
            }
            Abw | Cal | Dsc | Hm | Nh | Sc => MetricCategory::Separability,
            Cc | Nms | CcaStress | Nlm | Lcmc | Trustworthiness | Continuity | Nerv | AucLogRnx => {
                MetricCategory::Accuracy
            }
        }
    }

    pub fn normalization(self) -> Normalization {
        use Metric::*;
        match self {
            Sc | Cc => Normalization::SignedUnit,
            AucLogRnx => Normalization::ClampBelow,
            Nms => Normalization::Complement,
            Nlm | CcaStress => Normalization::Reciprocal,
            Hm | Cal | Abw => Normalization::BatchMinMax,
            _ => Normalization::Identity,
        }
    }

    /// True for metrics that need class labels.
    pub fn needs_labels(self) -> bool {
        self.category() == MetricCategory::Separability
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
