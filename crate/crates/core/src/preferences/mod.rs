//! Human rating trials and the pairwise preferences derived from them.
//!
//! In a trial a participant sees eight projections of one dataset, spreads
//! at most 15 hearts over them (at most 4 each) and may cross out bad ones.

mod store;

pub use store::{RecordOutcome, TrialStore};

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::data::Technique;
use crate::error::{Error, Result};

pub const PROJECTIONS_PER_TRIAL: usize = 8;
pub const HEART_BUDGET: u32 = 15;
pub const MAX_HEARTS_PER_PROJECTION: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub user_id: String,
    pub dataset_id: String,
    /// Embedding ids in display order.
    pub shown: Vec<String>,
    pub hearts: Vec<u32>,
    pub crossed_out: Vec<bool>,
    pub difficulty: Difficulty,
    pub timestamp: DateTime<Utc>,
}

fn invalid(constraint: &'static str, detail: impl Into<String>) -> Error {
    Error::Validation {
        constraint,
        detail: detail.into(),
    }
}

impl TrialRecord {
    pub fn validate(&self) -> Result<()> {
        if self.trial_id.is_empty() {
            return Err(invalid("trial_id", "trial_id must not be empty"));
        }
        for (name, len) in [
            ("shown", self.shown.len()),
            ("hearts", self.hearts.len()),
            ("crossed_out", self.crossed_out.len()),
        ] {
            if len != PROJECTIONS_PER_TRIAL {
                return Err(invalid(
                    "projections_per_trial",
                    format!("{name} has {len} entries, expected {PROJECTIONS_PER_TRIAL}"),
                ));
            }
        }
        let distinct: BTreeSet<&String> = self.shown.iter().collect();
        if distinct.len() != PROJECTIONS_PER_TRIAL {
            return Err(invalid("distinct_projections", "an embedding is shown twice"));
        }
        if let Some(i) = self.hearts.iter().position(|&h| h > MAX_HEARTS_PER_PROJECTION) {
            return Err(invalid(
                "max_hearts_per_projection",
                format!(
                    "projection {} has {} hearts, at most {MAX_HEARTS_PER_PROJECTION} allowed",
                    self.shown[i], self.hearts[i]
                ),
            ));
        }
        let total: u32 = self.hearts.iter().sum();
        if total > HEART_BUDGET {
            return Err(invalid(
                "heart_budget",
                format!("{total} hearts awarded, budget is {HEART_BUDGET}"),
            ));
        }
        if let Some(i) = (0..PROJECTIONS_PER_TRIAL).find(|&i| self.crossed_out[i] && self.hearts[i] > 0) {
            return Err(invalid(
                "crossed_out_has_no_hearts",
                format!("projection {} is crossed out but has {} hearts", self.shown[i], self.hearts[i]),
            ));
        }
        Ok(())
    }

    /// True if item `i` beats item `j` in this trial. Equal hearts on two
    /// uncrossed items is no decision.
    pub fn beats(&self, i: usize, j: usize) -> bool {
        match (self.crossed_out[i], self.crossed_out[j]) {
            (false, true) => true,
            (true, _) => false,
            (false, false) => self.hearts[i] > self.hearts[j],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwisePreference {
    pub dataset_id: String,
    /// Always the lexicographically smaller id of the pair.
    pub emb_a: String,
    pub emb_b: String,
    pub pct_a_over_b: f64,
    pub n_comparisons: u32,
}

impl PairwisePreference {
    pub fn wins_a(&self) -> f64 {
        self.pct_a_over_b * self.n_comparisons as f64
    }
}

/// Counts decided co-occurrences of every embedding pair. Output is sorted by
/// (dataset, emb_a, emb_b) and independent of trial order.
pub fn aggregate_pairwise(trials: &[TrialRecord]) -> Vec<PairwisePreference> {
    let mut counts: BTreeMap<(String, String, String), (u32, u32)> = BTreeMap::new();
    for t in trials {
        for i in 0..t.shown.len() {
            for j in (i + 1)..t.shown.len() {
                let (a, b) = if t.shown[i] < t.shown[j] { (i, j) } else { (j, i) };
                let a_wins = t.beats(a, b);
                if !a_wins && !t.beats(b, a) {
                    continue;
                }
                let e = counts
                    .entry((t.dataset_id.clone(), t.shown[a].clone(), t.shown[b].clone()))
                    .or_default();
                e.0 += a_wins as u32;
                e.1 += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|((dataset_id, emb_a, emb_b), (wins, n))| PairwisePreference {
            dataset_id,
            emb_a,
            emb_b,
            pct_a_over_b: wins as f64 / n as f64,
            n_comparisons: n,
        })
        .collect()
}

/// Comparison-weighted mean of `min(p, 1 - p)`; in `[0, 0.5]`.
pub fn disagreement(prefs: &[PairwisePreference]) -> f64 {
    let total: f64 = prefs.iter().map(|p| p.n_comparisons as f64).sum();
    if total == 0.0 {
        return 0.0;
    }
    prefs
        .iter()
        .map(|p| p.n_comparisons as f64 * p.pct_a_over_b.min(1.0 - p.pct_a_over_b))
        .sum::<f64>()
        / total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueMatrix {
    pub techniques: Vec<Technique>,
    /// `cells[i][j]`: fraction of decided comparisons in which technique i
    /// beat technique j; 0.5 on the diagonal, `None` where never compared.
    pub cells: Vec<Vec<Option<f64>>>,
    pub comparisons: Vec<Vec<u32>>,
}

/// Technique-level win rates. Pairs of embeddings from the same technique,
/// or with an embedding missing from `technique_of`, are ignored.
pub fn technique_matrix(prefs: &[PairwisePreference], technique_of: &BTreeMap<String, Technique>) -> TechniqueMatrix {
    let techniques: Vec<Technique> = technique_of.values().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let idx = |t: Technique| techniques.iter().position(|&x| x == t).expect("technique listed");
    let k = techniques.len();
    let mut wins = vec![vec![0.0f64; k]; k];
    let mut n = vec![vec![0u32; k]; k];
    for p in prefs {
        let (Some(&ta), Some(&tb)) = (technique_of.get(&p.emb_a), technique_of.get(&p.emb_b)) else {
            continue;
        };
        if ta == tb {
            continue;
        }
        let (i, j) = (idx(ta), idx(tb));
        wins[i][j] += p.wins_a();
        wins[j][i] += p.n_comparisons as f64 - p.wins_a();
        n[i][j] += p.n_comparisons;
        n[j][i] += p.n_comparisons;
    }
    let cells = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if i == j {
                        Some(0.5)
                    } else if n[i][j] == 0 {
                        None
                    } else {
                        Some(wins[i][j] / n[i][j] as f64)
                    }
                })
                .collect()
        })
        .collect();
    TechniqueMatrix {
        techniques,
        cells,
        comparisons: n,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryLabel {
    pub embedding_id: String,
    pub dataset_id: String,
    pub user_id: String,
    /// `true` if the embedding got at least one heart, `false` if crossed out.
    pub good: bool,
}

/// Good/bad labels; unrated, uncrossed embeddings are skipped. Conflicting
/// labels from different users stay as separate rows.
pub fn binary_labels(trials: &[TrialRecord]) -> Vec<BinaryLabel> {
    let mut out = Vec::new();
    for t in trials {
        for i in 0..t.shown.len() {
            let good = if t.crossed_out[i] {
                false
            } else if t.hearts[i] >= 1 {
                true
            } else {
                continue;
            };
            out.push(BinaryLabel {
                embedding_id: t.shown[i].clone(),
                dataset_id: t.dataset_id.clone(),
                user_id: t.user_id.clone(),
                good,
            });
        }
    }
    out
}

pub fn write_pairwise_csv<W: Write>(prefs: &[PairwisePreference], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in prefs {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io("<pairwise csv>", e))?;
    Ok(())
}

pub fn read_pairwise_csv<R: Read>(reader: R) -> Result<Vec<PairwisePreference>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in r.deserialize() {
        let p: PairwisePreference = row?;
        if p.n_comparisons == 0 || !(0.0..=1.0).contains(&p.pct_a_over_b) {
            return Err(Error::Data(format!(
                "invalid preference row {} vs {}",
                p.emb_a, p.emb_b
            )));
        }
        out.push(p);
    }
    Ok(out)
}
