use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::TrialRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordOutcome {
    Inserted,
    /// An identical record with this id was already stored.
    AlreadyPresent,
}

/// Append-only JSON-lines trial log with an in-memory index.
#[derive(Debug)]
pub struct TrialStore {
    path: PathBuf,
    by_id: BTreeMap<String, usize>,
    trials: Vec<TrialRecord>,
}

impl TrialStore {
    /// Opens (or lazily creates) the log at `path` and loads existing records.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut store = Self {
            path,
            by_id: BTreeMap::new(),
            trials: Vec::new(),
        };
        if store.path.exists() {
            let file = File::open(&store.path).map_err(|e| Error::io(&store.path, e))?;
            for (lineno, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(&store.path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let t: TrialRecord = serde_json::from_str(&line).map_err(|e| {
                    Error::Data(format!("{}:{}: {e}", store.path.display(), lineno + 1))
                })?;
                store.by_id.insert(t.trial_id.clone(), store.trials.len());
                store.trials.push(t);
            }
        }
        Ok(store)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Validates and appends `t`, syncing the file before returning.
    /// Re-recording an identical trial is a no-op; a different record under
    /// an existing id is a conflict.
    pub fn record(&mut self, t: TrialRecord) -> Result<RecordOutcome> {
        t.validate()?;
        if let Some(&i) = self.by_id.get(&t.trial_id) {
            return if self.trials[i] == t {
                Ok(RecordOutcome::AlreadyPresent)
            } else {
                Err(Error::Conflict(format!("trial {} already recorded with different content", t.trial_id)))
            };
        }
        let mut line = serde_json::to_string(&t)?;
        line.push('\n');
        if let Some(dir) = self.path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        file.write_all(line.as_bytes()).map_err(|e| Error::io(&self.path, e))?;
        file.sync_data().map_err(|e| Error::io(&self.path, e))?;
        self.by_id.insert(t.trial_id.clone(), self.trials.len());
        self.trials.push(t);
        Ok(RecordOutcome::Inserted)
    }

    pub fn contains(&self, trial_id: &str) -> bool {
        self.by_id.contains_key(trial_id)
    }

    /// Trials in insertion order.
    pub fn trials(&self) -> &[TrialRecord] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preferences::tests::trial;

    #[test]
    fn record_reopen_and_idempotence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trials.jsonl");
        let mut store = TrialStore::open(&path).unwrap();
        let t = trial("t1", [4, 4, 4, 3, 0, 0, 0, 0], [false; 8]);
        assert_eq!(store.record(t.clone()).unwrap(), RecordOutcome::Inserted);
        assert_eq!(store.record(t.clone()).unwrap(), RecordOutcome::AlreadyPresent);
        let mut other = t.clone();
        other.hearts[0] = 0;
        assert!(matches!(store.record(other), Err(Error::Conflict(_))));
        assert!(store.record(trial("bad", [5, 0, 0, 0, 0, 0, 0, 0], [false; 8])).is_err());

        let reopened = TrialStore::open(&path).unwrap();
        assert_eq!(reopened.trials(), &[t]);
        let lines = std::fs::read_to_string(&path).unwrap().lines().count();
        assert_eq!(lines, 1);
    }
}
