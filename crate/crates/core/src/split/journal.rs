//! Append-only record of splits and tree resets, one JSON object per line.

use super::CriterionKind;
use crate::model::ModelError;
use crate::stats::TwoSampleTest;
use crate::tree::{DecisionTree, StateId, TreeError};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JournalEntry {
    Split {
        step: usize,
        state: StateId,
        param: String,
        point: f64,
        error_prob: f64,
        criterion: CriterionKind,
        test: TwoSampleTest,
    },
    Reset {
        step: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitJournal {
    entries: Vec<JournalEntry>,
}

impl SplitJournal {
    pub fn push(&mut self, e: JournalEntry) {
        self.entries.push(e);
    }

    pub fn entries(&self) -> &[JournalEntry] {
        &self.entries
    }

    /// Splits still present in the current tree, i.e. those after the last reset.
    pub fn live_splits(&self) -> impl Iterator<Item = &JournalEntry> {
        let start = self
            .entries
            .iter()
            .rposition(|e| matches!(e, JournalEntry::Reset { .. }))
            .map_or(0, |i| i + 1);
        self.entries[start..].iter()
    }

    /// All splits ever performed, including those later discarded by a reset.
    pub fn total_splits(&self) -> usize {
        self.entries.iter().filter(|e| matches!(e, JournalEntry::Split { .. })).count()
    }

    /// Fraction of splits on one of `relevant`; `None` without splits.
    pub fn accuracy(&self, relevant: &[&str]) -> Option<f64> {
        let mut total = 0usize;
        let mut good = 0usize;
        for e in &self.entries {
            if let JournalEntry::Split { param, .. } = e {
                total += 1;
                if relevant.contains(&param.as_str()) {
                    good += 1;
                }
            }
        }
        (total > 0).then(|| good as f64 / total as f64)
    }

    /// Replays the journal on a copy of `initial`.
    pub fn replay(&self, initial: &DecisionTree) -> Result<DecisionTree, TreeError> {
        let mut tree = initial.clone();
        for e in &self.entries {
            match e {
                JournalEntry::Reset { .. } => tree = initial.clone(),
                JournalEntry::Split { state, param, point, .. } => {
                    let p = tree.space().index_of(param)?;
                    tree.split_leaf(*state, p, *point)?;
                }
            }
        }
        Ok(tree)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), ModelError> {
        for e in &self.entries {
            let line = serde_json::to_string(e).expect("journal entries always serialize");
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, ModelError> {
        let mut entries = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(|e| ModelError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        Ok(SplitJournal { entries })
    }
}
