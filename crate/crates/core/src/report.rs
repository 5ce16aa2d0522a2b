//! Corpus summaries: per validation check, how many entries cover it and
//! how many of those are "newly sized" — their governing size/offset field
//! values differ from every seed's at the same structural positions.

use crate::campaign::{load_corpus, load_stats};
use crate::targets::Target;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io-error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed corpus: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    /// Corpus entries covering the check's pass feature.
    pub covered: u64,
    /// Of those, entries whose governing sizes differ from the seed's.
    pub newly_sized: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub target: String,
    pub entries: usize,
    pub checks: Vec<CheckRow>,
}

impl CorpusReport {
    pub fn row(&self, check: &str) -> Option<&CheckRow> {
        self.checks.iter().find(|r| r.check == check)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("target: {}  entries: {}\n", self.target, self.entries);
        out.push_str(&format!("{:<10} {:>8} {:>12}\n", "check", "covered", "newly-sized"));
        for row in &self.checks {
            out.push_str(&format!(
                "{:<10} {:>8} {:>12}\n",
                row.check, row.covered, row.newly_sized
            ));
        }
        out
    }
}

/// Builds the per-check table from a persisted corpus directory. Entries
/// are re-executed (targets are deterministic). An empty directory yields
/// all-zero counts.
pub fn build_report(target: &dyn Target, corpus_dir: &Path) -> Result<CorpusReport, ReportError> {
    let entries = match load_corpus(corpus_dir) {
        Ok(entries) => entries,
        Err(crate::campaign::CampaignError::Io(e)) => return Err(ReportError::Io(e)),
        Err(e) => return Err(ReportError::Malformed(e.to_string())),
    };
    let seed_count = match load_stats(corpus_dir) {
        Ok((_, stats)) => stats.seed_count.max(1),
        // No stats file: treat the first entry as the seed.
        Err(_) => 1,
    };

    let seed_values: Vec<Option<Vec<u64>>> = entries
        .iter()
        .take(seed_count)
        .map(|(_, bytes, _)| target.governing_values(bytes))
        .collect();

    let mut checks: Vec<CheckRow> = target
        .check_features()
        .into_iter()
        .map(|(name, _)| CheckRow { check: name.to_string(), covered: 0, newly_sized: 0 })
        .collect();

    for (_, bytes, _) in &entries {
        let cov = target.execute(bytes);
        let governing = target.governing_values(bytes);
        let newly = match &governing {
            Some(values) => !seed_values
                .iter()
                .any(|sv| sv.as_ref() == Some(values)),
            None => false,
        };
        for ((_, feature), row) in target.check_features().iter().zip(checks.iter_mut()) {
            if cov.contains(*feature) {
                row.covered += 1;
                if newly {
                    row.newly_sized += 1;
                }
            }
        }
    }

    Ok(CorpusReport { target: target.name().to_string(), entries: entries.len(), checks })
}
