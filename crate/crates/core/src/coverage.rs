//! Coverage sets and the destructive/restorative mutation predicates.
//!
//! An execution is summarized as a set of opaque feature identifiers (blocks
//! hit, edges taken — the engine never interprets them and hit counts are
//! discarded). A mutation is *destructive* when it loses at least a
//! `t_loss` fraction of the original input's features; a follow-up mutation
//! is *restorative* when it recovers at least a `t_restore` fraction of what
//! was lost. Threshold comparisons are done by integer cross-multiplication
//! so the inclusive boundaries are exact.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Set of coverage feature identifiers produced by one execution.
///
/// Stored sorted and deduplicated; equality is set equality.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoverageSet {
    feats: Vec<u32>,
}

impl CoverageSet {
    pub fn new() -> Self {
        Self { feats: Vec::new() }
    }

    /// Builds a set from arbitrary feature ids; duplicates collapse.
    pub fn from_features(iter: impl IntoIterator<Item = u32>) -> Self {
        let mut feats: Vec<u32> = iter.into_iter().collect();
        feats.sort_unstable();
        feats.dedup();
        Self { feats }
    }

    pub fn len(&self) -> usize {
        self.feats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feats.is_empty()
    }

    pub fn contains(&self, feature: u32) -> bool {
        self.feats.binary_search(&feature).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.feats.iter().copied()
    }

    /// Features present in `self` and absent in `other`.
    pub fn difference(&self, other: &CoverageSet) -> CoverageSet {
        let mut out = Vec::new();
        let mut i = 0;
        let mut j = 0;
        while i < self.feats.len() {
            if j >= other.feats.len() || self.feats[i] < other.feats[j] {
                out.push(self.feats[i]);
                i += 1;
            } else if self.feats[i] == other.feats[j] {
                i += 1;
                j += 1;
            } else {
                j += 1;
            }
        }
        CoverageSet { feats: out }
    }

    /// |self ∩ other| without allocating.
    pub fn intersection_len(&self, other: &CoverageSet) -> usize {
        let mut count = 0;
        let mut i = 0;
        let mut j = 0;
        while i < self.feats.len() && j < other.feats.len() {
            match self.feats[i].cmp(&other.feats[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }
}

impl FromIterator<u32> for CoverageSet {
    fn from_iter<T: IntoIterator<Item = u32>>(iter: T) -> Self {
        Self::from_features(iter)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeedbackError {
    /// The original input produced no coverage; nothing can be destructed.
    #[error("no-baseline-coverage")]
    NoBaselineCoverage,
    /// The destructive mutation lost nothing; nothing can be restored.
    #[error("nothing-to-restore")]
    NothingToRestore,
    #[error("invalid threshold {0}/{1}: must satisfy 0 < num <= den")]
    InvalidThreshold(u32, u32),
}

/// Exact rational threshold in (0, 1].
///
/// `part/whole >= num/den` is evaluated as `part*den >= num*whole` on
/// integers, so boundary cases are deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threshold {
    num: u32,
    den: u32,
}

impl Threshold {
    pub fn new(num: u32, den: u32) -> Result<Self, FeedbackError> {
        if den == 0 || num == 0 || num > den {
            return Err(FeedbackError::InvalidThreshold(num, den));
        }
        Ok(Self { num, den })
    }

    /// True iff `part >= self * whole`, inclusive.
    pub fn reached(&self, part: usize, whole: usize) -> bool {
        (part as u64) * (self.den as u64) >= (self.num as u64) * (whole as u64)
    }

    pub fn numerator(&self) -> u32 {
        self.num
    }

    pub fn denominator(&self) -> u32 {
        self.den
    }

    /// Parses "num/den" or a plain decimal like "0.05".
    pub fn parse(s: &str) -> Result<Self, FeedbackError> {
        let bad = || FeedbackError::InvalidThreshold(0, 0);
        if let Some((n, d)) = s.split_once('/') {
            let num: u32 = n.trim().parse().map_err(|_| bad())?;
            let den: u32 = d.trim().parse().map_err(|_| bad())?;
            return Self::new(num, den);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.len() > 6 || frac.is_empty() {
                return Err(bad());
            }
            let int: u32 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let fnum: u32 = frac.parse().map_err(|_| bad())?;
            let den = 10u32.pow(frac.len() as u32);
            return Self::new(int * den + fnum, den);
        }
        let num: u32 = s.trim().parse().map_err(|_| bad())?;
        Self::new(num, 1)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for Threshold {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Threshold::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// The two analysis thresholds. Defaults: t_loss = 1/20, t_restore = 1/5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisThresholds {
    pub t_loss: Threshold,
    pub t_restore: Threshold,
}

impl Default for AnalysisThresholds {
    fn default() -> Self {
        Self {
            t_loss: Threshold::new(1, 20).unwrap(),
            t_restore: Threshold::new(1, 5).unwrap(),
        }
    }
}

/// Features covered by `orig` but lost in `mutated`.
pub fn lost_features(orig: &CoverageSet, mutated: &CoverageSet) -> CoverageSet {
    orig.difference(mutated)
}

/// True iff the mutation lost at least `t_loss` of the original coverage
/// (inclusive boundary). Errors when the original coverage is empty.
pub fn is_destructive(
    orig: &CoverageSet,
    mutated: &CoverageSet,
    th: &AnalysisThresholds,
) -> Result<bool, FeedbackError> {
    if orig.is_empty() {
        return Err(FeedbackError::NoBaselineCoverage);
    }
    let lost = orig.difference(mutated).len();
    Ok(th.t_loss.reached(lost, orig.len()))
}

/// True iff `restored` recovers at least `t_restore` of the features that
/// `mutated` lost relative to `orig` (inclusive boundary). Errors when
/// nothing was lost.
pub fn is_restorative(
    orig: &CoverageSet,
    mutated: &CoverageSet,
    restored: &CoverageSet,
    th: &AnalysisThresholds,
) -> Result<bool, FeedbackError> {
    let lost = lost_features(orig, mutated);
    if lost.is_empty() {
        return Err(FeedbackError::NothingToRestore);
    }
    let recovered = restored.intersection_len(&lost);
    Ok(th.t_restore.reached(recovered, lost.len()))
}

/// |restored ∩ (orig − mutated)|: how much of the lost coverage came back.
pub fn restored_amount(orig: &CoverageSet, mutated: &CoverageSet, restored: &CoverageSet) -> usize {
    restored.intersection_len(&lost_features(orig, mutated))
}
