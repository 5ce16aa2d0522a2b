//! Automatic relation discovery via double-mutant coverage experiments.
//!
//! For every plausible field position the analysis builds a destructive
//! mutant by bumping the field value, and checks how much coverage the
//! target loses. Candidates that destroy coverage are then tested for
//! restorability: filler bytes are inserted at a small set of hypothesized
//! span ends (anchor points), and the candidate is confirmed as a relation
//! when one insertion recovers enough of the lost coverage. Rounds repeat
//! until a fixpoint so that relations only reachable through earlier
//! discoveries (indirect forms) are found too.

use crate::coverage::{CoverageSet, AnalysisThresholds};
use crate::mutation::{MutationOp, StructuredInput};
use crate::relation::{read_field, write_field, Endianness, RelationField, FIELD_WIDTHS};
use crate::targets::Executor;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

/// A field position that survived value pruning and awaits the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateField {
    pub p: usize,
    pub s: u8,
    pub e: Endianness,
    /// Deserialized value at discovery time.
    pub v: u64,
    /// Increment applied by the destructive probe.
    pub delta: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub thresholds: AnalysisThresholds,
    /// Hard cap on executor invocations per analysis.
    pub max_invocations: u64,
    /// Inputs longer than this are not analyzed at all.
    pub max_input_len: usize,
    /// Fixpoint iteration cap.
    pub max_rounds: u32,
    /// Byte inserted by restorative mutations.
    pub filler: u8,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            thresholds: AnalysisThresholds::default(),
            max_invocations: 20_000,
            max_input_len: 4096,
            max_rounds: 4,
            filler: 0x00,
        }
    }
}

/// A confirmed relation plus analysis metadata (not serialized).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discovery {
    #[serde(flatten)]
    pub field: RelationField,
    /// Fixpoint round (1-based) in which the relation was accepted.
    #[serde(skip)]
    pub round: u32,
    /// Lost features recovered by the winning insertion.
    #[serde(skip)]
    pub restored: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub relations: Vec<Discovery>,
    /// Exact number of executor calls used.
    pub invocations: u64,
    pub elapsed_ms: u64,
    /// Candidates that did not become relations.
    pub rejected: u64,
    #[serde(skip)]
    pub budget_exhausted: bool,
}

impl AnalysisReport {
    pub fn fields(&self) -> Vec<RelationField> {
        self.relations.iter().map(|d| d.field).collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalyzeError {
    #[error("no-baseline-coverage")]
    NoBaselineCoverage,
    #[error("input of {len} bytes exceeds analysis cap of {max}")]
    InputTooLong { len: usize, max: usize },
}

/// Invocation budget with exact accounting.
#[derive(Debug, Clone)]
pub struct Budget {
    used: u64,
    max: u64,
}

impl Budget {
    pub fn new(max: u64) -> Self {
        Self { used: 0, max }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    fn try_take(&mut self) -> bool {
        if self.used >= self.max {
            return false;
        }
        self.used += 1;
        true
    }
}

/// Enumerates candidate fields: every width in {8,4,2,1}, both endiannesses
/// (one for single bytes, where they coincide), every in-bounds position,
/// pruned to values in `1..=len` since sizes and offsets cannot exceed the
/// input length. Single-byte 0xff values are excluded because their probe
/// increment would be zero.
///
/// Order: descending width, then ascending position, big-endian first.
pub fn scan_candidates(input: &[u8], _cfg: &AnalysisConfig) -> Vec<CandidateField> {
    let len = input.len();
    let mut out = Vec::new();
    for &s in &FIELD_WIDTHS {
        let width = s as usize;
        if width > len {
            continue;
        }
        for p in 0..=len - width {
            let endiannesses: &[Endianness] = if s == 1 {
                &[Endianness::Big]
            } else {
                &[Endianness::Big, Endianness::Little]
            };
            for &e in endiannesses {
                let v = read_field(input, p, s, e).unwrap();
                if v == 0 || v > len as u64 {
                    continue;
                }
                if s == 1 && v == 0xff {
                    continue;
                }
                let delta = if s > 1 { 0xff } else { 0x20u64.min(0xff - v) };
                // The probe must be serializable into the field width.
                if s < 8 && v + delta >= 1u64 << (8 * s as u32) {
                    continue;
                }
                out.push(CandidateField { p, s, e, v, delta });
            }
        }
    }
    out
}

/// Outcome of the first half of the double-mutant experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeOutcome {
    NotDestructive,
    /// The features the probe lost relative to the baseline.
    Destructive(CoverageSet),
}

struct Exhausted;

/// Writes `v + delta` into the candidate field and executes. Destructive
/// when the coverage loss reaches `t_loss`. The write is raw: already-known
/// relations are deliberately not fixed up, so exactly one field breaks.
pub fn destructive_probe(
    input: &[u8],
    baseline: &CoverageSet,
    c: &CandidateField,
    exec: &dyn Executor,
    th: &AnalysisThresholds,
    budget: &mut Budget,
) -> Option<ProbeOutcome> {
    probe(input, baseline, c, exec, th, budget).ok()
}

fn probe(
    input: &[u8],
    baseline: &CoverageSet,
    c: &CandidateField,
    exec: &dyn Executor,
    th: &AnalysisThresholds,
    budget: &mut Budget,
) -> Result<ProbeOutcome, Exhausted> {
    if !budget.try_take() {
        return Err(Exhausted);
    }
    let mutant = write_field(input, c.p, c.s, c.e, c.v + c.delta)
        .expect("candidate in range and v + delta fits the width");
    let cov = exec.execute(&mutant);
    let lost = baseline.difference(&cov);
    if th.t_loss.reached(lost.len(), baseline.len()) {
        Ok(ProbeOutcome::Destructive(lost))
    } else {
        Ok(ProbeOutcome::NotDestructive)
    }
}

/// Known relations usable while experimenting on `c`: a relation whose
/// field bytes overlap the candidate's would be re-serialized at commit
/// time, silently repairing the probe corruption, so it is left out.
fn known_disjoint_from(c: &CandidateField, known: &[RelationField]) -> Vec<RelationField> {
    known
        .iter()
        .filter(|r| {
            let rf = r.field_range();
            let cf = c.p..c.p + c.s as usize;
            rf.end <= cf.start || cf.end <= rf.start
        })
        .copied()
        .collect()
}

/// Candidate span starts in priority order: `p+s`, `p`, `0`, then the
/// `p`/`a`/`b` of every known relation in discovery order, deduplicated.
fn candidate_starts(c: &CandidateField, known: &[RelationField]) -> Vec<usize> {
    let mut starts = vec![c.p + c.s as usize, c.p, 0];
    for r in known {
        starts.extend_from_slice(&[r.p, r.a, r.b]);
    }
    let mut seen = Vec::new();
    starts.retain(|s| {
        if seen.contains(s) {
            false
        } else {
            seen.push(*s);
            true
        }
    });
    starts
}

/// Searches the anchor points for a restoring insertion.
///
/// For each start, `delta` filler bytes are inserted at `start + v` into
/// the destructive mutant through a structured insert carrying the known
/// relations, so previously discovered outer fields are fixed up before
/// execution. Among the starts whose recovery passes `t_restore`, the one
/// restoring the most coverage wins; ties keep the earlier (higher
/// priority) start.
#[allow(clippy::too_many_arguments)]
pub fn find_insertion_point(
    input_minus: &[u8],
    c: &CandidateField,
    lost: &CoverageSet,
    known: &[RelationField],
    exec: &dyn Executor,
    cfg: &AnalysisConfig,
    budget: &mut Budget,
) -> Option<RelationField> {
    match insertion_search(input_minus, c, lost, known, exec, cfg, budget) {
        Ok(Some((start, _))) => {
            Some(RelationField::new(start, start + c.v as usize, c.p, c.s, c.e).unwrap())
        }
        _ => None,
    }
}

#[allow(clippy::too_many_arguments)]
fn insertion_search(
    input_minus: &[u8],
    c: &CandidateField,
    lost: &CoverageSet,
    known: &[RelationField],
    exec: &dyn Executor,
    cfg: &AnalysisConfig,
    budget: &mut Budget,
) -> Result<Option<(usize, usize)>, Exhausted> {
    let v = c.v as usize;
    let known = known_disjoint_from(c, known);
    let mut best: Option<(usize, usize)> = None;
    for start in candidate_starts(c, &known) {
        let point = match start.checked_add(v) {
            Some(point) if point <= input_minus.len() => point,
            _ => continue,
        };
        if !budget.try_take() {
            return Err(Exhausted);
        }
        let mut structured = StructuredInput::new(input_minus.to_vec(), known.clone());
        structured
            .apply(MutationOp::Insert { at: point, data: vec![cfg.filler; c.delta as usize] })
            .expect("insertion point within bounds");
        let plus = structured.commit().bytes;
        let cov = exec.execute(&plus);
        let restored = cov.intersection_len(lost);
        if cfg.thresholds.t_restore.reached(restored, lost.len())
            && best.is_none_or(|(_, r)| restored > r)
        {
            best = Some((start, restored));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
enum CandidateState {
    Fresh,
    /// Probed destructive; insertion search last ran with this many known
    /// relations (`usize::MAX` when it never ran).
    Probed { lost: CoverageSet, tried_with: usize },
    Rejected,
    Accepted,
}

/// Runs the full fixpoint analysis on one input.
///
/// Each round walks the undecided candidates in scan order with the known
/// relation set frozen at the round start; candidates whose insertion
/// search failed are retried in later rounds only when the known set grew.
/// Candidates whose field bytes lie fully inside an already accepted wider
/// field are skipped. The analysis stops when a round finds nothing new,
/// the round cap is hit, or the invocation budget runs out (partial results
/// are still returned).
pub fn analyze(
    input: &[u8],
    exec: &dyn Executor,
    cfg: &AnalysisConfig,
) -> Result<AnalysisReport, AnalyzeError> {
    let t0 = Instant::now();
    if input.len() > cfg.max_input_len {
        return Err(AnalyzeError::InputTooLong { len: input.len(), max: cfg.max_input_len });
    }
    let mut budget = Budget::new(cfg.max_invocations.max(1));
    budget.try_take();
    let baseline = exec.execute(input);
    if baseline.is_empty() {
        return Err(AnalyzeError::NoBaselineCoverage);
    }

    let candidates = scan_candidates(input, cfg);
    let mut states = vec![CandidateState::Fresh; candidates.len()];
    let mut accepted: Vec<Discovery> = Vec::new();
    let mut exhausted = false;

    'rounds: for round in 1..=cfg.max_rounds.max(1) {
        let known_at_start: Vec<RelationField> =
            accepted.iter().map(|d| d.field).collect();
        let mut grew = false;

        for (idx, c) in candidates.iter().enumerate() {
            match states[idx] {
                CandidateState::Rejected | CandidateState::Accepted => continue,
                _ => {}
            }
            // Skip narrower reinterpretations of already accepted fields.
            let nested = accepted.iter().any(|d| {
                d.field.s > c.s
                    && d.field.p <= c.p
                    && c.p + c.s as usize <= d.field.p + d.field.s as usize
            });
            if nested {
                states[idx] = CandidateState::Rejected;
                continue;
            }

            if matches!(states[idx], CandidateState::Fresh) {
                match probe(input, &baseline, c, exec, &cfg.thresholds, &mut budget) {
                    Err(Exhausted) => {
                        exhausted = true;
                        break 'rounds;
                    }
                    Ok(ProbeOutcome::NotDestructive) => {
                        states[idx] = CandidateState::Rejected;
                        continue;
                    }
                    Ok(ProbeOutcome::Destructive(lost)) => {
                        states[idx] =
                            CandidateState::Probed { lost, tried_with: usize::MAX };
                    }
                }
            }

            let (lost, tried_with) = match &states[idx] {
                CandidateState::Probed { lost, tried_with } => (lost.clone(), *tried_with),
                _ => unreachable!(),
            };
            if tried_with != usize::MAX && known_at_start.len() <= tried_with {
                continue;
            }

            let minus = write_field(input, c.p, c.s, c.e, c.v + c.delta).unwrap();
            match insertion_search(&minus, c, &lost, &known_at_start, exec, cfg, &mut budget)
            {
                Err(Exhausted) => {
                    exhausted = true;
                    break 'rounds;
                }
                Ok(None) => {
                    states[idx] = CandidateState::Probed {
                        lost,
                        tried_with: known_at_start.len(),
                    };
                }
                Ok(Some((start, restored))) => {
                    let field =
                        RelationField::new(start, start + c.v as usize, c.p, c.s, c.e)
                            .expect("span start < end since v >= 1");
                    states[idx] = CandidateState::Accepted;
                    // Endianness tie: identical (p, s, a, b) under the other
                    // byte order keeps whichever restored more; exact ties
                    // keep the earlier find (big-endian scans first).
                    if let Some(prev) = accepted.iter_mut().find(|d| {
                        d.field.p == field.p
                            && d.field.s == field.s
                            && d.field.a == field.a
                            && d.field.b == field.b
                            && d.field.e != field.e
                    }) {
                        if restored > prev.restored {
                            prev.field = field;
                            prev.restored = restored;
                        }
                    } else {
                        accepted.push(Discovery { field, round, restored });
                        grew = true;
                    }
                }
            }
        }

        if !grew {
            break;
        }
    }

    let rejected = candidates.len() as u64 - accepted.len() as u64;
    Ok(AnalysisReport {
        relations: accepted,
        invocations: budget.used(),
        elapsed_ms: t0.elapsed().as_millis() as u64,
        rejected,
        budget_exhausted: exhausted,
    })
}

/// Analyzes a batch of inputs (data-parallel when the `parallel` feature is
/// enabled; distinct inputs are independent by the executor contract).
#[cfg(feature = "parallel")]
pub fn analyze_batch(
    inputs: &[Vec<u8>],
    exec: &dyn Executor,
    cfg: &AnalysisConfig,
) -> Vec<Result<AnalysisReport, AnalyzeError>> {
    use rayon::prelude::*;
    inputs.par_iter().map(|input| analyze(input, exec, cfg)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn analyze_batch(
    inputs: &[Vec<u8>],
    exec: &dyn Executor,
    cfg: &AnalysisConfig,
) -> Vec<Result<AnalysisReport, AnalyzeError>> {
    analyze_batch_seq(inputs, exec, cfg)
}

/// Sequential batch analysis, kept available for comparison benchmarks.
pub fn analyze_batch_seq(
    inputs: &[Vec<u8>],
    exec: &dyn Executor,
    cfg: &AnalysisConfig,
) -> Vec<Result<AnalysisReport, AnalyzeError>> {
    inputs.iter().map(|input| analyze(input, exec, cfg)).collect()
}
