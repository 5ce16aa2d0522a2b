//! A minimal deterministic coverage-guided fuzzing loop.
//!
//! The scheduler cycles FIFO over the corpus; each cycle runs a fixed
//! number of havoc trials on the current entry. New corpus entries are
//! admitted on set-coverage novelty only. With the analysis stage enabled,
//! every corpus entry is analyzed once (budget-capped) when first
//! scheduled, and its relations are fixed up on every mutant before
//! execution; with it disabled the engine never analyzes and mutants run
//! with their raw byte edits, which is the baseline arm for A/B runs.

use crate::coverage::CoverageSet;
use crate::inference::{analyze, AnalysisConfig, AnalyzeError};
use crate::mutation::{MutationOp, StructuredInput};
use crate::relation::RelationField;
use crate::targets::Target;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub rng_seed: u64,
    /// Execution budget; analysis invocations count against it.
    pub max_execs: Option<u64>,
    pub max_seconds: Option<u64>,
    pub frameshift_enabled: bool,
    pub havoc_min: u32,
    pub havoc_max: u32,
    pub trials_per_cycle: u32,
    pub analysis: AnalysisConfig,
    pub seeds_dir: Option<PathBuf>,
    pub corpus_dir: Option<PathBuf>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            rng_seed: 0,
            max_execs: None,
            max_seconds: None,
            frameshift_enabled: true,
            havoc_min: 1,
            havoc_max: 8,
            trials_per_cycle: 512,
            analysis: AnalysisConfig::default(),
            seeds_dir: None,
            corpus_dir: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io-error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: u32,
    pub bytes: Vec<u8>,
    pub coverage: CoverageSet,
    pub relations: Vec<RelationField>,
    pub analyzed: bool,
    /// Execution index at admission time.
    pub discovery_time: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisCost {
    pub entry: u32,
    pub invocations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct CampaignStats {
    pub executions: u64,
    pub corpus_size: usize,
    /// Distinct features covered across the whole campaign.
    pub feature_count: usize,
    pub seed_count: usize,
    pub frameshift_enabled: bool,
    /// Mutants whose relation fix-ups rewrote at least one field.
    pub fixups_fired: u64,
    pub analysis_costs: Vec<AnalysisCost>,
}

/// Sidecar file format stored next to each corpus entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationSidecar {
    pub analyzed: bool,
    pub relations: Vec<RelationField>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StatsFile {
    target: String,
    config: CampaignConfig,
    #[serde(flatten)]
    stats: CampaignStats,
}

/// Grow-on-demand feature bitmap for novelty detection.
#[derive(Default)]
struct FeatureMap {
    bits: Vec<u64>,
    count: usize,
}

impl FeatureMap {
    /// Merges and reports whether anything was new.
    fn merge(&mut self, cov: &CoverageSet) -> bool {
        let mut new = false;
        for f in cov.iter() {
            let (word, bit) = (f as usize / 64, f as usize % 64);
            if word >= self.bits.len() {
                self.bits.resize(word + 1, 0);
            }
            if self.bits[word] & (1 << bit) == 0 {
                self.bits[word] |= 1 << bit;
                self.count += 1;
                new = true;
            }
        }
        new
    }
}

pub const INTERESTING_8: [u8; 9] = [0x00, 0x01, 0x10, 0x20, 0x40, 0x64, 0x7f, 0x80, 0xff];
pub const INTERESTING_16: [u16; 10] =
    [0x0080, 0x00ff, 0x0100, 0x0200, 0x03e8, 0x0400, 0x1000, 0x7fff, 0x8000, 0xff7f];
pub const INTERESTING_32: [u32; 6] =
    [0x7fff_ffff, 0x8000_8000, 0xffff_ffff, 0xffff_7fff, 0x5555_5555, 0xaaaa_aaaa];
const BLOCK_LENS: [usize; 5] = [4, 8, 16, 32, 64];
const ARITH_MAX: u8 = 35;

/// Applies a stack of random byte-level operations through the structured
/// interface. Relation bookkeeping rides along; the caller decides whether
/// to commit (fix up fields) or take the raw bytes.
pub fn havoc(
    base: &StructuredInput,
    rng: &mut ChaCha8Rng,
    cfg: &CampaignConfig,
    donor: Option<&[u8]>,
) -> StructuredInput {
    let mut s = base.clone();
    let depth = rng.gen_range(cfg.havoc_min..=cfg.havoc_max.max(cfg.havoc_min));
    for _ in 0..depth {
        let len = s.len();
        let op = match rng.gen_range(0..7u32) {
            0 if len > 0 => {
                // bit flip
                let at = rng.gen_range(0..len);
                let byte = s.bytes()[at] ^ (1 << rng.gen_range(0..8));
                MutationOp::Replace { at, data: vec![byte] }
            }
            1 if len > 0 => {
                // byte set
                MutationOp::Replace { at: rng.gen_range(0..len), data: vec![rng.gen()] }
            }
            2 if len > 0 => {
                // 8-bit arithmetic
                let at = rng.gen_range(0..len);
                let amount = rng.gen_range(1..=ARITH_MAX);
                let byte = if rng.gen() {
                    s.bytes()[at].wrapping_add(amount)
                } else {
                    s.bytes()[at].wrapping_sub(amount)
                };
                MutationOp::Replace { at, data: vec![byte] }
            }
            3 if len > 0 => {
                // interesting-value write
                let width = [1usize, 2, 4][rng.gen_range(0..3)].min(len);
                let at = rng.gen_range(0..=len - width);
                let mut data = match width {
                    2 => INTERESTING_16[rng.gen_range(0..INTERESTING_16.len())]
                        .to_be_bytes()
                        .to_vec(),
                    4 => INTERESTING_32[rng.gen_range(0..INTERESTING_32.len())]
                        .to_be_bytes()
                        .to_vec(),
                    _ => vec![INTERESTING_8[rng.gen_range(0..INTERESTING_8.len())]],
                };
                if rng.gen() {
                    data.reverse();
                }
                MutationOp::Replace { at, data }
            }
            4 => {
                // block insert: random bytes, or copied from self or donor
                let n = BLOCK_LENS[rng.gen_range(0..BLOCK_LENS.len())];
                let at = rng.gen_range(0..=len);
                let data = block_payload(s.bytes(), donor, n, rng);
                MutationOp::Insert { at, data }
            }
            5 if len > 1 => {
                // block remove, never emptying the input
                let at = rng.gen_range(0..len);
                let n = BLOCK_LENS[rng.gen_range(0..BLOCK_LENS.len())]
                    .min(len - at)
                    .min(len - 1);
                if n == 0 {
                    continue;
                }
                MutationOp::Remove { at, n }
            }
            6 if len > 0 => {
                // block replace (length-preserving overwrite)
                let at = rng.gen_range(0..len);
                let n = BLOCK_LENS[rng.gen_range(0..BLOCK_LENS.len())].min(len - at);
                let data = block_payload(s.bytes(), donor, n, rng);
                MutationOp::Replace { at, data }
            }
            _ => continue,
        };
        s.apply(op).expect("havoc ops are pre-clamped");
    }
    s
}

fn block_payload(
    this: &[u8],
    donor: Option<&[u8]>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<u8> {
    let copy_window = |src: &[u8], rng: &mut ChaCha8Rng| -> Option<Vec<u8>> {
        if src.is_empty() {
            return None;
        }
        let at = rng.gen_range(0..src.len());
        let take = n.min(src.len() - at);
        let mut out = src[at..at + take].to_vec();
        while out.len() < n {
            out.push(out[out.len() % take]);
        }
        Some(out)
    };
    match rng.gen_range(0..3u32) {
        0 => (0..n).map(|_| rng.gen()).collect(),
        1 => copy_window(this, rng).unwrap_or_else(|| (0..n).map(|_| rng.gen()).collect()),
        _ => match donor {
            Some(d) => copy_window(d, rng).unwrap_or_else(|| (0..n).map(|_| rng.gen()).collect()),
            None => (0..n).map(|_| rng.gen()).collect(),
        },
    }
}

/// Runs one campaign to its budget and returns the final stats. With a
/// corpus directory set, entries, sidecars and `stats.json` are persisted
/// (stats are rewritten every few seconds and at exit).
pub fn run_campaign(target: &dyn Target, cfg: &CampaignConfig) -> Result<CampaignStats, CampaignError> {
    if cfg.max_execs.is_none() && cfg.max_seconds.is_none() {
        return Err(CampaignError::Config("at least one budget must be set".into()));
    }
    if cfg.havoc_min == 0 || cfg.havoc_min > cfg.havoc_max {
        return Err(CampaignError::Config("havoc depth range must satisfy 1 <= min <= max".into()));
    }
    if let Some(dir) = &cfg.corpus_dir {
        fs::create_dir_all(dir)?;
    }

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut stats = CampaignStats {
        frameshift_enabled: cfg.frameshift_enabled,
        ..Default::default()
    };
    let mut seen = FeatureMap::default();
    let mut corpus: Vec<CorpusEntry> = Vec::new();
    let max_execs = cfg.max_execs.unwrap_or(u64::MAX);

    let seeds = load_seeds(cfg)?;
    stats.seed_count = seeds.len();
    for bytes in seeds {
        if stats.executions >= max_execs {
            break;
        }
        stats.executions += 1;
        let coverage = target.execute(&bytes);
        seen.merge(&coverage);
        let entry = CorpusEntry {
            id: corpus.len() as u32,
            bytes,
            coverage,
            relations: Vec::new(),
            analyzed: false,
            discovery_time: stats.executions,
        };
        persist_entry(cfg, &entry)?;
        corpus.push(entry);
    }

    let mut cursor = 0usize;
    let mut last_stats_write = Instant::now();
    let over_time =
        |start: &Instant| cfg.max_seconds.is_some_and(|s| start.elapsed().as_secs() >= s);

    while stats.executions < max_execs && !over_time(&start) && !corpus.is_empty() {
        let entry_idx = cursor % corpus.len();
        cursor += 1;

        // Analysis stage: once per entry, on first scheduling.
        if cfg.frameshift_enabled
            && !corpus[entry_idx].analyzed
            && stats.executions < max_execs
        {
            let room = max_execs - stats.executions;
            let acfg = AnalysisConfig {
                max_invocations: cfg.analysis.max_invocations.min(room),
                ..cfg.analysis.clone()
            };
            if corpus[entry_idx].bytes.len() <= acfg.max_input_len && acfg.max_invocations > 0 {
                match analyze(&corpus[entry_idx].bytes, target, &acfg) {
                    Ok(report) => {
                        stats.executions += report.invocations;
                        stats
                            .analysis_costs
                            .push(AnalysisCost { entry: corpus[entry_idx].id, invocations: report.invocations });
                        corpus[entry_idx].relations = report.fields();
                    }
                    Err(AnalyzeError::NoBaselineCoverage) => {}
                    Err(AnalyzeError::InputTooLong { .. }) => {}
                }
            }
            corpus[entry_idx].analyzed = true;
            persist_entry(cfg, &corpus[entry_idx])?;
        }

        for _ in 0..cfg.trials_per_cycle {
            if stats.executions >= max_execs || over_time(&start) {
                break;
            }
            // Splice donor: uniformly random other corpus entry.
            let donor_idx = if corpus.len() > 1 {
                let r = rng.gen_range(0..corpus.len() - 1);
                if r >= entry_idx { r + 1 } else { r }
            } else {
                entry_idx
            };
            let parent = &corpus[entry_idx];
            let relations =
                if cfg.frameshift_enabled { parent.relations.clone() } else { Vec::new() };
            let base = StructuredInput::new(parent.bytes.clone(), relations);
            let donor: &[u8] = &corpus[donor_idx].bytes;
            let mutant = havoc(&base, &mut rng, cfg, Some(donor));
            let bytes = if cfg.frameshift_enabled {
                let committed = mutant.commit();
                if committed.fixups > 0 {
                    stats.fixups_fired += 1;
                }
                committed.bytes
            } else {
                mutant.into_bytes()
            };
            stats.executions += 1;
            let coverage = target.execute(&bytes);
            if seen.merge(&coverage) {
                let entry = CorpusEntry {
                    id: corpus.len() as u32,
                    bytes,
                    coverage,
                    relations: Vec::new(),
                    analyzed: false,
                    discovery_time: stats.executions,
                };
                persist_entry(cfg, &entry)?;
                corpus.push(entry);
            }
        }

        stats.corpus_size = corpus.len();
        stats.feature_count = seen.count;
        if last_stats_write.elapsed().as_secs() >= 5 {
            write_stats(target.name(), cfg, &stats)?;
            last_stats_write = Instant::now();
        }
    }

    stats.corpus_size = corpus.len();
    stats.feature_count = seen.count;
    write_stats(target.name(), cfg, &stats)?;
    Ok(stats)
}

/// Runs independent campaigns, in parallel when the `parallel` feature is
/// enabled. Each campaign stays internally sequential and deterministic.
#[cfg(feature = "parallel")]
pub fn run_many(
    jobs: Vec<(&'static dyn Target, CampaignConfig)>,
) -> Vec<Result<CampaignStats, CampaignError>> {
    use rayon::prelude::*;
    jobs.into_par_iter().map(|(t, cfg)| run_campaign(t, &cfg)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn run_many(
    jobs: Vec<(&'static dyn Target, CampaignConfig)>,
) -> Vec<Result<CampaignStats, CampaignError>> {
    run_many_seq(jobs)
}

/// Sequential variant of [`run_many`], kept for comparison benchmarks.
pub fn run_many_seq(
    jobs: Vec<(&'static dyn Target, CampaignConfig)>,
) -> Vec<Result<CampaignStats, CampaignError>> {
    jobs.into_iter().map(|(t, cfg)| run_campaign(t, &cfg)).collect()
}

fn load_seeds(cfg: &CampaignConfig) -> Result<Vec<Vec<u8>>, CampaignError> {
    let Some(dir) = &cfg.seeds_dir else {
        return Ok(vec![Vec::new()]);
    };
    let mut names: Vec<PathBuf> = fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    names.sort();
    let mut out = Vec::with_capacity(names.len());
    for p in names {
        out.push(fs::read(p)?);
    }
    if out.is_empty() {
        out.push(Vec::new());
    }
    Ok(out)
}

fn entry_paths(dir: &Path, id: u32) -> (PathBuf, PathBuf) {
    (dir.join(format!("{id:06}.bin")), dir.join(format!("{id:06}.relations.json")))
}

fn persist_entry(cfg: &CampaignConfig, entry: &CorpusEntry) -> Result<(), CampaignError> {
    let Some(dir) = &cfg.corpus_dir else { return Ok(()) };
    save_entry(entry, dir)
}

/// Writes `<id>.bin` and the `<id>.relations.json` sidecar; idempotent.
pub fn save_entry(entry: &CorpusEntry, dir: &Path) -> Result<(), CampaignError> {
    let (bin, sidecar) = entry_paths(dir, entry.id);
    fs::write(bin, &entry.bytes)?;
    let meta = RelationSidecar { analyzed: entry.analyzed, relations: entry.relations.clone() };
    let mut f = fs::File::create(sidecar)?;
    serde_json::to_writer(&mut f, &meta)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Loads persisted entries in id order.
pub fn load_corpus(dir: &Path) -> Result<Vec<(u32, Vec<u8>, RelationSidecar)>, CampaignError> {
    let mut ids = Vec::new();
    for e in fs::read_dir(dir)? {
        let p = e?.path();
        if let Some(name) = p.file_name().and_then(|n| n.to_str()) {
            if let Some(id) = name.strip_suffix(".bin").and_then(|s| s.parse::<u32>().ok()) {
                ids.push(id);
            }
        }
    }
    ids.sort_unstable();
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let (bin, sidecar) = entry_paths(dir, id);
        let bytes = fs::read(bin)?;
        let meta: RelationSidecar = serde_json::from_slice(&fs::read(sidecar)?)?;
        out.push((id, bytes, meta));
    }
    Ok(out)
}

fn write_stats(
    target: &str,
    cfg: &CampaignConfig,
    stats: &CampaignStats,
) -> Result<(), CampaignError> {
    let Some(dir) = &cfg.corpus_dir else { return Ok(()) };
    let file = StatsFile { target: target.to_string(), config: cfg.clone(), stats: stats.clone() };
    let json = serde_json::to_string_pretty(&file)?;
    fs::write(dir.join("stats.json"), json + "\n")?;
    Ok(())
}

/// Reads `stats.json` back from a corpus directory.
pub fn load_stats(dir: &Path) -> Result<(CampaignConfig, CampaignStats), CampaignError> {
    let raw = fs::read(dir.join("stats.json"))?;
    let file: StatsFile = serde_json::from_slice(&raw)?;
    Ok((file.config, file.stats))
}
