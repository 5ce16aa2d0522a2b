//! Deterministic in-process targets with block-style coverage feedback.
//!
//! Each target is a small parser that emits one feature id per named
//! checkpoint: validation checks passed, branches taken, payload-length
//! buckets in handlers, per chunk/entry index up to a cap. Parse failures
//! are normal paths that emit error-block features. Feature ids are stable
//! small integers assigned in declaration order inside each target module.
//!
//! Four formats exercise the classic relation-field shapes: a nested
//! command packet with three chained size checks, a chunk container with a
//! fixed-size chunk type, a TLV encoding with long-form lengths, and an
//! object file with an offset table. A fifth target parses nothing and
//! serves as a negative control.

use crate::coverage::CoverageSet;
use crate::relation::RelationField;
use std::ops::Range;

pub mod chunks;
pub mod echo;
pub mod nestedcmd;
pub mod objfile;
pub mod tlv;

/// Behavioral contract for anything the engine can run inputs against.
///
/// Implementations must be deterministic (same bytes, same set), total and
/// side-effect free, with feature ids stable for the process lifetime.
pub trait Executor: Send + Sync {
    fn execute(&self, input: &[u8]) -> CoverageSet;
}

/// A toy target: an [`Executor`] plus its format ground truth.
pub trait Target: Executor {
    fn name(&self) -> &'static str;

    /// Canonical valid seed; executing it covers all pass checkpoints.
    fn seed(&self) -> Vec<u8>;

    /// Relation fields of the shipped seed, known by construction.
    fn ground_truth(&self) -> Vec<RelationField>;

    /// Feature ids that every structurally valid resize must preserve.
    fn pass_checkpoints(&self) -> Vec<u32>;

    /// Seed byte ranges that are structural skeleton (magic numbers, type
    /// tags, fixed headers): resizing inside them is out of contract.
    fn rigid_ranges(&self) -> Vec<Range<usize>>;

    /// Named validation checks with their pass-feature ids, in cascade
    /// order, for corpus reporting.
    fn check_features(&self) -> Vec<(&'static str, u32)>;

    /// Values of the governing size/offset fields at their structural
    /// positions, or None when the input is too mangled to locate them.
    fn governing_values(&self, input: &[u8]) -> Option<Vec<u64>>;
}

/// Small helper collecting features during a parse.
#[derive(Default)]
pub(crate) struct Trace {
    feats: Vec<u32>,
}

impl Trace {
    pub(crate) fn new() -> Self {
        Self { feats: Vec::with_capacity(32) }
    }

    pub(crate) fn hit(&mut self, feature: u32) {
        self.feats.push(feature);
    }

    pub(crate) fn finish(self) -> CoverageSet {
        CoverageSet::from_features(self.feats)
    }
}

pub const TARGET_NAMES: [&str; 5] = ["nestedcmd", "chunks", "tlv", "objfile", "echo"];

/// Looks up a shipped target by name.
pub fn by_name(name: &str) -> Option<&'static dyn Target> {
    match name {
        "nestedcmd" => Some(&nestedcmd::NestedCmd),
        "chunks" => Some(&chunks::Chunks),
        "tlv" => Some(&tlv::Tlv),
        "objfile" => Some(&objfile::ObjFile),
        "echo" => Some(&echo::Echo),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_resolves_all_names() {
        for name in TARGET_NAMES {
            let t = by_name(name).expect(name);
            assert_eq!(t.name(), name);
        }
        assert!(by_name("nope").is_none());
    }

    #[test]
    fn seeds_cover_all_pass_checkpoints() {
        for name in TARGET_NAMES {
            let t = by_name(name).unwrap();
            let cov = t.execute(&t.seed());
            for ck in t.pass_checkpoints() {
                assert!(cov.contains(ck), "{name}: seed misses checkpoint {ck}");
            }
        }
    }

    #[test]
    fn execution_is_deterministic() {
        let inputs: Vec<Vec<u8>> = vec![
            vec![],
            vec![0x00; 64],
            (0..=255).collect(),
            by_name("nestedcmd").unwrap().seed(),
        ];
        for name in TARGET_NAMES {
            let t = by_name(name).unwrap();
            for input in &inputs {
                let first = t.execute(input);
                for _ in 0..1000 {
                    assert_eq!(t.execute(input), first, "{name} not deterministic");
                }
            }
        }
    }

    #[test]
    fn ground_truth_fields_read_back_span_lengths() {
        for name in TARGET_NAMES {
            let t = by_name(name).unwrap();
            let seed = t.seed();
            for r in t.ground_truth() {
                let v = crate::relation::read_field(&seed, r.p, r.s, r.e).unwrap();
                assert_eq!(v as usize, r.b - r.a, "{name}: field at {} disagrees", r.p);
            }
        }
    }
}
