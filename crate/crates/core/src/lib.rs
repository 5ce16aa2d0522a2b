//! Coverage-guided fuzzing with automatic inference of size/offset
//! *relation fields* in binary input formats.
//!
//! A relation field ties a serialized integer at some byte position to the
//! span of the input whose length it encodes. Mutating the field without
//! resizing the span (or vice versa) produces a structurally invalid input
//! that parsers reject early. This crate discovers such fields dynamically,
//! using only coverage feedback, via a double-mutant experiment: a candidate
//! field is corrupted (destroying coverage), then filler bytes are inserted
//! at hypothesized span ends to see whether the lost coverage comes back.
//! Confirmed relations are then kept consistent during havoc mutation, so
//! the fuzzer can resize inputs without breaking them.
//!
//! Modules:
//! - [`coverage`]: coverage sets and the destructive/restorative predicates
//! - [`relation`]: relation fields, serialized-integer access, form taxonomy
//! - [`mutation`]: structure-aware replace/insert/remove and re-serialization
//! - [`inference`]: the double-mutant analysis loop
//! - [`targets`]: deterministic in-process toy targets with known structure
//! - [`campaign`]: a minimal deterministic fuzzing loop with A/B baseline mode
//! - [`report`]: corpus summaries ("newly sized" variants per validation check)
//! - [`hexdump`]: annotated hexdumps of inputs with their relation fields

pub mod campaign;
pub mod coverage;
pub mod hexdump;
pub mod inference;
pub mod mutation;
pub mod relation;
pub mod report;
pub mod targets;

pub use coverage::{
    is_destructive, is_restorative, lost_features, restored_amount, AnalysisThresholds,
    CoverageSet, Threshold,
};
pub use inference::{analyze, scan_candidates, AnalysisConfig, AnalysisReport, CandidateField};
pub use mutation::{MutationOp, StructuredInput};
pub use relation::{classify_form, read_field, write_field, Endianness, RelationField, RelationForm};
pub use targets::{by_name, Executor, Target, TARGET_NAMES};
