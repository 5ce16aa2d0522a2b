//! Structure-aware mutation over `(bytes, relations)` pairs.
//!
//! Raw replace/insert/remove operators are applied to the bytes while
//! `on_insert`/`on_remove` bookkeeping shifts every surviving relation.
//! Operations that would tear a relation's field bytes apart move that
//! relation to a `dropped` set for the rest of the mutation session instead
//! of constraining the mutator. Before execution, [`StructuredInput::commit`]
//! re-serializes each surviving relation's span length back into its field.

use crate::relation::{read_field, write_field_in_place, RelationField};
use thiserror::Error;

/// A raw byte-level mutation. Indices refer to the pre-operation length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MutationOp {
    /// Overwrite `data.len()` bytes starting at `at`. Length-preserving.
    Replace { at: usize, data: Vec<u8> },
    /// Insert `data` before position `at` (`at == len` appends).
    Insert { at: usize, data: Vec<u8> },
    /// Remove `n` bytes starting at `at`.
    Remove { at: usize, n: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MutationError {
    #[error("invalid-op: {0}")]
    InvalidOp(String),
}

/// Shifts a relation across an insertion of `v_len` bytes at `i`.
///
/// Deliberate asymmetry: `i = a` does not shift `a` while `i = b` does shift
/// `b`, so insertions at either span boundary grow the span.
pub fn on_insert(r: RelationField, i: usize, v_len: usize) -> RelationField {
    let mut r = r;
    if i <= r.p {
        r.p += v_len;
    }
    if i < r.a {
        r.a += v_len;
    }
    if i <= r.b {
        r.b += v_len;
    }
    r
}

/// Shifts a relation across a removal of `n` bytes at `i`, clamping each
/// position to the removal point.
pub fn on_remove(r: RelationField, i: usize, n: usize) -> RelationField {
    let mut r = r;
    if i <= r.p {
        r.p -= (r.p - i).min(n);
    }
    if i <= r.a {
        r.a -= (r.a - i).min(n);
    }
    if i <= r.b {
        r.b -= (r.b - i).min(n);
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compat {
    Keep,
    Drop,
}

/// Decides whether a relation survives an operation.
///
/// Drops when an insert splits the field bytes, a removal overlaps them, or
/// the post-bookkeeping relation would violate `a < b` or stay out of
/// bounds. `cur_len` is the byte length before the operation.
pub fn check_compatibility(r: &RelationField, op: &MutationOp, cur_len: usize) -> Compat {
    let fr = r.field_range();
    match op {
        MutationOp::Replace { .. } => Compat::Keep,
        MutationOp::Insert { at, data } => {
            if *at > fr.start && *at < fr.end {
                return Compat::Drop;
            }
            let shifted = on_insert(*r, *at, data.len());
            if shifted.in_bounds(cur_len + data.len()) {
                Compat::Keep
            } else {
                Compat::Drop
            }
        }
        MutationOp::Remove { at, n } => {
            if *at < fr.end && at + n > fr.start {
                return Compat::Drop;
            }
            let shifted = on_remove(*r, *at, *n);
            if shifted.in_bounds(cur_len - n) {
                Compat::Keep
            } else {
                Compat::Drop
            }
        }
    }
}

/// Byte sequence paired with its relation fields.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StructuredInput {
    bytes: Vec<u8>,
    relations: Vec<RelationField>,
    dropped: Vec<RelationField>,
}

/// Result of committing a mutation session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Committed {
    pub bytes: Vec<u8>,
    /// Relations whose field bytes were actually rewritten to a new value.
    pub fixups: usize,
    /// Relations dropped at commit because their span length overflowed.
    pub dropped_overflow: usize,
}

impl StructuredInput {
    pub fn new(bytes: Vec<u8>, relations: Vec<RelationField>) -> Self {
        Self { bytes, relations, dropped: Vec::new() }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn relations(&self) -> &[RelationField] {
        &self.relations
    }

    pub fn dropped(&self) -> &[RelationField] {
        &self.dropped
    }

    /// Applies one raw operation, dropping incompatible relations and
    /// shifting the survivors.
    pub fn apply(&mut self, op: MutationOp) -> Result<(), MutationError> {
        let len = self.bytes.len();
        match &op {
            MutationOp::Replace { at, data } => {
                if at.checked_add(data.len()).is_none_or(|end| end > len) {
                    return Err(MutationError::InvalidOp(format!(
                        "replace at {at} len {} exceeds input len {len}",
                        data.len()
                    )));
                }
            }
            MutationOp::Insert { at, .. } => {
                if *at > len {
                    return Err(MutationError::InvalidOp(format!(
                        "insert at {at} exceeds input len {len}"
                    )));
                }
            }
            MutationOp::Remove { at, n } => {
                if at.checked_add(*n).is_none_or(|end| end > len) {
                    return Err(MutationError::InvalidOp(format!(
                        "remove at {at} len {n} exceeds input len {len}"
                    )));
                }
            }
        }

        let mut survivors = Vec::with_capacity(self.relations.len());
        for r in self.relations.drain(..) {
            match check_compatibility(&r, &op, len) {
                Compat::Keep => survivors.push(r),
                Compat::Drop => self.dropped.push(r),
            }
        }

        match op {
            MutationOp::Replace { at, data } => {
                self.bytes[at..at + data.len()].copy_from_slice(&data);
                self.relations = survivors;
            }
            MutationOp::Insert { at, data } => {
                let v_len = data.len();
                self.bytes.splice(at..at, data);
                self.relations = survivors.into_iter().map(|r| on_insert(r, at, v_len)).collect();
            }
            MutationOp::Remove { at, n } => {
                self.bytes.drain(at..at + n);
                self.relations = survivors.into_iter().map(|r| on_remove(r, at, n)).collect();
            }
        }
        Ok(())
    }

    /// Re-serializes every surviving relation's span length into its field
    /// and returns the final bytes. Relations whose span length no longer
    /// fits the field width are dropped instead of truncated. Consuming
    /// `self` makes commit terminal for the session.
    pub fn commit(mut self) -> Committed {
        let mut fixups = 0;
        let mut dropped_overflow = 0;
        let mut kept = Vec::with_capacity(self.relations.len());
        for r in self.relations.drain(..) {
            let length = (r.b - r.a) as u64;
            let width = r.s as usize;
            if width < 8 && length >= 1u64 << (8 * width) {
                dropped_overflow += 1;
                self.dropped.push(r);
                continue;
            }
            let before = read_field(&self.bytes, r.p, r.s, r.e).expect("relation in bounds");
            write_field_in_place(&mut self.bytes, r.p, r.s, r.e, length)
                .expect("relation in bounds and value checked");
            if before != length {
                fixups += 1;
            }
            kept.push(r);
        }
        Committed { bytes: self.bytes, fixups, dropped_overflow }
    }

    /// Re-arms dropped relations between mutation sessions: merged back only
    /// if their invariants hold against the current bytes, discarded
    /// otherwise.
    pub fn restore_session(&mut self) {
        let len = self.bytes.len();
        for r in std::mem::take(&mut self.dropped) {
            if r.in_bounds(len) {
                self.relations.push(r);
            }
        }
    }
}
