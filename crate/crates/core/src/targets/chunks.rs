//! Chunk-container target: magic, then `{size u32 BE, type [4], data[size]}`
//! records. `FIXD` chunks must have size exactly 8 (abort otherwise), `VARD`
//! chunks take any size and emit a size bucket, `END\0` stops parsing, and
//! unknown types whose four bytes are ASCII letters are skipped silently;
//! anything else aborts. Bytes after `END` are ignored.

use super::{Executor, Target, Trace};
use crate::coverage::CoverageSet;
use crate::relation::{read_field, Endianness, RelationField};
use std::ops::Range;

pub const ENTRY: u32 = 0;
pub const ERR_MAGIC: u32 = 1;
pub const MAGIC_OK: u32 = 2;
pub const SEEN_BASE: u32 = 3; // chunk index, capped at 8
pub const ERR_HDR_TRUNC: u32 = 11;
pub const ERR_DATA_TRUNC: u32 = 12;
pub const FIXD_PASS: u32 = 13;
pub const FIXD_ABORT: u32 = 14;
pub const VARD_BUCKET_BASE: u32 = 15; // size/16, capped at 8
pub const END_SEEN: u32 = 24;
pub const ERR_TYPE: u32 = 25;

const MAGIC: &[u8; 4] = b"CHNK";
const FIXD_SIZE: u64 = 8;

pub struct Chunks;

impl Executor for Chunks {
    fn execute(&self, input: &[u8]) -> CoverageSet {
        let mut t = Trace::new();
        t.hit(ENTRY);
        if input.len() < 4 || &input[0..4] != MAGIC {
            t.hit(ERR_MAGIC);
            return t.finish();
        }
        t.hit(MAGIC_OK);
        let mut pos = 4usize;
        let mut idx = 0u32;
        loop {
            if pos == input.len() {
                return t.finish();
            }
            if input.len() - pos < 8 {
                t.hit(ERR_HDR_TRUNC);
                return t.finish();
            }
            let size = read_field(input, pos, 4, Endianness::Big).unwrap();
            let ty = &input[pos + 4..pos + 8];
            t.hit(SEEN_BASE + idx.min(7));
            if ty == b"END\0" {
                t.hit(END_SEEN);
                return t.finish();
            }
            if ty == b"FIXD" {
                if size != FIXD_SIZE {
                    t.hit(FIXD_ABORT);
                    return t.finish();
                }
                if (input.len() - pos - 8) < FIXD_SIZE as usize {
                    t.hit(ERR_DATA_TRUNC);
                    return t.finish();
                }
                t.hit(FIXD_PASS);
                pos += 8 + FIXD_SIZE as usize;
            } else {
                if ty != b"VARD" && !ty.iter().all(|b| b.is_ascii_alphabetic()) {
                    t.hit(ERR_TYPE);
                    return t.finish();
                }
                if size > (input.len() - pos - 8) as u64 {
                    t.hit(ERR_DATA_TRUNC);
                    return t.finish();
                }
                if ty == b"VARD" {
                    t.hit(VARD_BUCKET_BASE + (size / 16).min(8) as u32);
                }
                pos += 8 + size as usize;
            }
            idx += 1;
        }
    }
}

const SEED_VARD_LEN: usize = 24;

impl Target for Chunks {
    fn name(&self) -> &'static str {
        "chunks"
    }

    fn seed(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&8u32.to_be_bytes());
        out.extend_from_slice(b"FIXD");
        out.extend((0..8).map(|i| 0xf1 + i as u8));
        out.extend_from_slice(&(SEED_VARD_LEN as u32).to_be_bytes());
        out.extend_from_slice(b"VARD");
        out.extend((0..SEED_VARD_LEN).map(|i| 0xa1 + (i % 0x40) as u8));
        out.extend_from_slice(&0u32.to_be_bytes());
        out.extend_from_slice(b"END\0");
        out
    }

    fn ground_truth(&self) -> Vec<RelationField> {
        // The VARD size field, size-post form: span starts right after the
        // field. FIXD and END sizes are intentionally not relations.
        vec![RelationField::new(24, 24 + SEED_VARD_LEN, 20, 4, Endianness::Big).unwrap()]
    }

    fn pass_checkpoints(&self) -> Vec<u32> {
        vec![MAGIC_OK, FIXD_PASS, END_SEEN]
    }

    fn rigid_ranges(&self) -> Vec<Range<usize>> {
        // Magic, the whole FIXD chunk, and the VARD type tag.
        vec![0..20, 24..28]
    }

    fn check_features(&self) -> Vec<(&'static str, u32)> {
        vec![("magic", MAGIC_OK), ("fixd", FIXD_PASS), ("end", END_SEEN)]
    }

    fn governing_values(&self, input: &[u8]) -> Option<Vec<u64>> {
        if input.len() < 4 || &input[0..4] != MAGIC {
            return None;
        }
        let mut sizes = Vec::new();
        let mut pos = 4usize;
        while input.len() - pos >= 8 {
            let size = read_field(input, pos, 4, Endianness::Big).ok()?;
            let ty = &input[pos + 4..pos + 8];
            if ty == b"END\0" {
                break;
            }
            sizes.push(size);
            let skip = if ty == b"FIXD" { FIXD_SIZE } else { size };
            pos = pos.checked_add(8 + usize::try_from(skip).ok()?)?;
            if pos > input.len() {
                break;
            }
        }
        Some(sizes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_parses_fully() {
        let cov = Chunks.execute(&Chunks.seed());
        for f in [MAGIC_OK, SEEN_BASE, SEEN_BASE + 1, SEEN_BASE + 2, FIXD_PASS, END_SEEN] {
            assert!(cov.contains(f));
        }
        assert!(cov.contains(VARD_BUCKET_BASE + 1));
    }

    #[test]
    fn fixd_with_wrong_size_aborts() {
        let mut seed = Chunks.seed();
        seed[7] = 9;
        let cov = Chunks.execute(&seed);
        assert!(cov.contains(FIXD_ABORT));
        assert!(!cov.contains(FIXD_PASS));
        assert!(!cov.contains(END_SEEN));
    }

    #[test]
    fn unknown_chunk_types_are_skipped() {
        let mut seed = Chunks.seed();
        seed[24..28].copy_from_slice(b"ZZZZ");
        let cov = Chunks.execute(&seed);
        assert!(cov.contains(END_SEEN));
        assert!(!cov.contains(VARD_BUCKET_BASE + 1));
    }

    #[test]
    fn non_alphabetic_chunk_type_aborts() {
        let mut seed = Chunks.seed();
        seed[24..28].copy_from_slice(&[0x00, 0x41, 0x52, 0x44]);
        let cov = Chunks.execute(&seed);
        assert!(cov.contains(ERR_TYPE));
        assert!(!cov.contains(END_SEEN));
    }

    #[test]
    fn trailing_bytes_after_end_are_ignored() {
        let mut seed = Chunks.seed();
        let with_trailer = {
            seed.extend_from_slice(&[0x41; 13]);
            seed
        };
        assert_eq!(Chunks.execute(&with_trailer), Chunks.execute(&Chunks.seed()));
    }

    #[test]
    fn governing_values_of_seed() {
        assert_eq!(Chunks.governing_values(&Chunks.seed()), Some(vec![8, 24]));
    }
}
