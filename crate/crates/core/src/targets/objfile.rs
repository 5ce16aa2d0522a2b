//! Object-file target: a header points at a table of (offset, size) entries
//! describing data regions elsewhere in the file.
//!
//! ```text
//! 0   magic  "OBJ1"
//! 4   u16 BE entry count
//! 6   u32 BE table offset   check: offset + count*8 <= len
//! ..  data regions
//! ..  table: count x { u32 BE data offset, u32 BE data size }
//!            each checked: offset + size <= len
//! ```
//! Passing entries emit content features over their data region (leading
//! nonzero run, zero-tail cleanliness, sampled byte classes), so reading
//! the wrong region is visible in coverage even when the bounds check is
//! satisfied.

use super::{Executor, Target, Trace};
use crate::coverage::CoverageSet;
use crate::relation::{read_field, Endianness, RelationField};
use std::ops::Range;

pub const ENTRY: u32 = 0;
pub const ERR_SHORT: u32 = 1;
pub const ERR_MAGIC: u32 = 2;
pub const MAGIC_OK: u32 = 3;
pub const ERR_TABLE: u32 = 4;
pub const TABLE_OK: u32 = 5;
pub const ENTRY_BLOCK_BASE: u32 = 6;
pub const ENTRY_BLOCK_SIZE: u32 = 76;
// Per-entry block layout:
pub const E_PASS: u32 = 0;
pub const E_FAIL: u32 = 1;
pub const E_RUN: u32 = 2; // 16 run classes
pub const E_CLEAN: u32 = 18;
pub const E_FULLNZ: u32 = 19;
pub const E_SAMPLE: u32 = 20; // 7 slots x 8 byte classes

const MAGIC: &[u8; 4] = b"OBJ1";
const MAX_ENTRIES: u64 = 8;
/// Sixteenths of the region size sampled for byte-class features.
const SAMPLE_KS: [u64; 7] = [3, 4, 5, 6, 8, 10, 12];

pub struct ObjFile;

fn entry_features(t: &mut Trace, base: u32, region: &[u8]) {
    if region.is_empty() {
        return;
    }
    let run = region.iter().take_while(|&&b| b != 0).count().min(15);
    t.hit(base + E_RUN + run as u32);
    let clean = match region.iter().position(|&b| b == 0) {
        Some(z) => region[z..].iter().all(|&b| b == 0),
        None => true,
    };
    if clean {
        t.hit(base + E_CLEAN);
    }
    if region.iter().all(|&b| b != 0) {
        t.hit(base + E_FULLNZ);
    }
    let size = region.len() as u64;
    for (slot, k) in SAMPLE_KS.iter().enumerate() {
        let pos = (size * k / 16) as usize;
        let class = (region[pos.min(region.len() - 1)] >> 5) as u32;
        t.hit(base + E_SAMPLE + slot as u32 * 8 + class);
    }
}

impl Executor for ObjFile {
    fn execute(&self, input: &[u8]) -> CoverageSet {
        let mut t = Trace::new();
        t.hit(ENTRY);
        let len = input.len() as u64;
        if input.len() < 10 {
            t.hit(ERR_SHORT);
            return t.finish();
        }
        if &input[0..4] != MAGIC {
            t.hit(ERR_MAGIC);
            return t.finish();
        }
        t.hit(MAGIC_OK);
        let count = read_field(input, 4, 2, Endianness::Big).unwrap();
        let toff = read_field(input, 6, 4, Endianness::Big).unwrap();
        if toff + count * 8 > len {
            t.hit(ERR_TABLE);
            return t.finish();
        }
        t.hit(TABLE_OK);
        for i in 0..count.min(MAX_ENTRIES) {
            let base = ENTRY_BLOCK_BASE + i as u32 * ENTRY_BLOCK_SIZE;
            let epos = (toff + i * 8) as usize;
            let off = read_field(input, epos, 4, Endianness::Big).unwrap();
            let size = read_field(input, epos + 4, 4, Endianness::Big).unwrap();
            if off + size > len {
                t.hit(base + E_FAIL);
                continue;
            }
            t.hit(base + E_PASS);
            entry_features(&mut t, base, &input[off as usize..(off + size) as usize]);
        }
        t.finish()
    }
}

const D1: Range<usize> = 10..17;
const D2: Range<usize> = 17..24;
const TABLE: usize = 24;

impl Target for ObjFile {
    fn name(&self) -> &'static str {
        "objfile"
    }

    /// Two 7-byte data regions followed by the table. Region bytes sit in
    /// distinct high byte classes and contain no zeros.
    fn seed(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&2u16.to_be_bytes());
        out.extend_from_slice(&(TABLE as u32).to_be_bytes());
        out.extend((0..D1.len()).map(|i| 0xa1 + i as u8));
        out.extend((0..D2.len()).map(|i| 0xc1 + i as u8));
        for (off, size) in [(D1.start, D1.len()), (D2.start, D2.len())] {
            out.extend_from_slice(&(off as u32).to_be_bytes());
            out.extend_from_slice(&(size as u32).to_be_bytes());
        }
        out
    }

    fn ground_truth(&self) -> Vec<RelationField> {
        vec![
            // Table offset: the whole prefix before the table.
            RelationField::new(0, TABLE, 6, 4, Endianness::Big).unwrap(),
            // Data offsets (prefix spans) and sizes (indirect spans).
            RelationField::new(0, D1.start, TABLE, 4, Endianness::Big).unwrap(),
            RelationField::new(D1.start, D1.end, TABLE + 4, 4, Endianness::Big).unwrap(),
            RelationField::new(0, D2.start, TABLE + 8, 4, Endianness::Big).unwrap(),
            RelationField::new(D2.start, D2.end, TABLE + 12, 4, Endianness::Big).unwrap(),
        ]
    }

    fn pass_checkpoints(&self) -> Vec<u32> {
        vec![
            MAGIC_OK,
            TABLE_OK,
            ENTRY_BLOCK_BASE + E_PASS,
            ENTRY_BLOCK_BASE + ENTRY_BLOCK_SIZE + E_PASS,
        ]
    }

    #[allow(clippy::single_range_in_vec_init)]
    fn rigid_ranges(&self) -> Vec<Range<usize>> {
        vec![0..6]
    }

    fn check_features(&self) -> Vec<(&'static str, u32)> {
        vec![
            ("table", TABLE_OK),
            ("entry0", ENTRY_BLOCK_BASE + E_PASS),
            ("entry1", ENTRY_BLOCK_BASE + ENTRY_BLOCK_SIZE + E_PASS),
        ]
    }

    fn governing_values(&self, input: &[u8]) -> Option<Vec<u64>> {
        if input.len() < 10 || &input[0..4] != MAGIC {
            return None;
        }
        let count = read_field(input, 4, 2, Endianness::Big).ok()?;
        let toff = read_field(input, 6, 4, Endianness::Big).ok()?;
        let mut out = vec![toff];
        for i in 0..count.min(MAX_ENTRIES) {
            let epos = usize::try_from(toff + i * 8).ok()?;
            out.push(read_field(input, epos, 4, Endianness::Big).ok()?);
            out.push(read_field(input, epos + 4, 4, Endianness::Big).ok()?);
        }
        Some(out)
    }
}
