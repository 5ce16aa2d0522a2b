//! Type-length-value target with short- and long-form lengths.
//!
//! A node is `{type u8, length, value}`. Lengths below 0x80 are one byte;
//! otherwise `0x80 + k` prefixes a k-byte big-endian length (k in 1..=2).
//! Type 0x30 is a sequence whose value must be exactly filled by child
//! nodes; 0x04/0x03/0x13 are leaves emitting a type feature and a length
//! bucket; 0x00 is a single-byte pad; anything else is an error. One root
//! node is parsed and trailing bytes are ignored.
//!
//! The long-form relation fields cover only the low-order length bytes, so
//! mutations that would change the encoding width fall outside the model.

use super::{Executor, Target, Trace};
use crate::coverage::CoverageSet;
use crate::relation::{read_field, Endianness, RelationField};
use std::ops::Range;

pub const ENTRY: u32 = 0;
pub const ERR_TRUNC: u32 = 1;
pub const ERR_OVERRUN: u32 = 2;
pub const ERR_DEPTH: u32 = 3;
pub const ERR_TYPE: u32 = 4;
pub const ERR_LEN: u32 = 5;
pub const SEQ_ENTER: u32 = 6;
pub const SEQ_PASS: u32 = 7;
pub const SEQ_COUNT_BASE: u32 = 8; // children per sequence, capped at 7
pub const OCTET_TYPE: u32 = 16;
pub const OCTET_BUCKET_BASE: u32 = 17; // len/4, capped at 7
pub const BITSTR_TYPE: u32 = 25;
pub const BITSTR_BUCKET_BASE: u32 = 26;
pub const PRINT_TYPE: u32 = 34;
pub const PRINT_BUCKET_BASE: u32 = 35;
pub const ROOT_EXACT: u32 = 43;
pub const LEAF_TOTAL_BASE: u32 = 44; // total leaves, capped at 7

const TYPE_SEQ: u8 = 0x30;
const TYPE_PAD: u8 = 0x00;
const MAX_DEPTH: u32 = 4;

pub struct Tlv;

struct Parser<'a> {
    input: &'a [u8],
    trace: Trace,
    leaves: u32,
}

impl<'a> Parser<'a> {
    /// Parses one node starting at `pos`, bounded by `end`. Returns the
    /// position after the node, or None once an error feature was emitted.
    fn node(&mut self, pos: usize, end: usize, depth: u32) -> Option<usize> {
        if pos >= end {
            self.trace.hit(ERR_TRUNC);
            return None;
        }
        let ty = self.input[pos];
        if ty == TYPE_PAD {
            return Some(pos + 1);
        }
        if pos + 1 >= end {
            self.trace.hit(ERR_TRUNC);
            return None;
        }
        let l0 = self.input[pos + 1];
        let (len, vstart) = if l0 < 0x80 {
            (l0 as u64, pos + 2)
        } else {
            let k = (l0 - 0x80) as usize;
            if k == 0 || k > 2 {
                self.trace.hit(ERR_LEN);
                return None;
            }
            if pos + 2 + k > end {
                self.trace.hit(ERR_TRUNC);
                return None;
            }
            (read_field(self.input, pos + 2, k as u8, Endianness::Big).unwrap(), pos + 2 + k)
        };
        let vend = vstart.checked_add(usize::try_from(len).ok()?)?;
        if vend > end {
            self.trace.hit(ERR_OVERRUN);
            return None;
        }
        match ty {
            TYPE_SEQ => {
                self.trace.hit(SEQ_ENTER);
                if depth + 1 > MAX_DEPTH {
                    self.trace.hit(ERR_DEPTH);
                    return None;
                }
                let mut p = vstart;
                let mut children = 0u32;
                while p < vend {
                    let ty = self.input[p];
                    p = self.node(p, vend, depth + 1)?;
                    if ty != TYPE_PAD {
                        children += 1;
                    }
                }
                self.trace.hit(SEQ_PASS);
                self.trace.hit(SEQ_COUNT_BASE + children.min(7));
            }
            0x04 => self.leaf(OCTET_TYPE, OCTET_BUCKET_BASE, len),
            0x03 => self.leaf(BITSTR_TYPE, BITSTR_BUCKET_BASE, len),
            0x13 => self.leaf(PRINT_TYPE, PRINT_BUCKET_BASE, len),
            _ => {
                self.trace.hit(ERR_TYPE);
                return None;
            }
        }
        Some(vend)
    }

    fn leaf(&mut self, type_feature: u32, bucket_base: u32, len: u64) {
        self.trace.hit(type_feature);
        self.trace.hit(bucket_base + (len / 4).min(7) as u32);
        self.leaves += 1;
    }
}

impl Executor for Tlv {
    fn execute(&self, input: &[u8]) -> CoverageSet {
        let mut p = Parser { input, trace: Trace::new(), leaves: 0 };
        p.trace.hit(ENTRY);
        if let Some(end) = p.node(0, input.len(), 0) {
            if end == input.len() {
                p.trace.hit(ROOT_EXACT);
            }
            let leaves = p.leaves;
            p.trace.hit(LEAF_TOTAL_BASE + leaves.min(7));
        }
        p.trace.finish()
    }
}

impl Target for Tlv {
    fn name(&self) -> &'static str {
        "tlv"
    }

    /// A sequence holding an octet string [9,9,9], a bit string [1,2,3,4]
    /// and the printable string "fuzzer". The sequence and the bit string
    /// use long-form lengths so both encodings are represented.
    fn seed(&self) -> Vec<u8> {
        let mut out = vec![TYPE_SEQ, 0x81, 0x14];
        out.extend_from_slice(&[0x04, 0x03, 9, 9, 9]);
        out.extend_from_slice(&[0x03, 0x81, 0x04, 1, 2, 3, 4]);
        out.extend_from_slice(&[0x13, 0x06]);
        out.extend_from_slice(b"fuzzer");
        out
    }

    fn ground_truth(&self) -> Vec<RelationField> {
        // Long-form lengths are approximated by their low-order byte.
        vec![
            RelationField::new(3, 23, 2, 1, Endianness::Big).unwrap(),
            RelationField::new(5, 8, 4, 1, Endianness::Big).unwrap(),
            RelationField::new(11, 15, 10, 1, Endianness::Big).unwrap(),
            RelationField::new(17, 23, 16, 1, Endianness::Big).unwrap(),
        ]
    }

    fn pass_checkpoints(&self) -> Vec<u32> {
        vec![SEQ_ENTER, SEQ_PASS, OCTET_TYPE, BITSTR_TYPE, PRINT_TYPE]
    }

    fn rigid_ranges(&self) -> Vec<Range<usize>> {
        // Type bytes and long-form prefix bytes.
        vec![0..2, 3..4, 8..10, 15..16]
    }

    fn check_features(&self) -> Vec<(&'static str, u32)> {
        vec![("seq", SEQ_PASS)]
    }

    fn governing_values(&self, input: &[u8]) -> Option<Vec<u64>> {
        // Length fields in structural (depth-first) order.
        fn walk(input: &[u8], pos: usize, end: usize, depth: u32, out: &mut Vec<u64>) -> Option<usize> {
            if pos >= end || depth > MAX_DEPTH {
                return None;
            }
            let ty = input[pos];
            if ty == TYPE_PAD {
                return Some(pos + 1);
            }
            if pos + 1 >= end {
                return None;
            }
            let l0 = input[pos + 1];
            let (len, vstart) = if l0 < 0x80 {
                (l0 as u64, pos + 2)
            } else {
                let k = (l0 - 0x80) as usize;
                if k == 0 || k > 2 || pos + 2 + k > end {
                    return None;
                }
                (read_field(input, pos + 2, k as u8, Endianness::Big).unwrap(), pos + 2 + k)
            };
            out.push(len);
            let vend = vstart.checked_add(usize::try_from(len).ok()?)?;
            if vend > end {
                return None;
            }
            if ty == TYPE_SEQ {
                let mut p = vstart;
                while p < vend {
                    p = walk(input, p, vend, depth + 1, out)?;
                }
            }
            Some(vend)
        }
        let mut out = Vec::new();
        walk(input, 0, input.len(), 0, &mut out)?;
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_parses_fully() {
        let cov = Tlv.execute(&Tlv.seed());
        for f in [SEQ_ENTER, SEQ_PASS, OCTET_TYPE, BITSTR_TYPE, PRINT_TYPE, ROOT_EXACT] {
            assert!(cov.contains(f));
        }
        assert!(cov.contains(SEQ_COUNT_BASE + 3));
        assert!(cov.contains(LEAF_TOTAL_BASE + 3));
    }

    #[test]
    fn child_crossing_parent_boundary_fails() {
        let mut seed = Tlv.seed();
        seed[16] = 0x20; // printable now claims 32 bytes, parent ends first
        let cov = Tlv.execute(&seed);
        assert!(cov.contains(ERR_OVERRUN));
        assert!(!cov.contains(SEQ_PASS));
    }

    #[test]
    fn padding_fills_sequences() {
        // Sequence of length 4 holding only pad bytes.
        let cov = Tlv.execute(&[0x30, 0x04, 0, 0, 0, 0]);
        assert!(cov.contains(SEQ_PASS));
        assert!(cov.contains(SEQ_COUNT_BASE));
    }

    #[test]
    fn depth_limit_enforced() {
        // Five nested sequences exceed the cap of four.
        let mut v = vec![0x30, 0x08, 0x30, 0x06, 0x30, 0x04, 0x30, 0x02, 0x30, 0x00];
        let cov = Tlv.execute(&v);
        assert!(cov.contains(ERR_DEPTH));
        v.truncate(8);
        v[1] = 6;
        v[3] = 4;
        v[5] = 2;
        v[7] = 0;
        assert!(Tlv.execute(&v).contains(SEQ_PASS));
    }

    #[test]
    fn unknown_type_is_an_error() {
        let cov = Tlv.execute(&[0x55, 0x01, 0xaa]);
        assert!(cov.contains(ERR_TYPE));
    }

    #[test]
    fn governing_values_of_seed() {
        assert_eq!(Tlv.governing_values(&Tlv.seed()), Some(vec![20, 3, 4, 6]));
    }
}
