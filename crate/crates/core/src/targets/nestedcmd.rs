//! Command-packet target with three nested size checks.
//!
//! Layout (all integers big-endian):
//! ```text
//! 0   u16 tag        must be 0x8001
//! 2   u32 cmd_size   check 1: == total input length
//! 6   u32 cmd_code   0x13c or 0x144, selects the handler
//! 10  u32 handle     free
//! 14  u32 auth_size  check 2: <= length remaining after offset 18
//! 18  auth_data[auth_size]
//! ..  u16 event_size check 3: == bytes remaining after this field
//! ..  data[event_size]
//! ```
//! The handler emits a bucket feature per `event_size / 8`, capped at 16.

use super::{Executor, Target, Trace};
use crate::coverage::CoverageSet;
use crate::relation::{read_field, Endianness, RelationField};
use std::ops::Range;

pub const ENTRY: u32 = 0;
pub const ERR_SHORT: u32 = 1;
pub const ERR_TAG: u32 = 2;
pub const CHK1_PASS: u32 = 3;
pub const CHK1_FAIL: u32 = 4;
pub const DISPATCH_EVENT: u32 = 5;
pub const DISPATCH_EXTEND: u32 = 6;
pub const ERR_CODE: u32 = 7;
pub const CHK2_PASS: u32 = 8;
pub const CHK2_FAIL: u32 = 9;
pub const CHK3_PASS: u32 = 10;
pub const CHK3_FAIL: u32 = 11;
pub const ERR_EVENT_TRUNC: u32 = 12;
pub const EVENT_BUCKET_BASE: u32 = 13; // 17 buckets
pub const EXTEND_BUCKET_BASE: u32 = 30; // 17 buckets

const TAG: u64 = 0x8001;
const CODE_EVENT: u64 = 0x13c;
const CODE_EXTEND: u64 = 0x144;
const HEADER_LEN: usize = 18;

const SEED_AUTH_LEN: usize = 309;
const SEED_PAYLOAD: &[u8] = b"Hello World Event!";

pub struct NestedCmd;

impl Executor for NestedCmd {
    fn execute(&self, input: &[u8]) -> CoverageSet {
        let mut t = Trace::new();
        t.hit(ENTRY);
        let len = input.len();
        if len < HEADER_LEN {
            t.hit(ERR_SHORT);
            return t.finish();
        }
        let be = |p, s| read_field(input, p, s, Endianness::Big).unwrap();
        if be(0, 2) != TAG {
            t.hit(ERR_TAG);
            return t.finish();
        }
        if be(2, 4) != len as u64 {
            t.hit(CHK1_FAIL);
            return t.finish();
        }
        t.hit(CHK1_PASS);
        let bucket_base = match be(6, 4) {
            CODE_EVENT => {
                t.hit(DISPATCH_EVENT);
                EVENT_BUCKET_BASE
            }
            CODE_EXTEND => {
                t.hit(DISPATCH_EXTEND);
                EXTEND_BUCKET_BASE
            }
            _ => {
                t.hit(ERR_CODE);
                return t.finish();
            }
        };
        let auth_size = be(14, 4);
        if auth_size > (len - HEADER_LEN) as u64 {
            t.hit(CHK2_FAIL);
            return t.finish();
        }
        t.hit(CHK2_PASS);
        let ev_pos = HEADER_LEN + auth_size as usize;
        if ev_pos + 2 > len {
            t.hit(ERR_EVENT_TRUNC);
            return t.finish();
        }
        let event_size = be(ev_pos, 2);
        if event_size != (len - ev_pos - 2) as u64 {
            t.hit(CHK3_FAIL);
            return t.finish();
        }
        t.hit(CHK3_PASS);
        t.hit(bucket_base + (event_size / 8).min(16) as u32);
        t.finish()
    }
}

impl Target for NestedCmd {
    fn name(&self) -> &'static str {
        "nestedcmd"
    }

    fn seed(&self) -> Vec<u8> {
        let len = HEADER_LEN + SEED_AUTH_LEN + 2 + SEED_PAYLOAD.len();
        let mut out = Vec::with_capacity(len);
        out.extend_from_slice(&(TAG as u16).to_be_bytes());
        out.extend_from_slice(&(len as u32).to_be_bytes());
        out.extend_from_slice(&(CODE_EVENT as u32).to_be_bytes());
        out.extend_from_slice(&0xdeadbeefu32.to_be_bytes());
        out.extend_from_slice(&(SEED_AUTH_LEN as u32).to_be_bytes());
        // Auth bytes stay in 0xa0..=0xef: no zeros, no small values that
        // would alias as plausible lengths next to a zero.
        out.extend((0..SEED_AUTH_LEN).map(|i| 0xa0 + (i * 7 % 0x50) as u8));
        out.extend_from_slice(&(SEED_PAYLOAD.len() as u16).to_be_bytes());
        out.extend_from_slice(SEED_PAYLOAD);
        debug_assert_eq!(out.len(), len);
        out
    }

    fn ground_truth(&self) -> Vec<RelationField> {
        let len = self.seed().len();
        let ev_pos = HEADER_LEN + SEED_AUTH_LEN;
        vec![
            RelationField::new(0, len, 2, 4, Endianness::Big).unwrap(),
            RelationField::new(HEADER_LEN, ev_pos, 14, 4, Endianness::Big).unwrap(),
            RelationField::new(ev_pos + 2, len, ev_pos, 2, Endianness::Big).unwrap(),
        ]
    }

    fn pass_checkpoints(&self) -> Vec<u32> {
        vec![CHK1_PASS, CHK2_PASS, CHK3_PASS]
    }

    #[allow(clippy::single_range_in_vec_init)]
    fn rigid_ranges(&self) -> Vec<Range<usize>> {
        vec![0..HEADER_LEN]
    }

    fn check_features(&self) -> Vec<(&'static str, u32)> {
        vec![("chk1", CHK1_PASS), ("chk2", CHK2_PASS), ("chk3", CHK3_PASS)]
    }

    fn governing_values(&self, input: &[u8]) -> Option<Vec<u64>> {
        if input.len() < HEADER_LEN {
            return None;
        }
        let cmd_size = read_field(input, 2, 4, Endianness::Big).ok()?;
        let auth_size = read_field(input, 14, 4, Endianness::Big).ok()?;
        let ev_pos = HEADER_LEN.checked_add(usize::try_from(auth_size).ok()?)?;
        let event_size = read_field(input, ev_pos, 2, Endianness::Big).ok()?;
        Some(vec![cmd_size, auth_size, event_size])
    }
}
