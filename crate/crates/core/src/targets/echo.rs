//! Negative-control target: parses nothing, covers one block regardless of
//! input content or length.

use super::{Executor, Target, Trace};
use crate::coverage::CoverageSet;
use crate::relation::RelationField;
use std::ops::Range;

pub const ENTRY: u32 = 0;

pub struct Echo;

impl Executor for Echo {
    fn execute(&self, _input: &[u8]) -> CoverageSet {
        let mut t = Trace::new();
        t.hit(ENTRY);
        t.finish()
    }
}

impl Target for Echo {
    fn name(&self) -> &'static str {
        "echo"
    }

    fn seed(&self) -> Vec<u8> {
        // Arbitrary content; nothing in it matters to the target.
        (0..64u32).map(|i| (i * 37 % 251) as u8 | 1).collect()
    }

    fn ground_truth(&self) -> Vec<RelationField> {
        Vec::new()
    }

    fn pass_checkpoints(&self) -> Vec<u32> {
        vec![ENTRY]
    }

    fn rigid_ranges(&self) -> Vec<Range<usize>> {
        Vec::new()
    }

    fn check_features(&self) -> Vec<(&'static str, u32)> {
        Vec::new()
    }

    fn governing_values(&self, _input: &[u8]) -> Option<Vec<u64>> {
        Some(Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coverage_is_constant() {
        let a = Echo.execute(&[]);
        let b = Echo.execute(&[1, 2, 3]);
        let c = Echo.execute(&vec![0xff; 4096]);
        assert_eq!(a, b);
        assert_eq!(b, c);
        assert_eq!(a.len(), 1);
    }
}
