//! Property tests for the engine invariants.

use proptest::prelude::*;
use relfuzz::coverage::{
    is_destructive, lost_features, restored_amount, AnalysisThresholds, CoverageSet,
};
use relfuzz::mutation::{on_insert, on_remove, MutationOp, StructuredInput};
use relfuzz::relation::{
    classify_form, read_field, write_field, Endianness, RelationField, FIELD_WIDTHS,
};

fn cov(v: Vec<u32>) -> CoverageSet {
    CoverageSet::from_features(v)
}

proptest! {
    #[test]
    fn lost_features_identities(a in prop::collection::vec(0u32..200, 0..64),
                                b in prop::collection::vec(0u32..200, 0..64)) {
        let (a, b) = (cov(a), cov(b));
        let lost = lost_features(&a, &b);
        prop_assert_eq!(lost.intersection_len(&b), 0);
        prop_assert!(lost.iter().all(|f| a.contains(f)));
    }

    #[test]
    fn destructive_is_monotone_in_lost(orig in prop::collection::vec(0u32..128, 1..64),
                                       keep_a in prop::collection::vec(any::<bool>(), 64),
                                       keep_b in prop::collection::vec(any::<bool>(), 64)) {
        // mutated_b keeps a subset of what mutated_a keeps: more loss.
        let orig = cov(orig);
        let th = AnalysisThresholds::default();
        let kept_a: Vec<u32> = orig.iter().enumerate()
            .filter(|(i, _)| keep_a[*i % keep_a.len()])
            .map(|(_, f)| f).collect();
        let kept_b: Vec<u32> = kept_a.iter().copied().enumerate()
            .filter(|(i, _)| keep_b[*i % keep_b.len()])
            .map(|(_, f)| f).collect();
        let da = is_destructive(&orig, &cov(kept_a), &th).unwrap();
        let db = is_destructive(&orig, &cov(kept_b), &th).unwrap();
        prop_assert!(!da || db, "adding more lost features never flips true to false");
    }

    #[test]
    fn restored_is_bounded_by_lost(a in prop::collection::vec(0u32..200, 0..64),
                                   b in prop::collection::vec(0u32..200, 0..64),
                                   c in prop::collection::vec(0u32..200, 0..64)) {
        let (a, b, c) = (cov(a), cov(b), cov(c));
        prop_assert!(restored_amount(&a, &b, &c) <= lost_features(&a, &b).len());
    }

    #[test]
    fn field_write_read_round_trip(p in 0usize..16,
                                   width_idx in 0usize..4,
                                   big in any::<bool>(),
                                   v in any::<u64>()) {
        let s = FIELD_WIDTHS[width_idx];
        let e = if big { Endianness::Big } else { Endianness::Little };
        let v = if s < 8 { v & ((1u64 << (8 * s as u32)) - 1) } else { v };
        let buf = write_field(&[0xa5u8; 24], p, s, e, v).unwrap();
        prop_assert_eq!(read_field(&buf, p, s, e).unwrap(), v);
        // Bytes outside the field are untouched.
        for (i, byte) in buf.iter().enumerate() {
            if !(p..p + s as usize).contains(&i) {
                prop_assert_eq!(*byte, 0xa5);
            }
        }
    }

    #[test]
    fn classification_is_total(a in 0usize..64, span in 1usize..64,
                               p in 0usize..60, width_idx in 0usize..4,
                               len in 64usize..256) {
        let s = FIELD_WIDTHS[width_idx];
        let r = RelationField::new(a, a + span, p, s, Endianness::Big).unwrap();
        let f1 = classify_form(&r, len);
        let f2 = classify_form(&r, len);
        prop_assert_eq!(f1, f2);
    }

    #[test]
    fn replace_never_changes_relations(len in 16usize..128,
                                       at in 0usize..100,
                                       n in 1usize..16,
                                       a in 0usize..100,
                                       span in 1usize..32) {
        let at = at.min(len - 1);
        let n = n.min(len - at);
        let a = a.min(len - 1);
        let b = (a + span).min(len).max(a + 1);
        let rel = RelationField::new(a, b, 0, 2, Endianness::Big).unwrap();
        let mut s = StructuredInput::new(vec![0u8; len], vec![rel]);
        s.apply(MutationOp::Replace { at, data: vec![0xff; n] }).unwrap();
        prop_assert_eq!(s.relations(), &[rel]);
        prop_assert!(s.dropped().is_empty());
    }

    #[test]
    fn structured_input_invariants_hold(len in 16usize..128,
                                        ops in prop::collection::vec((0u8..3, 0usize..160, 1usize..12), 1..24)) {
        let rel = RelationField::new(2, 14, 0, 2, Endianness::Big).unwrap();
        let mut s = StructuredInput::new(vec![1u8; len], vec![rel]);
        for (kind, at, n) in ops {
            let cur = s.len();
            match kind {
                0 if cur > 0 => {
                    let at = at % cur;
                    let n = n.min(cur - at);
                    s.apply(MutationOp::Replace { at, data: vec![7; n] }).unwrap();
                }
                1 => {
                    let at = at % (cur + 1);
                    s.apply(MutationOp::Insert { at, data: vec![9; n] }).unwrap();
                }
                _ if cur > 1 => {
                    let at = at % (cur - 1);
                    let n = n.min(cur - at).min(cur - 1);
                    if n > 0 {
                        s.apply(MutationOp::Remove { at, n }).unwrap();
                    }
                }
                _ => {}
            }
            // Every kept relation satisfies the structural invariants.
            for r in s.relations() {
                prop_assert!(r.a < r.b);
                prop_assert!(r.b <= s.len());
                prop_assert!(r.p + r.s as usize <= s.len());
            }
        }
    }

    #[test]
    fn insert_bookkeeping_shifts_consistently(p in 0usize..32, a in 33usize..64,
                                              span in 1usize..32, i in 0usize..128,
                                              n in 1usize..64) {
        let r = RelationField::new(a, a + span, p, 2, Endianness::Big).unwrap();
        let shifted = on_insert(r, i, n);
        // Span length grows exactly when the insert lands in [a, b].
        let grew = (shifted.b - shifted.a) as i64 - (r.b - r.a) as i64;
        if i >= r.a && i <= r.b {
            prop_assert_eq!(grew, n as i64);
        } else {
            prop_assert_eq!(grew, 0);
        }
        prop_assert!(shifted.p == r.p || shifted.p == r.p + n);
    }

    #[test]
    fn remove_bookkeeping_clamps(p in 0usize..32, a in 33usize..64,
                                 span in 1usize..32, i in 0usize..128,
                                 n in 1usize..64) {
        let r = RelationField::new(a, a + span, p, 2, Endianness::Big).unwrap();
        let shifted = on_remove(r, i, n);
        prop_assert!(shifted.p <= r.p && shifted.a <= r.a && shifted.b <= r.b);
        prop_assert!(shifted.a <= shifted.b);
        prop_assert!(shifted.p >= i.min(r.p));
    }
}
