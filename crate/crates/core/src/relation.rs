//! Relation fields: a serialized integer at byte position `p` (width `s`,
//! endianness `e`) whose value equals the length of the input span `[a, b)`.
//!
//! Offsets are the special case `a = 0`: a field whose value is the length
//! of the prefix before the data it points at. The `RelationForm` taxonomy
//! is diagnostic only; inference and mutation work on `(a, b, p, s, e)`
//! directly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endianness {
    Big,
    Little,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RelationError {
    #[error("field-out-of-range: p={p} s={s} input_len={len}")]
    FieldOutOfRange { p: usize, s: u8, len: usize },
    #[error("value-overflow: {value} does not fit in {s} bytes")]
    ValueOverflow { value: u64, s: u8 },
    #[error("invalid span: a={a} must be < b={b}")]
    InvalidSpan { a: usize, b: usize },
    #[error("invalid field width {0}: must be one of 8, 4, 2, 1")]
    InvalidWidth(u8),
}

pub const FIELD_WIDTHS: [u8; 4] = [8, 4, 2, 1];

/// A discovered size/offset field: span `[a, b)` described by the `s`-byte
/// integer at `[p, p+s)` under endianness `e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationField {
    pub a: usize,
    pub b: usize,
    pub p: usize,
    pub s: u8,
    pub e: Endianness,
}

impl RelationField {
    pub fn new(a: usize, b: usize, p: usize, s: u8, e: Endianness) -> Result<Self, RelationError> {
        if !FIELD_WIDTHS.contains(&s) {
            return Err(RelationError::InvalidWidth(s));
        }
        if a >= b {
            return Err(RelationError::InvalidSpan { a, b });
        }
        Ok(Self { a, b, p, s, e })
    }

    /// Span length; at discovery time this equals the deserialized value.
    pub fn span_len(&self) -> usize {
        self.b - self.a
    }

    /// Byte range of the field itself.
    pub fn field_range(&self) -> std::ops::Range<usize> {
        self.p..self.p + self.s as usize
    }

    /// True when the relation still fits an input of `len` bytes.
    pub fn in_bounds(&self, len: usize) -> bool {
        self.a < self.b && self.b <= len && self.p + self.s as usize <= len
    }
}

/// Positional configurations of a relation field relative to its span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationForm {
    OffsetA,
    SizePostB,
    SizeInclusiveC,
    SizeIndirectD,
    SizeTotalE,
}

/// Classifies a relation under the precedence E, B, C, A, D.
pub fn classify_form(r: &RelationField, input_len: usize) -> RelationForm {
    let ps = r.p + r.s as usize;
    if r.a == 0 && r.b == input_len {
        RelationForm::SizeTotalE
    } else if r.a == ps {
        RelationForm::SizePostB
    } else if r.a != 0 && r.a <= r.p && ps <= r.b {
        RelationForm::SizeInclusiveC
    } else if r.a == 0 {
        RelationForm::OffsetA
    } else {
        RelationForm::SizeIndirectD
    }
}

/// Reads the `s`-byte unsigned integer at `p` under endianness `e`.
pub fn read_field(input: &[u8], p: usize, s: u8, e: Endianness) -> Result<u64, RelationError> {
    let width = s as usize;
    if p.checked_add(width).is_none_or(|end| end > input.len()) {
        return Err(RelationError::FieldOutOfRange { p, s, len: input.len() });
    }
    let bytes = &input[p..p + width];
    let mut v: u64 = 0;
    match e {
        Endianness::Big => {
            for &byte in bytes {
                v = (v << 8) | byte as u64;
            }
        }
        Endianness::Little => {
            for &byte in bytes.iter().rev() {
                v = (v << 8) | byte as u64;
            }
        }
    }
    Ok(v)
}

/// Serializes `v` into the field bytes in place. The inverse of [`read_field`].
pub fn write_field_in_place(
    input: &mut [u8],
    p: usize,
    s: u8,
    e: Endianness,
    v: u64,
) -> Result<(), RelationError> {
    let width = s as usize;
    if p.checked_add(width).is_none_or(|end| end > input.len()) {
        return Err(RelationError::FieldOutOfRange { p, s, len: input.len() });
    }
    if width < 8 && v >= 1u64 << (8 * width) {
        return Err(RelationError::ValueOverflow { value: v, s });
    }
    let bytes = &mut input[p..p + width];
    match e {
        Endianness::Big => {
            for (i, byte) in bytes.iter_mut().enumerate() {
                *byte = (v >> (8 * (width - 1 - i))) as u8;
            }
        }
        Endianness::Little => {
            for (i, byte) in bytes.iter_mut().enumerate() {
                *byte = (v >> (8 * i)) as u8;
            }
        }
    }
    Ok(())
}

/// Returns a copy of `input` with `v` serialized at `[p, p+s)`.
pub fn write_field(
    input: &[u8],
    p: usize,
    s: u8,
    e: Endianness,
    v: u64,
) -> Result<Vec<u8>, RelationError> {
    let mut out = input.to_vec();
    write_field_in_place(&mut out, p, s, e, v)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn read_examples() {
        assert_eq!(read_field(&[0x00, 0x14], 0, 2, Endianness::Big), Ok(20));
        assert_eq!(read_field(&[0x2c, 0x01, 0x00, 0x00], 0, 4, Endianness::Little), Ok(300));
        // A long-form length [82 03 12] approximated as the 2-byte big-endian
        // integer covering only the low-order bytes.
        assert_eq!(read_field(&[0x82, 0x03, 0x12, 0xaa], 1, 2, Endianness::Big), Ok(0x0312));
    }

    #[test]
    fn read_out_of_range() {
        assert_eq!(
            read_field(&[1, 2, 3], 2, 2, Endianness::Big),
            Err(RelationError::FieldOutOfRange { p: 2, s: 2, len: 3 })
        );
    }

    #[test]
    fn write_examples() {
        assert_eq!(write_field(&[0xff, 0xff], 0, 2, Endianness::Big, 20), Ok(vec![0x00, 0x14]));
        assert_eq!(
            write_field(&[0, 0], 0, 1, Endianness::Big, 300),
            Err(RelationError::ValueOverflow { value: 300, s: 1 })
        );
    }

    #[test]
    fn write_only_touches_field_bytes() {
        let out = write_field(&[9, 9, 9, 9], 1, 2, Endianness::Little, 0x0102).unwrap();
        assert_eq!(out, vec![9, 0x02, 0x01, 9]);
    }

    #[test]
    fn round_trip_all_widths() {
        for &s in &FIELD_WIDTHS {
            for &e in &[Endianness::Big, Endianness::Little] {
                for v in [0u64, 1, 0x7f, 0xff, 0x1234].into_iter().chain(
                    (s >= 4).then_some(0xdead_beef),
                ) {
                    if s < 8 && v >= 1 << (8 * s as u32) {
                        continue;
                    }
                    let buf = write_field(&[0u8; 16], 3, s, e, v).unwrap();
                    assert_eq!(read_field(&buf, 3, s, e), Ok(v), "s={s} e={e:?} v={v}");
                }
            }
        }
    }

    #[test]
    fn ctor_rejects_empty_span() {
        assert!(RelationField::new(5, 5, 0, 4, Endianness::Big).is_err());
        assert!(RelationField::new(6, 5, 0, 4, Endianness::Big).is_err());
        assert!(RelationField::new(0, 1, 0, 3, Endianness::Big).is_err());
    }

    #[test]
    fn classify_examples() {
        let r = RelationField::new(0, 24, 8, 4, Endianness::Big).unwrap();
        assert_eq!(classify_form(&r, 64), RelationForm::OffsetA);
        let r = RelationField::new(12, 40, 8, 4, Endianness::Big).unwrap();
        assert_eq!(classify_form(&r, 64), RelationForm::SizePostB);
        let r = RelationField::new(0, 64, 2, 4, Endianness::Big).unwrap();
        assert_eq!(classify_form(&r, 64), RelationForm::SizeTotalE);
        // Field inside the span, span not a prefix.
        let r = RelationField::new(4, 20, 6, 2, Endianness::Big).unwrap();
        assert_eq!(classify_form(&r, 64), RelationForm::SizeInclusiveC);
        // Arbitrary placement.
        let r = RelationField::new(30, 40, 2, 4, Endianness::Big).unwrap();
        assert_eq!(classify_form(&r, 64), RelationForm::SizeIndirectD);
    }

    #[test]
    fn relation_json_shape() {
        let r = RelationField::new(0, 347, 2, 4, Endianness::Big).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, r#"{"a":0,"b":347,"p":2,"s":4,"e":"big"}"#);
        let back: RelationField = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
