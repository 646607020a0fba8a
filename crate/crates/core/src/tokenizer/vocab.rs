//! Token tables (version 1).
//!
//! Primitive value tokens: 0 Pad, 1 Start, 2 Stop, 3 Arc, 4 Circle, 5 Line,
//! 6 Point, 7..=70 quantized bins 0..=63, 71 construction=false,
//! 72 construction=true.
//!
//! Constraint value tokens: 0 Pad, 1 Start, 2 Stop, 3..=15 constraint
//! types in [`ConstraintKind::ALL`] order, `16 + k` pointer to flattened
//! primitive-token index `k`.
//!
//! Primitive ID tokens: 0 marker, 1 type, 2 construction, then one code per
//! named parameter (x1 y1 x_mid y_mid x2 y2 x y r). Constraint ID tokens:
//! 0 marker, 1 type, 2 first reference, 3 second reference.

use crate::sketch::{ConstraintKind, PrimitiveKind};

pub const PAD: u32 = 0;
pub const START: u32 = 1;
pub const STOP: u32 = 2;

pub const PRIMITIVE_TYPE_BASE: u32 = 3;
pub const NUMERIC_BASE: u32 = 7;
pub const NUMERIC_BINS: u32 = 64;
pub const FLAG_FALSE: u32 = NUMERIC_BASE + NUMERIC_BINS;
pub const FLAG_TRUE: u32 = FLAG_FALSE + 1;
pub const PRIMITIVE_VOCAB: u32 = FLAG_TRUE + 1;

pub const CONSTRAINT_TYPE_BASE: u32 = 3;
pub const REFERENCE_BASE: u32 = CONSTRAINT_TYPE_BASE + ConstraintKind::ALL.len() as u32;

pub const MARKER_ID: u32 = 0;
pub const TYPE_ID: u32 = 1;
pub const CONSTRUCTION_ID: u32 = 2;

/// Parameter-type codes of the primitive stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum ParamId {
    X1 = 3,
    Y1 = 4,
    XMid = 5,
    YMid = 6,
    X2 = 7,
    Y2 = 8,
    X = 9,
    Y = 10,
    R = 11,
}

pub const PRIMITIVE_ID_VOCAB: u32 = 12;

pub const REF_ID_BASE: u32 = 2;
pub const CONSTRAINT_ID_VOCAB: u32 = 4;

pub fn param_ids(kind: PrimitiveKind) -> &'static [ParamId] {
    use ParamId::*;
    match kind {
        PrimitiveKind::Arc => &[X1, Y1, XMid, YMid, X2, Y2],
        PrimitiveKind::Circle => &[X, Y, R],
        PrimitiveKind::Line => &[X1, Y1, X2, Y2],
        PrimitiveKind::Point => &[X, Y],
    }
}

pub fn primitive_type_token(kind: PrimitiveKind) -> u32 {
    PRIMITIVE_TYPE_BASE + PrimitiveKind::ALL.iter().position(|&k| k == kind).unwrap() as u32
}

pub fn primitive_kind_of(value: u32) -> Option<PrimitiveKind> {
    value
        .checked_sub(PRIMITIVE_TYPE_BASE)
        .and_then(|i| PrimitiveKind::ALL.get(i as usize).copied())
}

pub fn constraint_type_token(kind: ConstraintKind) -> u32 {
    CONSTRAINT_TYPE_BASE + kind.ordinal() as u32
}

pub fn constraint_kind_of(value: u32) -> Option<ConstraintKind> {
    value
        .checked_sub(CONSTRAINT_TYPE_BASE)
        .and_then(|i| ConstraintKind::ALL.get(i as usize).copied())
}

pub fn is_numeric(value: u32) -> bool {
    (NUMERIC_BASE..NUMERIC_BASE + NUMERIC_BINS).contains(&value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bands_are_disjoint_and_exhaustive() {
        let mut seen = vec![0u8; PRIMITIVE_VOCAB as usize];
        for v in [PAD, START, STOP] {
            seen[v as usize] += 1;
        }
        for k in PrimitiveKind::ALL {
            seen[primitive_type_token(k) as usize] += 1;
        }
        for b in 0..NUMERIC_BINS {
            seen[(NUMERIC_BASE + b) as usize] += 1;
        }
        seen[FLAG_FALSE as usize] += 1;
        seen[FLAG_TRUE as usize] += 1;
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(PRIMITIVE_VOCAB, 73);
    }

    #[test]
    fn table_values() {
        assert_eq!(primitive_type_token(PrimitiveKind::Arc), 3);
        assert_eq!(primitive_type_token(PrimitiveKind::Point), 6);
        assert_eq!(constraint_type_token(ConstraintKind::Coincident), 3);
        assert_eq!(constraint_type_token(ConstraintKind::Horizontal), 7);
        assert_eq!(constraint_type_token(ConstraintKind::Vertical), 15);
        assert_eq!(REFERENCE_BASE, 16);
        for k in ConstraintKind::ALL {
            assert_eq!(constraint_kind_of(constraint_type_token(k)), Some(k));
        }
    }
}
