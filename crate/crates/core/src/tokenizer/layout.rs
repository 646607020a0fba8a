use std::collections::HashMap;

use crate::scalar::Scalar;
use crate::sketch::{PrimitiveKind, Reference, Sketch, Slot};

/// Offset of a slot's designated token relative to the primitive's type
/// token. The construction flag sits at offset 1, so point slots land on the
/// x coordinate of the point they name.
pub fn slot_offset(kind: PrimitiveKind, slot: Slot) -> Option<usize> {
    use PrimitiveKind::*;
    match (kind, slot) {
        (_, Slot::Whole) => Some(0),
        (Arc, Slot::First) | (Line, Slot::First) | (Circle, Slot::Center) => Some(2),
        (Arc, Slot::Center) | (Line, Slot::Second) => Some(4),
        (Arc, Slot::Second) => Some(6),
        _ => None,
    }
}

/// Flattened-index bookkeeping for a primitive sequence: where each
/// primitive's tokens start and which indices stand for which
/// (sub-)primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveLayout {
    kinds: Vec<PrimitiveKind>,
    type_index: Vec<usize>,
    designated: Vec<(usize, Reference)>,
    lookup: HashMap<usize, Reference>,
    len: usize,
}

impl PrimitiveLayout {
    pub fn new(kinds: &[PrimitiveKind]) -> Self {
        let mut type_index = Vec::with_capacity(kinds.len());
        let mut designated = Vec::new();
        let mut at = 1;
        for (i, &kind) in kinds.iter().enumerate() {
            type_index.push(at);
            for &slot in kind.slots() {
                let off = slot_offset(kind, slot).expect("every listed slot has an offset");
                designated.push((at + off, Reference::new(i, slot)));
            }
            at += 2 + kind.param_count();
        }
        let lookup = designated.iter().copied().collect();
        Self { kinds: kinds.to_vec(), type_index, designated, lookup, len: at + 1 }
    }

    pub fn of<T: Scalar>(s: &Sketch<T>) -> Self {
        let kinds: Vec<_> = s.primitives().iter().map(|p| p.kind()).collect();
        Self::new(&kinds)
    }

    /// Token count including `Start` and `Stop`.
    pub fn flattened_len(&self) -> usize {
        self.len
    }

    pub fn type_index(&self, primitive: usize) -> Option<usize> {
        self.type_index.get(primitive).copied()
    }

    pub fn index_of(&self, r: Reference) -> Option<usize> {
        let kind = *self.kinds.get(r.primitive)?;
        Some(self.type_index[r.primitive] + slot_offset(kind, r.slot)?)
    }

    pub fn resolve(&self, flat_index: usize) -> Option<Reference> {
        self.lookup.get(&flat_index).copied()
    }

    /// Designated `(flattened index, reference)` pairs in primitive order,
    /// slots in canonical order.
    pub fn designated(&self) -> &[(usize, Reference)] {
        &self.designated
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_for_line_point_line() {
        let l = PrimitiveLayout::new(&[PrimitiveKind::Line, PrimitiveKind::Point, PrimitiveKind::Line]);
        assert_eq!(l.flattened_len(), 2 + 6 + 4 + 6);
        assert_eq!(l.type_index(0), Some(1));
        assert_eq!(l.type_index(1), Some(7));
        assert_eq!(l.type_index(2), Some(11));
        assert_eq!(l.index_of(Reference::new(0, Slot::Second)), Some(5));
        assert_eq!(l.index_of(Reference::new(2, Slot::First)), Some(13));
        assert_eq!(l.resolve(2), None); // construction flag of the first line
        assert_eq!(l.designated().len(), 3 + 1 + 3);
    }

    #[test]
    fn resolution_is_a_bijection() {
        let kinds = [PrimitiveKind::Arc, PrimitiveKind::Circle, PrimitiveKind::Line, PrimitiveKind::Point];
        let l = PrimitiveLayout::new(&kinds);
        for &(idx, r) in l.designated() {
            assert_eq!(l.resolve(idx), Some(r));
            assert_eq!(l.index_of(r), Some(idx));
        }
        let mut idx: Vec<_> = l.designated().iter().map(|d| d.0).collect();
        idx.dedup();
        assert_eq!(idx.len(), 4 + 2 + 3 + 1);
    }
}
