use std::fmt;

use sha2::{Digest, Sha256};

use crate::scalar::Scalar;

use super::{is_radius_param, quantize, QUANT_BITS};
use super::{normalize_sketch, Sketch, SketchError};

/// Stable content hash of a normalized, quantized primitive sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DedupKey(pub [u8; 32]);

impl fmt::Display for DedupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|b| write!(f, "{b:02x}"))
    }
}

/// Hashes the ordered `(kind, construction flag, quantized params)` sequence
/// after normalization. Constraints do not participate; the construction
/// flag does.
pub fn dedup_key<T: Scalar>(s: &Sketch<T>) -> Result<DedupKey, SketchError> {
    let (n, _) = normalize_sketch(s)?;
    let mut h = Sha256::new();
    h.update(b"sketch-dedup-v1");
    for p in n.primitives() {
        h.update([p.kind() as u8, p.is_construction() as u8, p.params().len() as u8]);
        let bins: Vec<u8> = p
            .params()
            .iter()
            .enumerate()
            .map(|(i, &v)| quantize(v, QUANT_BITS, is_radius_param(p.kind(), i)) as u8)
            .collect();
        h.update(&bins);
    }
    Ok(DedupKey(h.finalize().into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::Primitive;

    fn sample() -> Sketch<f64> {
        Sketch::from_primitives(vec![
            Primitive::line(0.0, 0.0, 3.0, 0.0),
            Primitive::circle(1.0, 1.0, 0.4).unwrap(),
            Primitive::point(2.0, 2.0),
        ])
    }

    #[test]
    fn deterministic() {
        assert_eq!(dedup_key(&sample()).unwrap(), dedup_key(&sample()).unwrap());
    }

    #[test]
    fn reordering_changes_key() {
        let s = sample();
        let mut prims = s.primitives().to_vec();
        prims.swap(0, 2);
        assert_ne!(dedup_key(&s).unwrap(), dedup_key(&Sketch::from_primitives(prims)).unwrap());
    }

    #[test]
    fn similarity_invariant() {
        let s = sample();
        let moved = s.transformed(3.7, [-12.0, 40.5]);
        assert_eq!(dedup_key(&s).unwrap(), dedup_key(&moved).unwrap());
    }

    #[test]
    fn construction_flag_participates() {
        let s = sample();
        let mut prims = s.primitives().to_vec();
        prims[1] = prims[1].clone().construction(true);
        assert_ne!(dedup_key(&s).unwrap(), dedup_key(&Sketch::from_primitives(prims)).unwrap());
    }

    #[test]
    fn visible_perturbation_changes_key() {
        let s = sample();
        let mut prims = s.primitives().to_vec();
        prims[2] = Primitive::point(2.0, 2.3);
        assert_ne!(dedup_key(&s).unwrap(), dedup_key(&Sketch::from_primitives(prims)).unwrap());
    }

    #[test]
    fn constraints_ignored() {
        use crate::sketch::{Constraint, ConstraintKind, Reference};
        let s = sample();
        let c = s
            .with_constraints(vec![Constraint::unary(ConstraintKind::Horizontal, Reference::whole(0)).unwrap()])
            .unwrap();
        assert_eq!(dedup_key(&s).unwrap(), dedup_key(&c).unwrap());
    }
}
