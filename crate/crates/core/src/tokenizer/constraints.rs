use crate::scalar::Scalar;
use crate::sketch::{Constraint, Reference, Sketch};

use super::layout::PrimitiveLayout;
use super::vocab;
use super::{TokenError, TokenTriple};

/// Encodes the constraint sequence; references become pointers into the
/// sketch's flattened primitive-token sequence.
pub fn encode_constraints<T: Scalar>(s: &Sketch<T>) -> Result<Vec<TokenTriple>, TokenError> {
    let layout = PrimitiveLayout::of(s);
    let mut out = Vec::with_capacity(2 + 3 * s.constraints().len());
    out.push(TokenTriple::start());
    for (ci, c) in s.constraints().iter().enumerate() {
        let pos = ci as u32 + 1;
        out.push(TokenTriple::new(vocab::constraint_type_token(c.kind()), vocab::TYPE_ID, pos));
        for (j, r) in c.refs().iter().enumerate() {
            let k = layout.index_of(*r).ok_or_else(|| TokenError::InvalidReference {
                index: out.len(),
                detail: format!("primitive {} has no slot {}", r.primitive, r.slot),
            })?;
            out.push(TokenTriple::new(vocab::REFERENCE_BASE + k as u32, vocab::REF_ID_BASE + j as u32, pos));
        }
    }
    out.push(TokenTriple::stop());
    Ok(out)
}

/// Inverse of [`encode_constraints`], resolving pointers against the
/// primitive layout of `s`.
pub fn decode_constraints<T: Scalar>(tokens: &[TokenTriple], s: &Sketch<T>) -> Result<Vec<Constraint>, TokenError> {
    let layout = PrimitiveLayout::of(s);
    match tokens.first() {
        Some(t) if t.value == vocab::START && t.position == 0 => {}
        _ => return Err(TokenError::malformed(0, "expected Start")),
    }
    let mut out = Vec::new();
    let mut i = 1;
    loop {
        let t = tokens.get(i).ok_or_else(|| TokenError::malformed(tokens.len(), "truncated sequence (no Stop)"))?;
        if t.value == vocab::STOP {
            if t.position != 0 {
                return Err(TokenError::malformed(i, "Stop must carry position 0"));
            }
            return Ok(out);
        }
        let pos = out.len() as u32 + 1;
        let kind = vocab::constraint_kind_of(t.value)
            .ok_or_else(|| TokenError::malformed(i, format!("expected constraint type or Stop, got value {}", t.value)))?;
        if t.id != vocab::TYPE_ID || t.position != pos {
            return Err(TokenError::malformed(i, format!("type token must have id {} and position {pos}", vocab::TYPE_ID)));
        }
        let head = i;
        i += 1;
        let mut refs: Vec<Reference> = Vec::with_capacity(2);
        while let Some(r) = tokens.get(i).filter(|r| r.value >= vocab::REFERENCE_BASE) {
            let expected_id = vocab::REF_ID_BASE + refs.len() as u32;
            if refs.len() == 2 || r.id != expected_id || r.position != pos {
                return Err(TokenError::malformed(i, format!("unexpected reference token (id {}, position {})", r.id, r.position)));
            }
            let k = (r.value - vocab::REFERENCE_BASE) as usize;
            let target = layout.resolve(k).ok_or_else(|| TokenError::InvalidReference {
                index: i,
                detail: format!("flattened index {k} is not a designated (sub-)primitive token"),
            })?;
            refs.push(target);
            i += 1;
        }
        let c = Constraint::new(kind, refs).map_err(|e| TokenError::malformed(head, e.to_string()))?;
        out.push(c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::{ConstraintKind, Primitive, Slot};

    fn two_lines() -> Sketch<f64> {
        Sketch::from_primitives(vec![Primitive::line(-0.5, 0.0, 0.0, 0.0), Primitive::line(0.0, 0.0, 0.0, 0.5)])
    }

    #[test]
    fn no_constraints() {
        let t = encode_constraints(&two_lines()).unwrap();
        assert_eq!(t, vec![TokenTriple::start(), TokenTriple::stop()]);
        assert!(decode_constraints(&t, &two_lines()).unwrap().is_empty());
    }

    #[test]
    fn coincident_pointers() {
        let c = Constraint::binary(ConstraintKind::Coincident, Reference::new(0, Slot::Second), Reference::new(1, Slot::First))
            .unwrap();
        let s = two_lines().with_constraints(vec![c.clone()]).unwrap();
        let t = encode_constraints(&s).unwrap();
        // line0 tokens occupy flattened 1..=6 (second endpoint x at 5),
        // line1 occupies 7..=12 (first endpoint x at 9).
        assert_eq!(
            t,
            vec![
                TokenTriple::start(),
                TokenTriple::new(3, 1, 1),
                TokenTriple::new(16 + 5, 2, 1),
                TokenTriple::new(16 + 9, 3, 1),
                TokenTriple::stop(),
            ]
        );
        assert_eq!(decode_constraints(&t, &s).unwrap(), vec![c]);
    }

    #[test]
    fn unary_horizontal() {
        let c = Constraint::unary(ConstraintKind::Horizontal, Reference::whole(0)).unwrap();
        let s = two_lines().with_constraints(vec![c]).unwrap();
        let t = encode_constraints(&s).unwrap();
        assert_eq!(t[1], TokenTriple::new(7, 1, 1));
        assert_eq!(t[2], TokenTriple::new(16 + 1, 2, 1));
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn pointer_to_flag_is_invalid() {
        let s = two_lines();
        let t = vec![
            TokenTriple::start(),
            TokenTriple::new(7, 1, 1),
            TokenTriple::new(16 + 2, 2, 1),
            TokenTriple::stop(),
        ];
        assert!(matches!(decode_constraints(&t, &s), Err(TokenError::InvalidReference { index: 2, .. })));
    }

    #[test]
    fn arity_violation_is_malformed() {
        let s = two_lines();
        let t = vec![
            TokenTriple::start(),
            TokenTriple::new(vocab::constraint_type_token(ConstraintKind::Parallel), 1, 1),
            TokenTriple::new(16 + 1, 2, 1),
            TokenTriple::stop(),
        ];
        assert!(matches!(decode_constraints(&t, &s), Err(TokenError::MalformedSequence { index: 1, .. })));
    }
}
