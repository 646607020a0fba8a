use crate::scalar::Scalar;
use crate::sketch::{dequantize, is_radius_param, quantize, Primitive, Sketch, QUANT_BITS};

use super::vocab::{self, param_ids};
use super::{TokenError, TokenTriple};

pub const DEFAULT_MAX_PRIMITIVES: usize = 16;

/// Encodes the primitive sequence of a normalized sketch.
pub fn encode_primitives<T: Scalar>(s: &Sketch<T>) -> Result<Vec<TokenTriple>, TokenError> {
    encode_primitives_with(s, DEFAULT_MAX_PRIMITIVES)
}

pub fn encode_primitives_with<T: Scalar>(s: &Sketch<T>, max_primitives: usize) -> Result<Vec<TokenTriple>, TokenError> {
    let n = s.primitives().len();
    if n > max_primitives {
        return Err(TokenError::TooLong { len: n, max: max_primitives });
    }
    let mut out = Vec::with_capacity(2 + 8 * n);
    out.push(TokenTriple::start());
    for (i, p) in s.primitives().iter().enumerate() {
        out.extend(encode_one(p, i as u32 + 1));
    }
    out.push(TokenTriple::stop());
    Ok(out)
}

fn encode_one<T: Scalar>(p: &Primitive<T>, pos: u32) -> impl Iterator<Item = TokenTriple> + '_ {
    let kind = p.kind();
    let head = [
        TokenTriple::new(vocab::primitive_type_token(kind), vocab::TYPE_ID, pos),
        TokenTriple::new(
            if p.is_construction() { vocab::FLAG_TRUE } else { vocab::FLAG_FALSE },
            vocab::CONSTRUCTION_ID,
            pos,
        ),
    ];
    let params = p.params().iter().zip(param_ids(kind)).enumerate().map(move |(i, (&v, &id))| {
        let bin = quantize(v, QUANT_BITS, is_radius_param(kind, i));
        TokenTriple::new(vocab::NUMERIC_BASE + bin, id as u32, pos)
    });
    head.into_iter().chain(params)
}

/// Inverse of [`encode_primitives`]; parameters come back as bin centres.
/// Decoding stops at the first `Stop`.
pub fn decode_primitives<T: Scalar>(tokens: &[TokenTriple]) -> Result<Sketch<T>, TokenError> {
    let mut it = tokens.iter().enumerate();
    match it.next() {
        Some((_, t)) if t.value == vocab::START && t.position == 0 => {}
        Some(_) => return Err(TokenError::malformed(0, "expected Start")),
        None => return Err(TokenError::malformed(0, "empty sequence")),
    }
    let mut prims = Vec::new();
    let truncated = || TokenError::malformed(tokens.len(), "truncated sequence (no Stop)");
    loop {
        let (i, t) = it.next().ok_or_else(truncated)?;
        if t.value == vocab::STOP {
            if t.position != 0 {
                return Err(TokenError::malformed(i, "Stop must carry position 0"));
            }
            return Ok(Sketch::from_primitives(prims));
        }
        let pos = prims.len() as u32 + 1;
        let kind = vocab::primitive_kind_of(t.value)
            .ok_or_else(|| TokenError::malformed(i, format!("expected primitive type or Stop, got value {}", t.value)))?;
        check_slot(i, t, vocab::TYPE_ID, pos)?;

        let (j, flag) = it.next().ok_or_else(truncated)?;
        check_slot(j, flag, vocab::CONSTRUCTION_ID, pos)?;
        let construction = match flag.value {
            vocab::FLAG_TRUE => true,
            vocab::FLAG_FALSE => false,
            v => return Err(TokenError::malformed(j, format!("expected construction flag, got value {v}"))),
        };

        let mut params = Vec::with_capacity(kind.param_count());
        for (pi, &id) in param_ids(kind).iter().enumerate() {
            let (k, tok) = it.next().ok_or_else(truncated)?;
            check_slot(k, tok, id as u32, pos)?;
            if !vocab::is_numeric(tok.value) {
                return Err(TokenError::malformed(k, format!("expected numeric value, got {}", tok.value)));
            }
            params.push(dequantize::<T>(tok.value - vocab::NUMERIC_BASE, QUANT_BITS, is_radius_param(kind, pi)));
        }
        let prim = Primitive::new(kind, params, construction)
            .map_err(|e| TokenError::malformed(i, format!("invalid {kind}: {e}")))?;
        prims.push(prim);
    }
}

fn check_slot(index: usize, t: &TokenTriple, id: u32, pos: u32) -> Result<(), TokenError> {
    if t.id != id {
        return Err(TokenError::malformed(index, format!("expected id {id}, got {}", t.id)));
    }
    if t.position != pos {
        return Err(TokenError::malformed(index, format!("expected position {pos}, got {}", t.position)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::PrimitiveKind;

    #[test]
    fn empty_sketch() {
        let t = encode_primitives(&Sketch::<f64>::default()).unwrap();
        assert_eq!(t, vec![TokenTriple::start(), TokenTriple::stop()]);
        let s: Sketch<f64> = decode_primitives(&t).unwrap();
        assert!(s.primitives().is_empty());
    }

    #[test]
    fn point_at_origin() {
        let s = Sketch::from_primitives(vec![Primitive::point(0.0f64, 0.0)]);
        let t = encode_primitives(&s).unwrap();
        assert_eq!(
            t,
            vec![
                TokenTriple::start(),
                TokenTriple::new(6, 1, 1),
                TokenTriple::new(71, 2, 1),
                TokenTriple::new(7 + 32, vocab::ParamId::X as u32, 1),
                TokenTriple::new(7 + 32, vocab::ParamId::Y as u32, 1),
                TokenTriple::stop(),
            ]
        );
    }

    #[test]
    fn line_point_line_positions() {
        let s = Sketch::from_primitives(vec![
            Primitive::line(-0.5f64, 0.0, 0.5, 0.0),
            Primitive::point(0.1, 0.1),
            Primitive::line(0.0, -0.5, 0.0, 0.5),
        ]);
        let t = encode_primitives(&s).unwrap();
        let pos: Vec<u32> = t.iter().map(|t| t.position).collect();
        assert_eq!(pos, vec![0, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 3, 3, 0]);
    }

    #[test]
    fn too_many_primitives() {
        let prims = (0..17).map(|i| Primitive::point(i as f64 / 40.0, 0.0)).collect();
        let err = encode_primitives(&Sketch::from_primitives(prims)).unwrap_err();
        assert_eq!(err, TokenError::TooLong { len: 17, max: 16 });
    }

    #[test]
    fn type_where_coordinate_expected() {
        let s = Sketch::from_primitives(vec![Primitive::line(-0.5f64, 0.0, 0.5, 0.0)]);
        let mut t = encode_primitives(&s).unwrap();
        t[4].value = vocab::primitive_type_token(PrimitiveKind::Circle);
        let err = decode_primitives::<f64>(&t).unwrap_err();
        assert!(matches!(err, TokenError::MalformedSequence { index: 4, .. }), "{err:?}");
    }

    #[test]
    fn truncated_and_bad_positions() {
        let s = Sketch::from_primitives(vec![Primitive::line(-0.5f64, 0.0, 0.5, 0.0), Primitive::point(0.0, 0.0)]);
        let t = encode_primitives(&s).unwrap();
        let err = decode_primitives::<f64>(&t[..5]).unwrap_err();
        assert!(matches!(err, TokenError::MalformedSequence { index: 5, .. }));
        let mut bad = t.clone();
        for tok in &mut bad[7..11] {
            tok.position = 3;
        }
        assert!(matches!(decode_primitives::<f64>(&bad), Err(TokenError::MalformedSequence { index: 7, .. })));
    }

    #[test]
    fn decoding_stops_at_first_stop() {
        let mut t = encode_primitives(&Sketch::from_primitives(vec![Primitive::point(0.0f64, 0.0)])).unwrap();
        t.push(TokenTriple::new(99, 9, 9));
        let s: Sketch<f64> = decode_primitives(&t).unwrap();
        assert_eq!(s.primitives().len(), 1);
    }
}
