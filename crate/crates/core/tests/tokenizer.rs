use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketchforge_core::pipeline::synth::random_valid_sketch;
use sketchforge_core::sketch::{Sketch, QUANT_BITS};
use sketchforge_core::tokenizer::{
    decode_constraints, decode_primitives, encode_constraints, encode_primitives, read_dump, write_dump, PrimitiveLayout,
    StreamKind, TokenTriple,
};

const HALF_BIN: f64 = 0.5 / (1u32 << QUANT_BITS) as f64;

/// Encode→decode both streams and compare against the original.
fn round_trip(s: &Sketch<f64>) -> Result<(), String> {
    let p = encode_primitives(s).map_err(|e| e.to_string())?;
    let c = encode_constraints(s).map_err(|e| e.to_string())?;
    let back: Sketch<f64> = decode_primitives(&p).map_err(|e| e.to_string())?;
    if back.primitives().len() != s.primitives().len() {
        return Err("primitive count".into());
    }
    for (i, (a, b)) in s.primitives().iter().zip(back.primitives()).enumerate() {
        if a.kind() != b.kind() || a.is_construction() != b.is_construction() {
            return Err(format!("primitive {i} kind/flag"));
        }
        for (x, y) in a.params().iter().zip(b.params()) {
            if (x - y).abs() > HALF_BIN + 1e-12 {
                return Err(format!("primitive {i}: {x} decoded as {y}"));
            }
        }
    }
    let cons = decode_constraints(&c, &back).map_err(|e| e.to_string())?;
    if cons != s.constraints() {
        return Err("constraints differ".into());
    }
    Ok(())
}

#[test]
fn thousand_random_sketches_round_trip() {
    let t = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..1000 {
        let s = random_valid_sketch(&mut rng, 16);
        if let Err(e) = round_trip(&s) {
            panic!("sketch {k}: {e}\n{}", s.to_json());
        }
    }
    assert!(t.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn candidate_count_matches_designated_slots() {
    use sketchforge_core::sketch::PrimitiveKind::*;
    let mut kinds = vec![];
    let mut last = 0;
    for (k, grow) in [(Line, 3), (Circle, 2), (Arc, 4), (Point, 1)] {
        kinds.push(k);
        let n = PrimitiveLayout::new(&kinds).designated().len();
        assert_eq!(n - last, grow, "{k:?}");
        last = n;
    }
}

#[test]
fn dumps_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = random_valid_sketch(&mut rng, 8);
    let p = encode_primitives(&s).unwrap();
    let (kind, back) = read_dump(&write_dump(StreamKind::Primitive, &p)).unwrap();
    assert_eq!(kind, Some(StreamKind::Primitive));
    assert_eq!(back, p);
}

fn token() -> impl Strategy<Value = TokenTriple> {
    (0u32..90, 0u32..14, 0u32..20).prop_map(|(v, i, p)| TokenTriple::new(v, i, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn decoders_never_panic(tokens in prop::collection::vec(token(), 0..60), seed in any::<u64>()) {
        let _ = decode_primitives::<f64>(&tokens);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_valid_sketch(&mut rng, 5);
        let _ = decode_constraints(&tokens, &s);
    }

    #[test]
    fn mutated_streams_error_or_decode(seed in any::<u64>(), at in any::<prop::sample::Index>(), t in token()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_valid_sketch(&mut rng, 6);
        let mut p = encode_primitives(&s).unwrap();
        let i = at.index(p.len());
        p[i] = t;
        // Either a structured error or a sketch whose re-encoding is stable.
        if let Ok(d) = decode_primitives::<f64>(&p) {
            let again = encode_primitives(&d).unwrap();
            let d2: Sketch<f64> = decode_primitives(&again).unwrap();
            prop_assert_eq!(encode_primitives(&d2).unwrap(), again);
        }
    }

    #[test]
    fn random_sketches_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_valid_sketch(&mut rng, 16);
        prop_assert!(round_trip(&s).is_ok());
    }
}
