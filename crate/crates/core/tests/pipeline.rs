use std::fs;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sketchforge_core::pipeline::synth::{random_valid_sketch, synthetic_corpus, unit_rectangle, SynthFamily};
use sketchforge_core::pipeline::{
    assign_split, compression_baseline, distributional_stats, evaluate_nll, ingest_and_filter, split_hash, uniform_baseline,
    write_corpus, IngestOptions, Split, SplitFractions,
};
use sketchforge_core::seqmodel::{Example, Stream, UniformModel};
use sketchforge_core::sketch::{Primitive, Sketch};
use sketchforge_core::tokenizer::{vocab, TokenTriple};

fn examples(family: SynthFamily, n: usize, seed: u64) -> Vec<Example> {
    synthetic_corpus(family, n, seed).iter().map(|s| Example::from_sketch(s).unwrap()).collect()
}

#[test]
fn ingest_filters_dedups_and_splits() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic_corpus(SynthFamily::Mixed, 100, 3);
    write_corpus(dir.path(), "s", &corpus).unwrap();
    // Five primitives: too few.
    let small = Sketch::from_primitives((0..5).map(|i| Primitive::line(0.0, i as f64, 1.0, i as f64)).collect());
    fs::write(dir.path().join("small.json"), small.to_json()).unwrap();
    // A scaled copy normalizes and quantizes to the same key.
    let dup = corpus[0].primitives().iter().map(|p| p.transformed(3.0, [1.0, -2.0])).collect::<Vec<_>>();
    let dup = Sketch::new(dup, corpus[0].constraints().to_vec()).unwrap();
    fs::write(dir.path().join("t_dup.json"), dup.to_json()).unwrap();
    fs::write(dir.path().join("broken.json"), "{\"primitives\": [").unwrap();
    let spline = r#"{"primitives":[{"kind":"spline","params":[0,0]}],"constraints":[]}"#;
    fs::write(dir.path().join("spline.json"), spline).unwrap();

    let opts = IngestOptions { seed: 7, ..IngestOptions::default() };
    let m = ingest_and_filter(dir.path(), &opts).unwrap();
    assert_eq!(m.entries.len(), 100);
    assert_eq!(m.errors.len(), 1);
    assert!(m.dropped.iter().any(|d| d.id == "small" && d.reason.contains("primitives")));
    assert!(m.dropped.iter().any(|d| d.id == "t_dup" && d.reason.starts_with("duplicate")));
    assert!(m.dropped.iter().any(|d| d.id == "spline"));

    // Split counts agree with an independent count of the hash thresholds.
    let oracle = |lo: f64, hi: f64| m.entries.iter().filter(|e| (lo..hi).contains(&split_hash(&e.id, 7))).count();
    assert_eq!(m.counts(), [oracle(0.0, 0.925), oracle(0.925, 0.95), oracle(0.95, 1.0)]);
    assert_eq!(m.counts().iter().sum::<usize>(), 100);

    // Idempotent and order-free.
    let again = ingest_and_filter(dir.path(), &opts).unwrap();
    assert_eq!(again, m);
    let manifest = sketchforge_core::pipeline::DatasetManifest::from_json(&m.to_json()).unwrap();
    assert_eq!(manifest, m);
    assert_eq!(m.load(Split::Test).unwrap().len(), m.counts()[2]);
}

#[test]
fn split_is_a_function_of_id_and_seed() {
    let f = SplitFractions::default();
    let ids: Vec<String> = (0..2000).map(|i| format!("sketch-{i}")).collect();
    let a: Vec<Split> = ids.iter().map(|i| assign_split(i, 1, &f)).collect();
    let b: Vec<Split> = ids.iter().rev().map(|i| assign_split(i, 1, &f)).collect::<Vec<_>>().into_iter().rev().collect();
    assert_eq!(a, b);
    let train = a.iter().filter(|&&s| s == Split::Train).count() as f64 / 2000.0;
    assert!((train - 0.925).abs() < 0.02, "train fraction {train}");
    let other: Vec<Split> = ids.iter().map(|i| assign_split(i, 2, &f)).collect();
    assert_ne!(a, other);
}

#[test]
fn uniform_model_matches_uniform_baseline() {
    for (stream, family) in [(Stream::Primitive, SynthFamily::Rectangles), (Stream::Constraint, SynthFamily::Mixed)] {
        let split = examples(family, 30, 4);
        let a = evaluate_nll(&UniformModel { stream }, &split).unwrap();
        let b = uniform_baseline(stream, &split).unwrap();
        assert_eq!(a, b);
    }
    let split = examples(SynthFamily::Rectangles, 10, 4);
    let r = uniform_baseline(Stream::Primitive, &split).unwrap();
    assert!((r.bits_per_token - 73f64.log2()).abs() < 1e-12);
    let tokens: usize = split.iter().map(|e| e.primitives.len() - 1).sum();
    assert!((r.bits_per_sketch * 10.0 - tokens as f64 * 73f64.log2()).abs() < 1e-9);
}

#[test]
fn lzma_baseline_limits() {
    let one = Example::from_sketch(&synthetic_corpus(SynthFamily::SlottedPlate, 1, 9)[0]).unwrap();
    let repeated = vec![one; 10_000];
    let c = compression_baseline(Stream::Primitive, &repeated).unwrap();
    let u = uniform_baseline(Stream::Primitive, &repeated[..1]).unwrap();
    assert!(c.bits_per_sketch < 0.01 * u.bits_per_sketch, "{} vs {}", c.bits_per_sketch, u.bits_per_sketch);

    let empty = compression_baseline(Stream::Primitive, &[]).unwrap();
    assert_eq!(empty.bits_per_sketch, 0.0);
}

#[test]
fn lzma_on_random_tokens_is_near_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let split: Vec<Example> = (0..2000)
        .map(|_| {
            let mut primitives = vec![TokenTriple::start()];
            primitives.extend((0..40).map(|_| TokenTriple::new(rng.random_range(0..vocab::PRIMITIVE_VOCAB), 0, 1)));
            Example { primitives, constraints: vec![], patches: None, primitive_count: 6 }
        })
        .collect();
    let c = compression_baseline(Stream::Primitive, &split).unwrap();
    let u = uniform_baseline(Stream::Primitive, &split).unwrap();
    let ratio = c.bits_per_sketch / u.bits_per_sketch;
    assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn stats_point_masses() {
    let rects = vec![unit_rectangle(); 20];
    let st = distributional_stats(&rects, &rects, 1000, 0).unwrap();
    let net = st.histogram("dof_net").unwrap();
    assert_eq!(net.values, vec![4]);
    assert_eq!(net.samples[0].freq, 1.0);
    assert_eq!((net.samples[0].lo, net.samples[0].hi), (1.0, 1.0));
    for h in &st.histograms {
        assert_eq!(h.samples.iter().map(|b| b.freq).collect::<Vec<_>>(), h.reference.iter().map(|b| b.freq).collect::<Vec<_>>());
    }

    let lines = vec![Sketch::from_primitives(vec![Primitive::line(0.0, 0.0, 1.0, 1.0)]); 5];
    let st = distributional_stats(&lines, &rects, 200, 0).unwrap();
    let p = st.histogram("primitives").unwrap();
    assert_eq!(p.values, vec![1, 4]);
    assert_eq!(p.samples[0].freq, 1.0);
    assert_eq!(p.samples[1].freq, 0.0);
    assert!(st.to_csv().lines().count() > 5);
    assert!(st.to_svg().starts_with("<svg"));
}

#[test]
fn bootstrap_band_brackets_frequency() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a: Vec<Sketch<f64>> = (0..200).map(|_| random_valid_sketch(&mut rng, 6)).collect();
    let st = distributional_stats(&a, &a[..50], 1000, 1).unwrap();
    for h in &st.histograms {
        for b in h.samples.iter().chain(&h.reference) {
            assert!(b.lo <= b.freq + 1e-12 && b.freq <= b.hi + 1e-12, "{}: {b:?}", h.feature);
        }
    }
}
