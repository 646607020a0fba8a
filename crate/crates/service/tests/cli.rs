mod common;

use std::path::Path;

use sketchforge::cli::{run, EXIT_DATA, EXIT_NONCONVERGENT, EXIT_OK, EXIT_USAGE};
use sketchforge_core::pipeline::synth::{synthetic_corpus, unit_rectangle, SynthFamily};
use sketchforge_core::pipeline::write_corpus;

fn sf(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run(std::iter::once("sketchforge").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_and_usage_codes() {
    let (code, out) = sf(&["solve", "--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("Usage"), "{out}");
    assert_eq!(sf(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(sf(&["solve"]).0, EXIT_USAGE);
    assert_eq!(sf(&["eval", "--model", "m.ckpt", "--split", "nonsense"]).0, EXIT_USAGE);
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let rect = dir.path().join("rect.json");
    std::fs::write(&rect, unit_rectangle().to_json()).unwrap();
    let (code, out) = sf(&["solve", p(&rect)]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("\"converged\": true"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, common::contradiction_json().to_string()).unwrap();
    assert_eq!(sf(&["solve", p(&bad)]).0, EXIT_NONCONVERGENT);

    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(sf(&["solve", p(&bad)]).0, EXIT_DATA);
    assert_eq!(sf(&["solve", p(&dir.path().join("missing.json"))]).0, EXIT_DATA);
}

#[test]
fn hand_render_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let rect = dir.path().join("rect.json");
    std::fs::write(&rect, unit_rectangle().to_json()).unwrap();
    let (a, b, c) = (dir.path().join("a.png"), dir.path().join("b.png"), dir.path().join("c.png"));
    for (out, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        assert_eq!(sf(&["render", p(&rect), "--hand", "--seed", seed, "-o", p(out)]).0, EXIT_OK);
    }
    let read = |f: &Path| std::fs::read(f).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));

    let renders = dir.path().join("renders");
    assert_eq!(sf(&["simulate", p(&rect), "-o", p(&renders), "--count", "3", "--seed", "1"]).0, EXIT_OK);
    assert_eq!(std::fs::read_dir(&renders).unwrap().count(), 3);
}

#[test]
fn tokenize_prints_a_dump() {
    let dir = tempfile::tempdir().unwrap();
    let rect = dir.path().join("rect.json");
    std::fs::write(&rect, unit_rectangle().to_json()).unwrap();
    let (code, prims) = sf(&["tokenize", p(&rect)]);
    assert_eq!(code, EXIT_OK);
    let (_, cons) = sf(&["tokenize", p(&rect), "--stream", "constraint"]);
    assert!(prims.lines().count() > cons.lines().count());
}

#[test]
fn train_eval_sample_score() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("m.ckpt");
    let losses = dir.path().join("loss.csv");
    let (code, _) = sf(&[
        "train", "--size", "tiny", "--synthetic", "rectangles", "--count", "8", "--epochs", "1", "--batch-size", "4",
        "-o", p(&ckpt), "--loss-csv", p(&losses),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(std::fs::read_to_string(&losses).unwrap().starts_with("step"));

    let (code, csv) = sf(&["eval", "--model", p(&ckpt), "--synthetic", "rectangles", "--count", "4", "--split", "test"]);
    assert_eq!(code, EXIT_OK);
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for col in ["bits_per_primitive", "bits_per_sketch", "accuracy"] {
        assert!(header.contains(&col), "{header:?}");
    }
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row.len(), header.len());
    assert!(row.iter().all(|v| v.is_finite()));

    let (code, samples) = sf(&["sample", "--model", p(&ckpt), "--count", "3", "--seed", "4"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(samples.lines().count(), 3);
    assert_eq!(sf(&["sample", "--model", p(&ckpt), "--count", "3", "--seed", "4"]).1, samples);

    let rect = dir.path().join("rect.json");
    std::fs::write(&rect, unit_rectangle().to_json()).unwrap();
    let (code, scores) = sf(&["score", "--model", p(&ckpt), p(&rect)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(scores.lines().count(), 2);

    std::fs::write(&ckpt, b"garbage").unwrap();
    assert_eq!(sf(&["eval", "--model", p(&ckpt)]).0, EXIT_DATA);
}

#[test]
fn ingest_baseline_stats() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_corpus(&data, "s", &synthetic_corpus(SynthFamily::Mixed, 40, 2)).unwrap();
    let manifest = dir.path().join("manifest.json");
    let (code, out) = sf(&["ingest", p(&data), "-o", p(&manifest), "--seed", "1"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("kept"));

    let (code, csv) = sf(&["baseline", "--manifest", p(&manifest), "--split", "train"]);
    assert_eq!(code, EXIT_OK, "{csv}");
    assert_eq!(csv.lines().count(), 3);

    let stats = dir.path().join("stats.csv");
    let svg = dir.path().join("stats.svg");
    let (code, _) = sf(&[
        "stats", "--samples", p(&data), "--reference", p(&manifest), "--csv", p(&stats), "--svg", p(&svg), "--resamples", "50",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    assert_eq!(sf(&["ingest", p(&dir.path().join("absent")), "-o", p(&manifest)]).0, EXIT_DATA);
}
