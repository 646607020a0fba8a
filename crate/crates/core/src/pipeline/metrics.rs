//! Likelihood metrics and the uniform and LZMA baselines.

use std::io::Write;

use serde::{Deserialize, Serialize};
use xz2::write::XzEncoder;

use crate::seqmodel::{Example, ModelError, NextTokenModel, Stream, UniformModel};

use super::PipelineError;

/// Likelihood summary of a split under one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sketches: usize,
    pub tokens: usize,
    pub bits_per_sketch: f64,
    pub bits_per_primitive: f64,
    pub bits_per_token: f64,
    pub token_accuracy: f64,
    /// Mean bits spent on the tokens of the `k`-th primitive (or constraint)
    /// over sketches that have one; index 0 collects the `Stop` token.
    pub per_position_bits: Vec<f64>,
    pub per_position_count: Vec<usize>,
}

impl EvalReport {
    pub fn per_position_csv(&self) -> String {
        let mut s = String::from("position,mean_bits,sketches\n");
        for (k, (b, n)) in self.per_position_bits.iter().zip(&self.per_position_count).enumerate() {
            s.push_str(&format!("{k},{b},{n}\n"));
        }
        s
    }
}

/// `ln Σ exp(l) − l[target]` in f64.
pub fn token_nll(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    lse - logits[target]
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Per-token NLL (nats), correctness, and position of one sketch.
struct Scored {
    nats: Vec<f64>,
    correct: Vec<bool>,
    positions: Vec<u32>,
    primitives: usize,
}

fn aggregate(scored: &[Scored]) -> Result<EvalReport, PipelineError> {
    if scored.is_empty() {
        return Err(PipelineError::Empty("evaluation split"));
    }
    let ln2 = std::f64::consts::LN_2;
    let mut total_bits = 0.0;
    let mut tokens = 0;
    let mut correct = 0;
    let mut primitives = 0;
    let mut pos_bits: Vec<f64> = Vec::new();
    let mut pos_count: Vec<usize> = Vec::new();
    for s in scored {
        let mut sketch_pos: Vec<f64> = Vec::new();
        for (&n, &p) in s.nats.iter().zip(&s.positions) {
            let b = n / ln2;
            total_bits += b;
            let p = p as usize;
            if sketch_pos.len() <= p {
                sketch_pos.resize(p + 1, 0.0);
            }
            sketch_pos[p] += b;
        }
        if pos_bits.len() < sketch_pos.len() {
            pos_bits.resize(sketch_pos.len(), 0.0);
            pos_count.resize(sketch_pos.len(), 0);
        }
        for (k, b) in sketch_pos.into_iter().enumerate() {
            pos_bits[k] += b;
            pos_count[k] += 1;
        }
        tokens += s.nats.len();
        correct += s.correct.iter().filter(|&&c| c).count();
        primitives += s.primitives;
    }
    let n = scored.len() as f64;
    let bits_per_sketch = total_bits / n;
    let mean_primitives = primitives as f64 / n;
    Ok(EvalReport {
        sketches: scored.len(),
        tokens,
        bits_per_sketch,
        bits_per_primitive: if mean_primitives > 0.0 { bits_per_sketch / mean_primitives } else { 0.0 },
        bits_per_token: if tokens > 0 { total_bits / tokens as f64 } else { 0.0 },
        token_accuracy: if tokens > 0 { correct as f64 / tokens as f64 } else { 0.0 },
        per_position_bits: pos_bits.iter().zip(&pos_count).map(|(&b, &c)| if c > 0 { b / c as f64 } else { 0.0 }).collect(),
        per_position_count: pos_count,
    })
}

/// Teacher-forced likelihood of every example under `model`.
pub fn evaluate_nll(model: &dyn NextTokenModel, split: &[Example]) -> Result<EvalReport, PipelineError> {
    let scored = split
        .iter()
        .map(|ex| {
            let s = model.step_logits(ex)?;
            Ok(Scored {
                nats: s.logits.iter().zip(&s.targets).map(|(l, &t)| token_nll(l, t)).collect(),
                correct: s.logits.iter().zip(&s.targets).map(|(l, &t)| argmax(l) == t).collect(),
                positions: s.positions,
                primitives: ex.primitive_count,
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    aggregate(&scored)
}

/// Every next token drawn with probability `1/V`, where `V` is the output
/// vocabulary size (the candidate count, for constraints).
pub fn uniform_baseline(stream: Stream, split: &[Example]) -> Result<EvalReport, PipelineError> {
    let model = UniformModel { stream };
    let scored = split
        .iter()
        .map(|ex| {
            let s = model.step_logits(ex)?;
            Ok(Scored {
                nats: s.logits.iter().map(|l| (l.len() as f64).ln()).collect(),
                correct: s.targets.iter().map(|&t| t == 0).collect(),
                positions: s.positions,
                primitives: ex.primitive_count,
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    aggregate(&scored)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub sketches: usize,
    pub raw_bytes: usize,
    pub compressed_bytes: usize,
    pub bits_per_sketch: f64,
    pub bits_per_primitive: f64,
    pub bits_per_token: f64,
}

/// LZMA (xz, preset 9 extreme) over the concatenated value tokens of the
/// whole split, one byte per token. An empty split reports zeros.
pub fn compression_baseline(stream: Stream, split: &[Example]) -> Result<CompressionReport, PipelineError> {
    let bytes: Vec<u8> = split
        .iter()
        .flat_map(|ex| match stream {
            Stream::Primitive => ex.primitives.iter(),
            Stream::Constraint => ex.constraints.iter(),
        })
        .map(|t| u8::try_from(t.value).map_err(|_| PipelineError::Compression(format!("token {} exceeds a byte", t.value))))
        .collect::<Result<_, _>>()?;
    if split.is_empty() {
        log::warn!("compression baseline of an empty split is defined as 0");
        return Ok(CompressionReport {
            sketches: 0,
            raw_bytes: 0,
            compressed_bytes: 0,
            bits_per_sketch: 0.0,
            bits_per_primitive: 0.0,
            bits_per_token: 0.0,
        });
    }
    let mut enc = XzEncoder::new(Vec::new(), 9 | 0x8000_0000);
    enc.write_all(&bytes).map_err(|e| PipelineError::Compression(e.to_string()))?;
    let out = enc.finish().map_err(|e| PipelineError::Compression(e.to_string()))?;
    let bits = (out.len() * 8) as f64;
    let primitives: usize = split.iter().map(|e| e.primitive_count).sum();
    Ok(CompressionReport {
        sketches: split.len(),
        raw_bytes: bytes.len(),
        compressed_bytes: out.len(),
        bits_per_sketch: bits / split.len() as f64,
        bits_per_primitive: if primitives > 0 { bits / primitives as f64 } else { 0.0 },
        bits_per_token: if bytes.is_empty() { 0.0 } else { bits / bytes.len() as f64 },
    })
}
