//! Nucleus sampling and autoregressive generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::handdraw::{patchify, RasterImage};
use crate::scalar::Scalar;
use crate::sketch::Sketch;
use crate::tokenizer::{decode_constraints, decode_primitives, encode_primitives, vocab, TokenTriple};

use super::data::Example;
use super::grammar::{ConstraintChoice, ConstraintCursor, PrimitiveCursor};
use super::model::{candidate_value, layout_of};
use super::{ModelError, ModelKind, SequenceModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub nucleus_p: f64,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn primitives(seed: u64) -> Self {
        Self { nucleus_p: 0.9, seed }
    }

    pub fn constraints(seed: u64) -> Self {
        Self { nucleus_p: 0.7, seed }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.nucleus_p > 0.0 && self.nucleus_p <= 1.0) {
            return Err(ModelError::Config(format!("nucleus_p {} not in (0, 1]", self.nucleus_p)));
        }
        Ok(())
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|v| v / sum).collect()
}

/// Indices kept by top-p truncation, in (probability desc, index asc) order,
/// with their renormalized probabilities.
pub(crate) fn nucleus(logits: &[f64], p: f64) -> Vec<(usize, f64)> {
    let probs = softmax(logits);
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
    let mut kept = Vec::new();
    let mut cum = 0.0;
    for i in order {
        kept.push((i, probs[i]));
        cum += probs[i];
        if cum >= p {
            break;
        }
    }
    let total: f64 = kept.iter().map(|k| k.1).sum();
    kept.into_iter().map(|(i, q)| (i, q / total)).collect()
}

/// Draws one index from the top-p truncated softmax of `logits`.
pub fn nucleus_sample(logits: &[f64], cfg: &SamplerConfig, rng: &mut impl Rng) -> usize {
    let kept = nucleus(logits, cfg.nucleus_p);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(i, q) in &kept {
        acc += q;
        if u < acc {
            return i;
        }
    }
    kept.last().map_or(0, |k| k.0)
}

/// Conditioning for generation.
#[derive(Debug, Clone)]
pub enum Context {
    None,
    /// Fixed primitive-token prefix, starting with `Start`.
    Primer(Vec<TokenTriple>),
    Image(RasterImage),
}

/// One sampled sequence. `error` holds the reason when the tokens do not
/// decode to a valid sketch.
#[derive(Debug, Clone)]
pub struct Generated {
    pub tokens: Vec<TokenTriple>,
    pub sketch: Option<Sketch<f64>>,
    pub error: Option<String>,
}

impl Generated {
    pub fn is_valid(&self) -> bool {
        self.sketch.is_some()
    }
}

fn last_row<T: Scalar>(m: &SequenceModel<T>, ex: &Example) -> Result<Vec<f64>, ModelError> {
    let l = m.logits(ex)?;
    Ok(l.row(l.rows - 1).iter().map(|v| v.to_f64_lossy()).collect())
}

/// Samples a primitive sequence from a primitive or image-conditional model.
pub fn generate<T: Scalar>(model: &SequenceModel<T>, context: &Context, cfg: &SamplerConfig) -> Result<Generated, ModelError> {
    cfg.validate()?;
    let mut ex = Example { primitives: vec![TokenTriple::start()], constraints: Vec::new(), patches: None, primitive_count: 0 };
    match (model.kind(), context) {
        (ModelKind::Primitive, Context::None) => {}
        (ModelKind::Primitive, Context::Primer(p)) => ex.primitives = p.clone(),
        (ModelKind::ImageConditional, Context::Image(img)) => ex.patches = Some(patchify(img)?),
        (k, _) => return Err(ModelError::ContextMismatch(k)),
    }
    let mut cursor = match PrimitiveCursor::replay(&ex.primitives) {
        Some(c) => c,
        None => {
            return Ok(Generated {
                tokens: ex.primitives,
                sketch: None,
                error: Some("primer is not a well-formed primitive prefix".into()),
            })
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut error = None;
    while !cursor.done {
        if ex.primitives.len() >= model.config.max_seq_len {
            error = Some(format!("no Stop within max_seq_len {}", model.config.max_seq_len));
            break;
        }
        let logits = last_row(model, &ex)?;
        let v = nucleus_sample(&logits, cfg, &mut rng) as u32;
        match cursor.advance(v) {
            Some(t) if (t.position as usize) <= model.config.max_primitives => ex.primitives.push(t),
            Some(_) => {
                error = Some(format!("more than {} primitives", model.config.max_primitives));
                break;
            }
            None => {
                error = Some(format!("illegal token {v} at index {}", ex.primitives.len()));
                break;
            }
        }
    }
    let sketch = if error.is_none() {
        match decode_primitives::<f64>(&ex.primitives) {
            Ok(s) => Some(s),
            Err(e) => {
                error = Some(e.to_string());
                None
            }
        }
    } else {
        None
    };
    Ok(Generated { tokens: ex.primitives, sketch, error })
}

/// Samples constraints for the primitives of `sketch` from a constraint
/// model. The returned sketch carries the input primitives and the sampled
/// constraints; `tokens` is the constraint stream.
pub fn autoconstrain<T: Scalar>(model: &SequenceModel<T>, sketch: &Sketch<f64>, cfg: &SamplerConfig) -> Result<Generated, ModelError> {
    if model.kind() != ModelKind::Constraint {
        return Err(ModelError::ContextMismatch(model.kind()));
    }
    cfg.validate()?;
    let bare = Sketch::from_primitives(sketch.primitives().to_vec());
    let primitives = encode_primitives(&bare)?;
    let layout = layout_of(&primitives)?;
    let mut ex = Example { primitives, constraints: vec![TokenTriple::start()], patches: None, primitive_count: bare.primitives().len() };
    let mut cursor = ConstraintCursor::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut error = None;
    while !cursor.done {
        if ex.constraints.len() >= model.config.max_seq_len {
            error = Some(format!("no Stop within max_seq_len {}", model.config.max_seq_len));
            break;
        }
        let logits = last_row(model, &ex)?;
        let i = nucleus_sample(&logits, cfg, &mut rng);
        let Some(v) = candidate_value(i, &layout) else { break };
        let choice = if v == vocab::STOP {
            ConstraintChoice::Stop
        } else if v < vocab::REFERENCE_BASE {
            ConstraintChoice::Type(v)
        } else {
            ConstraintChoice::Pointer(v)
        };
        match cursor.advance(choice) {
            Some(t) if (t.position as usize) <= model.config.max_constraints => ex.constraints.push(t),
            Some(_) => {
                error = Some(format!("more than {} constraints", model.config.max_constraints));
                break;
            }
            None => {
                error = Some(format!("illegal token {v} at index {}", ex.constraints.len()));
                break;
            }
        }
    }
    let sketch = if error.is_none() {
        match decode_constraints(&ex.constraints, &bare).map_err(|e| e.to_string()).and_then(|c| bare.with_constraints(c).map_err(|e| e.to_string())) {
            Ok(s) => Some(s),
            Err(e) => {
                error = Some(e);
                None
            }
        }
    } else {
        None
    };
    Ok(Generated { tokens: ex.constraints, sketch, error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominant_token_always_chosen() {
        let probs = [0.95f64, 0.03, 0.02];
        let logits: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
        let cfg = SamplerConfig { nucleus_p: 0.9, seed: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| nucleus_sample(&logits, &cfg, &mut rng) == 0));
    }

    #[test]
    fn uniform_ties_break_by_index() {
        let kept = nucleus(&[0.0; 4], 0.5);
        assert_eq!(kept.iter().map(|k| k.0).collect::<Vec<_>>(), vec![0, 1]);
        assert!(kept.iter().all(|k| (k.1 - 0.5).abs() < 1e-12));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let s = softmax(&[1000.0, -3.0, 2.5, 0.0]);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
