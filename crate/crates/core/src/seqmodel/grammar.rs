//! Token-by-token grammar of both streams, used during sampling to attach
//! the id and position to a sampled value.

use crate::sketch::PrimitiveKind;
use crate::tokenizer::vocab::{self, param_ids};
use crate::tokenizer::TokenTriple;

/// Where a well-formed primitive prefix currently stands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct PrimitiveCursor {
    count: u32,
    kind: Option<PrimitiveKind>,
    /// Tokens of the current primitive emitted so far (type = 1).
    emitted: usize,
    pub done: bool,
}

impl PrimitiveCursor {
    /// Replays a prefix starting with `Start`; `None` if it is malformed.
    pub fn replay(tokens: &[TokenTriple]) -> Option<Self> {
        if tokens.first()? != &TokenTriple::start() {
            return None;
        }
        let mut c = Self { count: 0, kind: None, emitted: 0, done: false };
        for t in &tokens[1..] {
            if c.advance(t.value)? != *t {
                return None;
            }
        }
        Some(c)
    }

    /// Applies a sampled value; returns the full triple or `None` when the
    /// value is not legal here.
    pub fn advance(&mut self, value: u32) -> Option<TokenTriple> {
        if self.done {
            return None;
        }
        match self.kind {
            None => {
                if value == vocab::STOP {
                    self.done = true;
                    return Some(TokenTriple::stop());
                }
                let kind = vocab::primitive_kind_of(value)?;
                self.count += 1;
                self.kind = Some(kind);
                self.emitted = 1;
                Some(TokenTriple::new(value, vocab::TYPE_ID, self.count))
            }
            Some(kind) => {
                let t = if self.emitted == 1 {
                    if value != vocab::FLAG_TRUE && value != vocab::FLAG_FALSE {
                        return None;
                    }
                    TokenTriple::new(value, vocab::CONSTRUCTION_ID, self.count)
                } else {
                    if !vocab::is_numeric(value) {
                        return None;
                    }
                    TokenTriple::new(value, param_ids(kind)[self.emitted - 2] as u32, self.count)
                };
                self.emitted += 1;
                if self.emitted == 2 + kind.param_count() {
                    self.kind = None;
                }
                Some(t)
            }
        }
    }
}

/// Where a constraint prefix stands: number of constraints so far and the
/// references emitted for the current one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConstraintCursor {
    count: u32,
    refs: Option<u32>,
    pub done: bool,
}

pub(crate) enum ConstraintChoice {
    Stop,
    Type(u32),
    Pointer(u32),
}

impl ConstraintCursor {
    pub fn new() -> Self {
        Self { count: 0, refs: None, done: false }
    }

    pub fn advance(&mut self, choice: ConstraintChoice) -> Option<TokenTriple> {
        if self.done {
            return None;
        }
        match choice {
            ConstraintChoice::Stop => {
                if self.refs == Some(0) {
                    return None;
                }
                self.done = true;
                Some(TokenTriple::stop())
            }
            ConstraintChoice::Type(v) => {
                if self.refs == Some(0) {
                    return None;
                }
                self.count += 1;
                self.refs = Some(0);
                Some(TokenTriple::new(v, vocab::TYPE_ID, self.count))
            }
            ConstraintChoice::Pointer(v) => {
                let n = self.refs?;
                if n >= 2 {
                    return None;
                }
                self.refs = Some(n + 1);
                Some(TokenTriple::new(v, vocab::REF_ID_BASE + n, self.count))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::synth::{synthetic_corpus, SynthFamily};
    use crate::tokenizer::encode_primitives;

    #[test]
    fn replay_accepts_encoder_output() {
        for s in synthetic_corpus(SynthFamily::Mixed, 5, 1) {
            let t = encode_primitives(&s).unwrap();
            let c = PrimitiveCursor::replay(&t).unwrap();
            assert!(c.done);
            assert_eq!(c.count as usize, s.primitives().len());
            assert!(PrimitiveCursor::replay(&t[..t.len() - 1]).is_some_and(|c| !c.done));
        }
    }

    #[test]
    fn rejects_numeric_in_type_slot() {
        let mut c = PrimitiveCursor::replay(&[TokenTriple::start()]).unwrap();
        assert!(c.advance(vocab::NUMERIC_BASE).is_none());
    }
}
