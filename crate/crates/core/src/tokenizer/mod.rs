//! Flattened `(value, id, position)` token codecs for the primitive stream
//! and the constraint stream.
//!
//! Primitive layout, per primitive at position `p` (1-based):
//! `type, construction flag, param…` with every triple carrying `p`. The
//! stream is framed by `Start` and `Stop`, both at position 0.
//!
//! Constraint layout, per constraint at position `c`: `type, ref[, ref]`,
//! where a reference value `16 + k` points at flattened primitive-token
//! index `k` (index 0 is the primitive stream's `Start`).

mod constraints;
mod dump;
mod layout;
mod primitives;
pub mod vocab;

use thiserror::Error;

use crate::sketch::SketchError;

pub use constraints::{decode_constraints, encode_constraints};
pub use dump::{read_dump, write_dump, StreamKind, DUMP_VERSION};
pub use layout::PrimitiveLayout;
pub use primitives::{decode_primitives, encode_primitives, encode_primitives_with, DEFAULT_MAX_PRIMITIVES};

/// One sequence element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct TokenTriple {
    pub value: u32,
    pub id: u32,
    pub position: u32,
}

impl TokenTriple {
    pub const fn new(value: u32, id: u32, position: u32) -> Self {
        Self { value, id, position }
    }

    pub const fn start() -> Self {
        Self::new(vocab::START, vocab::MARKER_ID, 0)
    }

    pub const fn stop() -> Self {
        Self::new(vocab::STOP, vocab::MARKER_ID, 0)
    }

    pub const fn pad() -> Self {
        Self::new(vocab::PAD, vocab::MARKER_ID, 0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TokenError {
    #[error("sequence too long: {len} exceeds the configured maximum {max}")]
    TooLong { len: usize, max: usize },
    #[error("malformed sequence at token {index}: {reason}")]
    MalformedSequence { index: usize, reason: String },
    #[error("invalid reference at token {index}: {detail}")]
    InvalidReference { index: usize, detail: String },
    #[error(transparent)]
    Sketch(#[from] SketchError),
}

impl TokenError {
    pub(crate) fn malformed(index: usize, reason: impl Into<String>) -> Self {
        Self::MalformedSequence { index, reason: reason.into() }
    }
}
