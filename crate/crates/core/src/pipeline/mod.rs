//! Dataset ingestion, synthetic corpora, metrics, and baselines.

mod dataset;
mod metrics;
mod stats;
pub mod synth;

use std::path::PathBuf;

use thiserror::Error;

use crate::handdraw::NoiseConfig;
use crate::seqmodel::{ModelError, TrainItem};
use crate::sketch::{Sketch, SketchError};
use crate::tokenizer::TokenError;

pub use dataset::{
    assign_split, ingest_and_filter, split_hash, write_corpus, DatasetManifest, Dropped, FileError, FilterConfig,
    IngestOptions, ManifestEntry, Split, SplitFractions,
};
pub use metrics::{compression_baseline, evaluate_nll, token_nll, uniform_baseline, CompressionReport, EvalReport};
pub use stats::{distributional_stats, Band, DistributionalStats, Histogram, FEATURES};

/// Number of pre-rendered hand-drawn variants per training sketch.
pub const DEFAULT_RENDERS: usize = 5;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("bad manifest: {0}")]
    Manifest(String),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("compression failed: {0}")]
    Compression(String),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Tokenized training items; with `renders > 0` each carries that many
/// hand-drawn renders (seeded per sketch from `noise.seed`).
pub fn train_items(sketches: &[Sketch<f64>], renders: usize, noise: &NoiseConfig) -> Result<Vec<TrainItem>, PipelineError> {
    sketches
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let item = TrainItem::new(s.clone())?;
            if renders == 0 {
                return Ok(item);
            }
            let cfg = NoiseConfig { seed: noise.seed.wrapping_add(i as u64 * 7919), ..*noise };
            Ok(item.with_renders(&cfg, renders)?)
        })
        .collect()
}
