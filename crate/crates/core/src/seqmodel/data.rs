//! Tokenized training and evaluation examples.

use rand::Rng;

use crate::handdraw::{apply_affine, patchify, render_variants, AffineAugment, NoiseConfig, RasterImage};
use crate::pipeline::synth::perturb;
use crate::sketch::Sketch;
use crate::tokenizer::{encode_constraints, encode_primitives, TokenError, TokenTriple};

use super::ModelError;

/// Which token stream a model predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Primitive,
    Constraint,
}

/// One normalized sketch as model input/target streams.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub primitives: Vec<TokenTriple>,
    pub constraints: Vec<TokenTriple>,
    /// Image patches for image-conditioned models.
    pub patches: Option<Vec<Vec<f32>>>,
    pub primitive_count: usize,
}

impl Example {
    /// Tokenizes a normalized sketch.
    pub fn from_sketch(s: &Sketch<f64>) -> Result<Self, TokenError> {
        Ok(Self {
            primitives: encode_primitives(s)?,
            constraints: encode_constraints(s)?,
            patches: None,
            primitive_count: s.primitives().len(),
        })
    }

    pub fn with_patches(mut self, patches: Vec<Vec<f32>>) -> Self {
        self.patches = Some(patches);
        self
    }
}

/// A training sketch with everything needed to re-derive noisy or
/// image-conditioned variants.
#[derive(Debug, Clone)]
pub struct TrainItem {
    pub sketch: Sketch<f64>,
    pub example: Example,
    /// Pre-rendered hand-drawn variants; one is drawn per use.
    pub renders: Vec<RasterImage>,
}

impl TrainItem {
    pub fn new(sketch: Sketch<f64>) -> Result<Self, TokenError> {
        let example = Example::from_sketch(&sketch)?;
        Ok(Self { sketch, example, renders: Vec::new() })
    }

    /// Adds `k` hand-drawn renders of the sketch.
    pub fn with_renders(mut self, cfg: &NoiseConfig, k: usize) -> Result<Self, ModelError> {
        self.renders = render_variants(&self.sketch, cfg, k)?;
        Ok(self)
    }

    /// The example as seen in one training step: primitive coordinates
    /// jittered by `noise_sigma` before quantization (when positive) and a
    /// randomly chosen render attached (when any exist), optionally under a
    /// random affine augmentation.
    pub fn draw(&self, noise_sigma: f64, augment: Option<&AffineAugment>, rng: &mut impl Rng) -> Example {
        let mut ex = if noise_sigma > 0.0 {
            let noisy = perturb(&self.sketch, noise_sigma, rng);
            let mut ex = self.example.clone();
            if let Ok(p) = encode_primitives(&noisy) {
                ex.primitives = p;
            }
            ex
        } else {
            self.example.clone()
        };
        if !self.renders.is_empty() {
            let img = &self.renders[rng.random_range(0..self.renders.len())];
            let img = match augment {
                Some(a) => apply_affine(img, a, rng),
                None => img.clone(),
            };
            ex.patches = Some(patchify(&img).expect("renders are canvas-sized"));
        }
        ex
    }
}
