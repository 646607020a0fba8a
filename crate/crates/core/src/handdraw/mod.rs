//! Raster rendering of sketches: precise and simulated hand-drawn strokes,
//! affine augmentation, and patch extraction for image-conditioned models.

mod affine;
mod gp;
mod patch;
mod raster;
mod simulate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use affine::{apply_affine, apply_affine_transform, Affine, AffineAugment};
pub use gp::{matern32_kernel, matern32_path, MaternSampler};
pub use patch::{patchify, unpatchify, PATCH_COUNT, PATCH_LEN, PATCH_SIZE};
pub use raster::{rasterize, RasterImage, CANVAS};
pub use simulate::{render_variants, simulate_hand_drawing};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HanddrawError {
    #[error("covariance factorization failed even with jitter {jitter:e}")]
    NumericalFailure { jitter: f64 },
    #[error("expected a {expected_w}x{expected_h} image, got {w}x{h}")]
    BadShape { expected_w: usize, expected_h: usize, w: usize, h: usize },
    #[error("path needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid noise configuration: {0}")]
    InvalidConfig(String),
    #[error("png: {0}")]
    Png(String),
}

/// Parameters of the hand-drawing simulator. Pixel quantities refer to the
/// 128-pixel canvas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Matérn length-scale as a fraction of each stroke's length.
    pub matern_lengthscale_frac: f64,
    pub amplitude_px: f64,
    pub translate_sigma_px: f64,
    pub rotate_sigma_deg: f64,
    pub jitter: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            matern_lengthscale_frac: 0.25,
            amplitude_px: 1.5,
            translate_sigma_px: 2.0,
            rotate_sigma_deg: 2.0,
            jitter: 1e-8,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    /// No stroke wobble and no rigid displacement.
    pub fn noiseless() -> Self {
        Self { amplitude_px: 0.0, translate_sigma_px: 0.0, rotate_sigma_deg: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), HanddrawError> {
        let nonneg = [self.amplitude_px, self.translate_sigma_px, self.rotate_sigma_deg];
        if !(self.matern_lengthscale_frac > 0.0) || !self.matern_lengthscale_frac.is_finite() {
            return Err(HanddrawError::InvalidConfig("length-scale fraction must be positive".into()));
        }
        if nonneg.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(HanddrawError::InvalidConfig("amplitude and rigid noise must be non-negative".into()));
        }
        if !(self.jitter > 0.0) {
            return Err(HanddrawError::InvalidConfig("jitter must be positive".into()));
        }
        Ok(())
    }
}
