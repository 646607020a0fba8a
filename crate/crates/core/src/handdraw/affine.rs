//! Random affine image augmentation with bilinear resampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::raster::RasterImage;

/// Bounds of the augmentation distribution; each component is drawn
/// uniformly from its symmetric range (scale from `[scale_min, scale_max]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineAugment {
    pub translate_px: f64,
    pub rotate_deg: f64,
    pub shear_deg: f64,
    pub scale_min: f64,
    pub scale_max: f64,
}

impl Default for AffineAugment {
    fn default() -> Self {
        Self { translate_px: 8.0, rotate_deg: 10.0, shear_deg: 10.0, scale_min: 0.8, scale_max: 1.2 }
    }
}

impl AffineAugment {
    pub fn identity() -> Self {
        Self { translate_px: 0.0, rotate_deg: 0.0, shear_deg: 0.0, scale_min: 1.0, scale_max: 1.0 }
    }

    /// Clamps every bound into the supported envelope.
    pub fn clamped(self) -> Self {
        let lo = self.scale_min.clamp(0.8, 1.2);
        Self {
            translate_px: self.translate_px.clamp(0.0, 8.0),
            rotate_deg: self.rotate_deg.clamp(0.0, 10.0),
            shear_deg: self.shear_deg.clamp(0.0, 10.0),
            scale_min: lo,
            scale_max: self.scale_max.clamp(lo, 1.2),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Affine {
        let b = self.clamped();
        let mut sym = |r: f64| r * (2.0 * rng.random::<f64>() - 1.0);
        let translate = [sym(b.translate_px), sym(b.translate_px)];
        let rotate_deg = sym(b.rotate_deg);
        let shear_deg = sym(b.shear_deg);
        let scale = b.scale_min + (b.scale_max - b.scale_min) * rng.random::<f64>();
        Affine { translate, rotate_deg, shear_deg, scale }
    }
}

/// Similarity-plus-shear about the image centre, then a translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub translate: [f64; 2],
    pub rotate_deg: f64,
    pub shear_deg: f64,
    pub scale: f64,
}

impl Affine {
    pub fn translation(dx: f64, dy: f64) -> Self {
        Self { translate: [dx, dy], rotate_deg: 0.0, shear_deg: 0.0, scale: 1.0 }
    }

    pub fn rotation(deg: f64) -> Self {
        Self { translate: [0.0, 0.0], rotate_deg: deg, shear_deg: 0.0, scale: 1.0 }
    }

    /// Linear part `R(θ)·Shear(φ)·scale` as row-major 2×2.
    fn linear(&self) -> [f64; 4] {
        let (s, c) = self.rotate_deg.to_radians().sin_cos();
        let k = self.shear_deg.to_radians().tan();
        let m = [c, c * k - s, s, s * k + c];
        m.map(|v| v * self.scale)
    }
}

pub fn apply_affine(img: &RasterImage, aug: &AffineAugment, rng: &mut impl Rng) -> RasterImage {
    apply_affine_transform(img, &aug.sample(rng))
}

/// Resamples `img` under `t`; pixels mapping outside the source are blank.
pub fn apply_affine_transform(img: &RasterImage, t: &Affine) -> RasterImage {
    let m = t.linear();
    let det = m[0] * m[3] - m[1] * m[2];
    let inv = [m[3] / det, -m[1] / det, -m[2] / det, m[0] / det];
    let cx = (img.width as f64 - 1.0) / 2.0;
    let cy = (img.height as f64 - 1.0) / 2.0;
    let mut out = RasterImage::blank(img.width, img.height);
    for y in 0..img.height {
        for x in 0..img.width {
            let dx = x as f64 - cx - t.translate[0];
            let dy = y as f64 - cy - t.translate[1];
            let sx = cx + inv[0] * dx + inv[1] * dy;
            let sy = cy + inv[2] * dx + inv[3] * dy;
            out.set(x, y, bilinear(img, sx, sy));
        }
    }
    out
}

fn bilinear(img: &RasterImage, x: f64, y: f64) -> f32 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = ((x - x0) as f32, (y - y0) as f32);
    let at = |xi: f64, yi: f64| -> f32 {
        if xi < 0.0 || yi < 0.0 || xi >= img.width as f64 || yi >= img.height as f64 {
            0.0
        } else {
            img.get(xi as usize, yi as usize)
        }
    };
    let top = if fx == 0.0 { at(x0, y0) } else { at(x0, y0) * (1.0 - fx) + at(x0 + 1.0, y0) * fx };
    if fy == 0.0 {
        return top;
    }
    let bottom = if fx == 0.0 { at(x0, y0 + 1.0) } else { at(x0, y0 + 1.0) * (1.0 - fx) + at(x0 + 1.0, y0 + 1.0) * fx };
    top * (1.0 - fy) + bottom * fy
}
