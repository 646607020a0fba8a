//! Non-overlapping square patches in row-major grid order.

use super::raster::{RasterImage, CANVAS};
use super::HanddrawError;

pub const PATCH_SIZE: usize = 16;
pub const PATCH_LEN: usize = PATCH_SIZE * PATCH_SIZE;
const GRID: usize = CANVAS / PATCH_SIZE;
pub const PATCH_COUNT: usize = GRID * GRID;

/// Splits a 128×128 image into 64 flattened 16×16 patches.
pub fn patchify(img: &RasterImage) -> Result<Vec<Vec<f32>>, HanddrawError> {
    if img.width != CANVAS || img.height != CANVAS || img.pixels.len() != CANVAS * CANVAS {
        return Err(HanddrawError::BadShape { expected_w: CANVAS, expected_h: CANVAS, w: img.width, h: img.height });
    }
    Ok((0..PATCH_COUNT)
        .map(|p| {
            let (gy, gx) = (p / GRID, p % GRID);
            let mut v = Vec::with_capacity(PATCH_LEN);
            for y in 0..PATCH_SIZE {
                let row = (gy * PATCH_SIZE + y) * CANVAS + gx * PATCH_SIZE;
                v.extend_from_slice(&img.pixels[row..row + PATCH_SIZE]);
            }
            v
        })
        .collect())
}

/// Inverse of [`patchify`].
pub fn unpatchify(patches: &[Vec<f32>]) -> Result<RasterImage, HanddrawError> {
    if patches.len() != PATCH_COUNT || patches.iter().any(|p| p.len() != PATCH_LEN) {
        return Err(HanddrawError::BadShape { expected_w: PATCH_COUNT, expected_h: PATCH_LEN, w: patches.len(), h: 0 });
    }
    let mut img = RasterImage::canvas();
    for (p, patch) in patches.iter().enumerate() {
        let (gy, gx) = (p / GRID, p % GRID);
        for y in 0..PATCH_SIZE {
            let row = (gy * PATCH_SIZE + y) * CANVAS + gx * PATCH_SIZE;
            img.pixels[row..row + PATCH_SIZE].copy_from_slice(&patch[y * PATCH_SIZE..(y + 1) * PATCH_SIZE]);
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lit_pixel_lands_in_patch_nine() {
        let mut img = RasterImage::canvas();
        img.set(17, 17, 1.0);
        let p = patchify(&img).unwrap();
        let lit: Vec<usize> = (0..PATCH_COUNT).filter(|&i| p[i].iter().any(|&v| v != 0.0)).collect();
        assert_eq!(lit, vec![9]);
        assert_eq!(p[9][17], 1.0);
    }

    #[test]
    fn constant_image() {
        let img = RasterImage { width: 128, height: 128, pixels: vec![0.25; 128 * 128] };
        let p = patchify(&img).unwrap();
        assert_eq!(p.len() * p[0].len(), 128 * 128);
        assert!(p.iter().flatten().all(|&v| v == 0.25));
    }

    #[test]
    fn rejects_wrong_shape_and_inverts() {
        assert!(matches!(patchify(&RasterImage::blank(64, 64)), Err(HanddrawError::BadShape { .. })));
        let mut img = RasterImage::canvas();
        for (i, v) in img.pixels.iter_mut().enumerate() {
            *v = (i % 97) as f32 / 97.0;
        }
        assert_eq!(unpatchify(&patchify(&img).unwrap()).unwrap(), img);
    }
}
