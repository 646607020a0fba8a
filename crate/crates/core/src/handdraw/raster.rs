//! Grayscale canvas and anti-aliased stroke drawing.

use crate::scalar::Scalar;
use crate::sketch::Sketch;

use super::simulate::{render, Perturbation};
use super::HanddrawError;

/// Side length of the model-input canvas in pixels.
pub const CANVAS: usize = 128;

/// Pixels per normalized sketch unit; leaves an 8-pixel margin so affine
/// augmentation rarely pushes ink out of frame.
pub(crate) const PX_PER_UNIT: f64 = (CANVAS - 16) as f64;

const DASH_ON: f64 = 4.0;
const DASH_PERIOD: f64 = 7.0;

/// Ink intensity per pixel, row-major, 0 = blank paper, 1 = full ink.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f32>,
}

impl RasterImage {
    pub fn blank(width: usize, height: usize) -> Self {
        Self { width, height, pixels: vec![0.0; width * height] }
    }

    pub fn canvas() -> Self {
        Self::blank(CANVAS, CANVAS)
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.pixels[y * self.width + x] = v;
    }

    fn ink(&mut self, x: usize, y: usize, v: f32) {
        let p = &mut self.pixels[y * self.width + x];
        if v > *p {
            *p = v;
        }
    }

    pub fn mean_abs_diff(&self, other: &Self) -> f64 {
        let sum: f64 = self.pixels.iter().zip(&other.pixels).map(|(a, b)| f64::from((a - b).abs())).sum();
        sum / self.pixels.len().max(1) as f64
    }

    /// 8-bit grayscale PNG with dark ink on white paper.
    pub fn to_png(&self) -> Result<Vec<u8>, HanddrawError> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().map_err(|e| HanddrawError::Png(e.to_string()))?;
            let bytes: Vec<u8> = self.pixels.iter().map(|&v| (255.0 * (1.0 - v.clamp(0.0, 1.0))).round() as u8).collect();
            w.write_image_data(&bytes).map_err(|e| HanddrawError::Png(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, HanddrawError> {
        let dec = png::Decoder::new(std::io::Cursor::new(bytes));
        let mut reader = dec.read_info().map_err(|e| HanddrawError::Png(e.to_string()))?;
        let mut buf = vec![0; reader.output_buffer_size()];
        let info = reader.next_frame(&mut buf).map_err(|e| HanddrawError::Png(e.to_string()))?;
        if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
            return Err(HanddrawError::Png(format!("unsupported format {:?}/{:?}", info.color_type, info.bit_depth)));
        }
        let (w, h) = (info.width as usize, info.height as usize);
        let pixels = buf[..w * h].iter().map(|&b| 1.0 - f32::from(b) / 255.0).collect();
        Ok(Self { width: w, height: h, pixels })
    }

    pub(crate) fn draw_polyline(&mut self, pts: &[[f64; 2]], dashed: bool) {
        if !dashed {
            for w in pts.windows(2) {
                self.draw_segment(w[0], w[1]);
            }
            return;
        }
        let mut travelled = 0.0;
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            if len == 0.0 {
                continue;
            }
            let lerp = |s: f64| [a[0] + (b[0] - a[0]) * s / len, a[1] + (b[1] - a[1]) * s / len];
            let mut s = 0.0;
            while s < len {
                let phase = (travelled + s) % DASH_PERIOD;
                let (on, step) = if phase < DASH_ON { (true, DASH_ON - phase) } else { (false, DASH_PERIOD - phase) };
                let e = (s + step).min(len);
                if on {
                    self.draw_segment(lerp(s), lerp(e));
                }
                s = e;
            }
            travelled += len;
        }
    }

    /// 1-pixel pen: intensity falls off linearly with distance to the
    /// segment and vanishes one pixel away.
    pub(crate) fn draw_segment(&mut self, a: [f64; 2], b: [f64; 2]) {
        self.splat(a, b, 1.0);
    }

    pub(crate) fn draw_dot(&mut self, c: [f64; 2]) {
        self.splat(c, c, 1.5);
    }

    fn splat(&mut self, a: [f64; 2], b: [f64; 2], reach: f64) {
        if !(a.iter().chain(&b).all(|v| v.is_finite())) {
            return;
        }
        let lo_x = (a[0].min(b[0]) - reach).floor().max(0.0) as usize;
        let lo_y = (a[1].min(b[1]) - reach).floor().max(0.0) as usize;
        let hi_x = (a[0].max(b[0]) + reach).ceil().min(self.width as f64 - 1.0);
        let hi_y = (a[1].max(b[1]) + reach).ceil().min(self.height as f64 - 1.0);
        if hi_x < 0.0 || hi_y < 0.0 {
            return;
        }
        let (d0, d1) = (b[0] - a[0], b[1] - a[1]);
        let len2 = d0 * d0 + d1 * d1;
        for y in lo_y..=hi_y as usize {
            for x in lo_x..=hi_x as usize {
                let (px, py) = (x as f64 - a[0], y as f64 - a[1]);
                let t = if len2 > 0.0 { ((px * d0 + py * d1) / len2).clamp(0.0, 1.0) } else { 0.0 };
                let d = ((px - t * d0).powi(2) + (py - t * d1).powi(2)).sqrt();
                let v = (reach - d).clamp(0.0, 1.0);
                if v > 0.0 {
                    self.ink(x, y, v as f32);
                }
            }
        }
    }
}

/// Maps normalized sketch coordinates (y up) to pixel coordinates (y down).
pub(crate) fn to_pixel(p: [f64; 2]) -> [f64; 2] {
    let c = (CANVAS as f64 - 1.0) / 2.0;
    [c + p[0] * PX_PER_UNIT, c - p[1] * PX_PER_UNIT]
}

/// Precise rendering of a normalized sketch.
pub fn rasterize<T: Scalar>(s: &Sketch<T>) -> RasterImage {
    render(&s.cast(), Perturbation::None).expect("noiseless rendering performs no factorization")
}
