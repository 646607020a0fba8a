//! Stroke construction for precise and hand-drawn rendering. Both paths go
//! through the same sampling so the noiseless simulator reproduces the
//! precise raster exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::scalar::Scalar;
use crate::sketch::geom::{centroid, ArcGeometry};
use crate::sketch::{Primitive, PrimitiveKind, Sketch};

use super::gp::MaternSampler;
use super::raster::{to_pixel, RasterImage, PX_PER_UNIT};
use super::{HanddrawError, NoiseConfig};

pub(crate) enum Perturbation<'a> {
    None,
    Hand(&'a NoiseConfig, &'a mut ChaCha8Rng),
}

/// Samples per pixel of stroke length and the bounds on path resolution.
const SAMPLES_PER_PX: f64 = 0.5;
const MIN_SAMPLES: usize = 8;
const MAX_SAMPLES: usize = 160;

fn sample_count(length_px: f64) -> usize {
    ((length_px * SAMPLES_PER_PX).ceil() as usize + 1).clamp(MIN_SAMPLES, MAX_SAMPLES)
}

/// Simulated hand drawing of a normalized sketch; the sketch is not
/// modified and the result depends only on `s` and `cfg`.
pub fn simulate_hand_drawing<T: Scalar>(s: &Sketch<T>, cfg: &NoiseConfig) -> Result<RasterImage, HanddrawError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    render(&s.cast(), Perturbation::Hand(cfg, &mut rng))
}

/// `k` independent renders with seeds derived from `cfg.seed`.
pub fn render_variants<T: Scalar>(s: &Sketch<T>, cfg: &NoiseConfig, k: usize) -> Result<Vec<RasterImage>, HanddrawError> {
    (0..k as u64)
        .map(|i| {
            let seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i);
            simulate_hand_drawing(s, &NoiseConfig { seed, ..*cfg })
        })
        .collect()
}

pub(crate) fn render(s: &Sketch<f64>, mut noise: Perturbation<'_>) -> Result<RasterImage, HanddrawError> {
    let mut img = RasterImage::canvas();
    for p in s.primitives() {
        let (mut pts, dot) = stroke(p, &mut noise)?;
        if let Perturbation::Hand(cfg, rng) = &mut noise {
            rigid(&mut pts, to_pixel(centroid(p)), cfg, rng);
        }
        if dot {
            img.draw_dot(pts[0]);
        } else {
            img.draw_polyline(&pts, p.is_construction());
        }
    }
    Ok(img)
}

fn offsets(n: usize, length_px: f64, noise: &mut Perturbation<'_>) -> Result<Vec<f64>, HanddrawError> {
    match noise {
        Perturbation::None => Ok(vec![0.0; n]),
        Perturbation::Hand(cfg, rng) => {
            let inputs: Vec<f64> = (0..n).map(|i| length_px * i as f64 / (n - 1) as f64).collect();
            let ell = (cfg.matern_lengthscale_frac * length_px).max(1e-6);
            let sampler = MaternSampler::new(&inputs, ell, cfg.jitter, true)?;
            Ok(sampler.sample(*rng, cfg.amplitude_px))
        }
    }
}

/// Pixel-space polyline for a primitive; the flag marks a point primitive.
fn stroke(p: &Primitive<f64>, noise: &mut Perturbation<'_>) -> Result<(Vec<[f64; 2]>, bool), HanddrawError> {
    let q = p.params();
    Ok(match p.kind() {
        PrimitiveKind::Point => (vec![to_pixel([q[0], q[1]])], true),
        PrimitiveKind::Line => {
            let (a, b) = (to_pixel([q[0], q[1]]), to_pixel([q[2], q[3]]));
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len = (dx * dx + dy * dy).sqrt();
            let n = sample_count(len);
            let off = offsets(n, len, noise)?;
            let normal = if len > 0.0 { [-dy / len, dx / len] } else { [0.0, 0.0] };
            let pts = (0..n)
                .map(|i| {
                    let t = i as f64 / (n - 1) as f64;
                    [a[0] + dx * t + normal[0] * off[i], a[1] + dy * t + normal[1] * off[i]]
                })
                .collect();
            (pts, false)
        }
        PrimitiveKind::Circle => polar([q[0], q[1]], q[2], 0.0, std::f64::consts::TAU, noise)?,
        PrimitiveKind::Arc => {
            let g = ArcGeometry::from_points([q[0], q[1]], [q[2], q[3]], [q[4], q[5]])
                .expect("valid arcs have a circumcircle");
            polar(g.center, g.radius, g.start_angle, g.sweep, noise)?
        }
    })
}

/// Curve in polar form around `center` with a GP-modulated radius.
fn polar(
    center: [f64; 2],
    radius: f64,
    start: f64,
    sweep: f64,
    noise: &mut Perturbation<'_>,
) -> Result<(Vec<[f64; 2]>, bool), HanddrawError> {
    let c = to_pixel(center);
    let r = radius * PX_PER_UNIT;
    let len = r * sweep.abs();
    let n = sample_count(len);
    let off = offsets(n, len, noise)?;
    let pts = (0..n)
        .map(|i| {
            let a = start + sweep * i as f64 / (n - 1) as f64;
            let rr = r + off[i];
            // Pixel y points down, so the sine term flips sign.
            [c[0] + rr * a.cos(), c[1] - rr * a.sin()]
        })
        .collect();
    Ok((pts, false))
}

fn rigid(pts: &mut [[f64; 2]], pivot: [f64; 2], cfg: &NoiseConfig, rng: &mut ChaCha8Rng) {
    let shift = Normal::new(0.0, cfg.translate_sigma_px).expect("validated sigma");
    let turn = Normal::new(0.0, cfg.rotate_sigma_deg.to_radians()).expect("validated sigma");
    let t = [shift.sample(rng), shift.sample(rng)];
    let th: f64 = turn.sample(rng);
    let (c, s) = (th.cos() - 1.0, th.sin());
    for p in pts.iter_mut() {
        let (dx, dy) = (p[0] - pivot[0], p[1] - pivot[1]);
        // p + (R − I)(p − pivot) + t, exact when there is no motion.
        *p = [p[0] + (c * dx - s * dy) + t[0], p[1] + (s * dx + c * dy) + t[1]];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::handdraw::rasterize;
    use crate::pipeline::synth::{synthetic_corpus, SynthFamily};

    #[test]
    fn noiseless_simulation_is_precise_raster() {
        for s in synthetic_corpus(SynthFamily::Mixed, 6, 4) {
            let sim = simulate_hand_drawing(&s, &NoiseConfig { seed: 3, ..NoiseConfig::noiseless() }).unwrap();
            assert_eq!(sim, rasterize(&s));
        }
    }

    #[test]
    fn same_seed_same_image() {
        let s = &synthetic_corpus(SynthFamily::SlottedPlate, 1, 1)[0];
        let cfg = NoiseConfig { seed: 42, ..NoiseConfig::default() };
        let a = simulate_hand_drawing(s, &cfg).unwrap();
        let b = simulate_hand_drawing(s, &cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, rasterize(s));
    }

    #[test]
    fn construction_strokes_use_less_ink() {
        let solid = Sketch::from_primitives(vec![Primitive::circle(0.0, 0.0, 0.4).unwrap()]);
        let dashed = Sketch::from_primitives(vec![Primitive::circle(0.0, 0.0, 0.4).unwrap().construction(true)]);
        let ink = |i: RasterImage| i.pixels.iter().map(|&v| f64::from(v)).sum::<f64>();
        assert!(ink(rasterize(&dashed)) < 0.8 * ink(rasterize(&solid)));
    }
}
