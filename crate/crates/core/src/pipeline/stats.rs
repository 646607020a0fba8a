//! Count and degrees-of-freedom histograms of two sketch collections with
//! bootstrap confidence bands.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sketch::{degrees_of_freedom, Sketch};

use super::PipelineError;

pub const FEATURES: [&str; 5] = ["primitives", "constraints", "dof_total", "dof_removed", "dof_net"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub freq: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub feature: String,
    /// Integer support shared by both collections, ascending.
    pub values: Vec<u32>,
    pub samples: Vec<Band>,
    pub reference: Vec<Band>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionalStats {
    pub resamples: usize,
    pub histograms: Vec<Histogram>,
}

fn features<T: crate::scalar::Scalar>(s: &Sketch<T>) -> [u32; 5] {
    let d = degrees_of_freedom(s);
    [s.primitives().len() as u32, s.constraints().len() as u32, d.total, d.removed, d.net]
}

fn bands(data: &[u32], support: &[u32], resamples: usize, rng: &mut ChaCha8Rng) -> Vec<Band> {
    let n = data.len();
    let index = |v: u32| support.binary_search(&v).expect("value in support");
    let freq_of = |sample: &mut dyn Iterator<Item = u32>| {
        let mut c = vec![0usize; support.len()];
        for v in sample {
            c[index(v)] += 1;
        }
        c.into_iter().map(|c| c as f64 / n as f64).collect::<Vec<f64>>()
    };
    let point = freq_of(&mut data.iter().copied());
    let mut boot: Vec<Vec<f64>> = vec![Vec::with_capacity(resamples); support.len()];
    for _ in 0..resamples {
        let f = freq_of(&mut (0..n).map(|_| data[rng.random_range(0..n)]));
        for (b, v) in boot.iter_mut().zip(f) {
            b.push(v);
        }
    }
    point
        .into_iter()
        .zip(boot)
        .map(|(freq, mut b)| {
            if b.is_empty() {
                return Band { freq, lo: freq, hi: freq };
            }
            b.sort_by(f64::total_cmp);
            let q = |p: f64| b[((p * (b.len() - 1) as f64).round() as usize).min(b.len() - 1)];
            Band { freq, lo: q(0.025), hi: q(0.975) }
        })
        .collect()
}

/// Histograms of primitive count, constraint count, and total / removed /
/// net DOF for `samples` against `reference`, with 95% percentile-bootstrap
/// bands from `resamples` resamples.
pub fn distributional_stats(
    samples: &[Sketch<f64>],
    reference: &[Sketch<f64>],
    resamples: usize,
    seed: u64,
) -> Result<DistributionalStats, PipelineError> {
    if samples.is_empty() || reference.is_empty() {
        return Err(PipelineError::Empty("statistics collection"));
    }
    let fs: Vec<[u32; 5]> = samples.iter().map(features).collect();
    let fr: Vec<[u32; 5]> = reference.iter().map(features).collect();
    let histograms = FEATURES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let a: Vec<u32> = fs.iter().map(|f| f[k]).collect();
            let b: Vec<u32> = fr.iter().map(|f| f[k]).collect();
            let mut support: Vec<u32> = a.iter().chain(&b).copied().collect();
            support.sort_unstable();
            support.dedup();
            // Each band gets its own stream so the two sides are independent
            // of each other's sizes.
            let mut ra = ChaCha8Rng::seed_from_u64(seed ^ (2 * k as u64));
            let mut rb = ChaCha8Rng::seed_from_u64(seed ^ (2 * k as u64 + 1));
            Histogram {
                feature: name.to_string(),
                samples: bands(&a, &support, resamples, &mut ra),
                reference: bands(&b, &support, resamples, &mut rb),
                values: support,
            }
        })
        .collect();
    Ok(DistributionalStats { resamples, histograms })
}

impl DistributionalStats {
    pub fn histogram(&self, feature: &str) -> Option<&Histogram> {
        self.histograms.iter().find(|h| h.feature == feature)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature,value,sample_freq,sample_lo,sample_hi,reference_freq,reference_lo,reference_hi\n");
        for h in &self.histograms {
            for ((v, a), b) in h.values.iter().zip(&h.samples).zip(&h.reference) {
                let _ = writeln!(s, "{},{v},{},{},{},{},{},{}", h.feature, a.freq, a.lo, a.hi, b.freq, b.lo, b.hi);
            }
        }
        s
    }

    /// One panel per feature: paired bars (samples, reference) with
    /// bootstrap whiskers.
    pub fn to_svg(&self) -> String {
        let (pw, ph, pad) = (320.0, 180.0, 30.0);
        let width = pw * self.histograms.len() as f64;
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"10\">\n",
            ph + 20.0
        );
        for (i, h) in self.histograms.iter().enumerate() {
            let x0 = i as f64 * pw;
            let top = h.samples.iter().chain(&h.reference).map(|b| b.hi.max(b.freq)).fold(0.0, f64::max).max(1e-9);
            let n = h.values.len().max(1) as f64;
            let slot = (pw - 2.0 * pad) / n;
            let y = |f: f64| pad + (ph - 2.0 * pad) * (1.0 - f / top);
            let _ = writeln!(s, "<text x=\"{}\" y=\"14\">{}</text>", x0 + pad, h.feature);
            for (j, v) in h.values.iter().enumerate() {
                let bx = x0 + pad + j as f64 * slot;
                for (side, (b, colour)) in [(&h.samples[j], "#d9534f"), (&h.reference[j], "#5b7fbf")].into_iter().enumerate() {
                    let x = bx + side as f64 * slot / 2.0;
                    let w = (slot / 2.0 - 1.0).max(0.5);
                    let _ = writeln!(
                        s,
                        "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"{w:.2}\" height=\"{:.2}\" fill=\"{colour}\"/>",
                        y(b.freq),
                        y(0.0) - y(b.freq)
                    );
                    let cx = x + w / 2.0;
                    let _ = writeln!(s, "<line x1=\"{cx:.2}\" x2=\"{cx:.2}\" y1=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", y(b.lo), y(b.hi));
                }
                if h.values.len() <= 20 || j % 5 == 0 {
                    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\">{v}</text>", bx, ph - pad + 12.0);
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}
