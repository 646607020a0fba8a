//! Matérn-3/2 Gaussian-process paths sampled through a dense Cholesky
//! factor of the covariance.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Cholesky;

use super::{HanddrawError, NoiseConfig};

const MAX_JITTER: f64 = 1e-4;

/// `k(r) = a²(1 + √3 r/ℓ) exp(−√3 r/ℓ)`.
pub fn matern32_kernel(r: f64, amplitude: f64, lengthscale: f64) -> f64 {
    let s = 3f64.sqrt() * r.abs() / lengthscale;
    amplitude * amplitude * (1.0 + s) * (-s).exp()
}

/// Reusable unit-amplitude sampler at fixed inputs. Bridged samplers are
/// conditioned on the first and last input being exactly zero.
#[derive(Debug, Clone)]
pub struct MaternSampler {
    n: usize,
    bridged: bool,
    factor: Cholesky<f64>,
    /// Jitter that made the factorization succeed.
    pub jitter: f64,
}

impl MaternSampler {
    pub fn new(inputs: &[f64], lengthscale: f64, jitter: f64, bridged: bool) -> Result<Self, HanddrawError> {
        let n = inputs.len();
        if n < 2 {
            return Err(HanddrawError::TooFewSamples(n));
        }
        let k = |i: usize, j: usize| matern32_kernel(inputs[i] - inputs[j], 1.0, lengthscale);
        let free: Vec<usize> = if bridged { (1..n - 1).collect() } else { (0..n).collect() };
        let m = free.len();
        let mut cov = vec![0.0; m * m];
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                cov[a * m + b] = k(i, j);
            }
        }
        if bridged && m > 0 {
            // Schur complement against the two pinned endpoints.
            let ends = [0, n - 1];
            let kee = [k(0, 0), k(0, n - 1), k(n - 1, 0), k(n - 1, n - 1)];
            let det = kee[0] * kee[3] - kee[1] * kee[2];
            let inv = [kee[3] / det, -kee[1] / det, -kee[2] / det, kee[0] / det];
            let cross: Vec<[f64; 2]> = free.iter().map(|&i| [k(i, ends[0]), k(i, ends[1])]).collect();
            for a in 0..m {
                for b in 0..m {
                    let (u, v) = (cross[a], cross[b]);
                    let w = [inv[0] * v[0] + inv[1] * v[1], inv[2] * v[0] + inv[3] * v[1]];
                    cov[a * m + b] -= u[0] * w[0] + u[1] * w[1];
                }
            }
        }
        let mut jitter = jitter;
        loop {
            let mut a = cov.clone();
            for i in 0..m {
                a[i * m + i] += jitter;
            }
            if m == 0 {
                return Ok(Self { n, bridged, factor: Cholesky::factor(&[], 0).expect("empty"), jitter });
            }
            if let Some(factor) = Cholesky::factor(&a, m) {
                return Ok(Self { n, bridged, factor, jitter });
            }
            jitter *= 10.0;
            if jitter > MAX_JITTER {
                return Err(HanddrawError::NumericalFailure { jitter: jitter / 10.0 });
            }
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// One draw scaled by `amplitude`; amplitude 0 yields exact zeros.
    pub fn sample(&self, rng: &mut impl Rng, amplitude: f64) -> Vec<f64> {
        let m = self.factor.dim();
        let z: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        let free = self.factor.mul_lower(&z);
        let mut out = Vec::with_capacity(self.n);
        if self.bridged {
            out.push(0.0);
            out.extend(free.iter().map(|v| v * amplitude));
            out.push(0.0);
        } else {
            out.extend(free.iter().map(|v| v * amplitude));
        }
        out
    }
}

/// `n` offsets at equally spaced positions along a stroke of `length`
/// pixels, pinned to zero at both ends.
pub fn matern32_path(n: usize, length: f64, cfg: &NoiseConfig, rng: &mut impl Rng) -> Result<Vec<f64>, HanddrawError> {
    if n < 2 {
        return Err(HanddrawError::TooFewSamples(n));
    }
    let inputs: Vec<f64> = (0..n).map(|i| length * i as f64 / (n - 1) as f64).collect();
    let ell = (cfg.matern_lengthscale_frac * length).max(1e-9);
    let sampler = MaternSampler::new(&inputs, ell, cfg.jitter, true)?;
    Ok(sampler.sample(rng, cfg.amplitude_px))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_at_zero_is_variance() {
        assert_eq!(matern32_kernel(0.0, 1.5, 3.0), 2.25);
    }

    #[test]
    fn bridge_endpoints_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = matern32_path(50, 100.0, &NoiseConfig::default(), &mut rng).unwrap();
        assert_eq!(p.len(), 50);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[49], 0.0);
        assert!(p[25] != 0.0);
    }

    #[test]
    fn zero_amplitude_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = NoiseConfig { amplitude_px: 0.0, ..NoiseConfig::default() };
        assert!(matern32_path(20, 40.0, &cfg, &mut rng).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn covariance_is_persymmetric_on_uniform_grid() {
        let t: Vec<f64> = (0..7).map(|i| i as f64 * 0.5).collect();
        let k = |i: usize, j: usize| matern32_kernel(t[i] - t[j], 1.0, 1.3);
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(k(i, j), k(j, i));
                assert!((k(i, j) - k(6 - j, 6 - i)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dense_grid_needs_jitter_escalation_only_when_singular() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 1e-6).collect();
        let s = MaternSampler::new(&t, 10.0, 1e-8, false);
        match s {
            Ok(s) => assert!(s.jitter <= MAX_JITTER),
            Err(HanddrawError::NumericalFailure { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
}
