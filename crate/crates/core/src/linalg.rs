//! Dense symmetric positive-definite factorization used by the
//! Levenberg-Marquardt normal equations and the Gaussian-process sampler.
//! Matrices are row-major `n x n` slices.

use crate::scalar::Scalar;

fn extent(rows: usize, cols: usize, s: [usize; 2]) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * s[0] + (cols - 1) * s[1] + 1
    }
}

/// Strided matrix product `c ← a·b + beta·c` (`a: m×k`, `b: k×n`). Strides are
/// `[row, column]`, so a transposed operand is passed by swapping them.
#[allow(clippy::too_many_arguments)]
pub fn gemm<T: Scalar>(
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    sa: [usize; 2],
    b: &[T],
    sb: [usize; 2],
    beta: T,
    c: &mut [T],
    sc: [usize; 2],
) {
    assert!(a.len() >= extent(m, k, sa), "gemm: lhs too short");
    assert!(b.len() >= extent(k, n, sb), "gemm: rhs too short");
    assert!(c.len() >= extent(m, n, sc), "gemm: output too short");
    if k == 0 {
        for i in 0..m {
            for j in 0..n {
                c[i * sc[0] + j * sc[1]] *= beta;
            }
        }
        return;
    }
    T::gemm_strided(m, k, n, a, sa, b, sb, beta, c, sc);
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Returns `None` when a pivot is not strictly positive (or not finite).
    pub fn factor(a: &[T], n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n, "matrix must be n x n");
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a[i * n + j];
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(sum > T::zero()) || !sum.is_finite() {
                        return None;
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Some(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)` of the lower factor.
    pub fn lower(&self, i: usize, j: usize) -> T {
        self.l[i * self.n + j]
    }

    /// `L z`, used to colour standard-normal draws.
    pub fn mul_lower(&self, z: &[T]) -> Vec<T> {
        let n = self.n;
        (0..n)
            .map(|i| (0..=i).map(|k| self.l[i * n + k] * z[k]).sum())
            .collect()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_matches_naive_for_both_widths() {
        let a: Vec<f64> = (0..6).map(|v| v as f64 - 2.0).collect();
        let b: Vec<f64> = (0..12).map(|v| (v as f64) * 0.5).collect();
        let mut c = vec![1.0; 8];
        gemm(2, 3, 4, &a, [3, 1], &b, [4, 1], 1.0, &mut c, [4, 1]);
        for i in 0..2 {
            for j in 0..4 {
                let want: f64 = 1.0 + (0..3).map(|p| a[i * 3 + p] * b[p * 4 + j]).sum::<f64>();
                assert_eq!(c[i * 4 + j], want);
            }
        }
        let af: Vec<f32> = a.iter().map(|&v| v as f32).collect();
        let mut ct = vec![0f32; 9];
        // aᵀ·a with a stored 2×3.
        gemm(3, 2, 3, &af, [1, 3], &af, [3, 1], 0.0, &mut ct, [3, 1]);
        assert_eq!(ct[0], af[0] * af[0] + af[3] * af[3]);
        assert_eq!(ct[5], af[1] * af[2] + af[4] * af[5]);
    }

    #[test]
    fn factor_and_solve_spd() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let ch = Cholesky::factor(&a, 3).unwrap();
        let x = ch.solve(&[1.0, 2.0, 3.0]);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
        // L Lᵀ reproduces A
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| ch.lower(i, k) * ch.lower(j, k)).sum();
                assert!((v - a[i * 3 + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = [1.0f32, 2.0, 2.0, 1.0];
        assert!(Cholesky::factor(&a, 2).is_none());
    }
}
