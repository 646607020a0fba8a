//! Row-major 2-D arrays.

use crate::linalg::gemm;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "tensor data does not match shape {rows}x{cols}");
        Self { rows, cols, data }
    }

    pub fn scalar(v: T) -> Self {
        Self::from_vec(1, 1, vec![v])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.shape(), other.shape());
        self.data.iter_mut().zip(&other.data).for_each(|(a, &b)| *a += b);
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self·other`.
    pub fn matmul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.cols);
        out.add_matmul(self, false, other, false);
        out
    }

    /// `self ← self + op(a)·op(b)`, where `op` optionally transposes.
    pub fn add_matmul(&mut self, a: &Self, ta: bool, b: &Self, tb: bool) {
        let (m, k) = if ta { (a.cols, a.rows) } else { (a.rows, a.cols) };
        let (k2, n) = if tb { (b.cols, b.rows) } else { (b.rows, b.cols) };
        assert_eq!(k, k2, "inner dimensions differ");
        assert_eq!((self.rows, self.cols), (m, n), "output shape mismatch");
        let sa = if ta { [1, a.cols] } else { [a.cols, 1] };
        let sb = if tb { [1, b.cols] } else { [b.cols, 1] };
        gemm(m, k, n, &a.data, sa, &b.data, sb, T::one(), &mut self.data, [n, 1]);
    }
}
