//! Forward-mode dual numbers with a fixed-width tangent, enough for one
//! residual block (at most two primitives of six parameters each).

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::{Real, Scalar};

/// Maximum number of local variables in a residual block.
pub const MAX_BLOCK_VARS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub v: T,
    pub d: [T; MAX_BLOCK_VARS],
}

impl<T: Scalar> Dual<T> {
    pub fn constant(v: T) -> Self {
        Self { v, d: [T::zero(); MAX_BLOCK_VARS] }
    }

    /// Independent variable number `i`.
    pub fn var(v: T, i: usize) -> Self {
        let mut d = [T::zero(); MAX_BLOCK_VARS];
        d[i] = T::one();
        Self { v, d }
    }

    fn map(self, v: T, scale: T) -> Self {
        let mut d = self.d;
        d.iter_mut().for_each(|x| *x *= scale);
        Self { v, d }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut d = self.d;
        d.iter_mut().zip(o.d).for_each(|(a, b)| *a += b);
        Self { v: self.v + o.v, d }
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut d = self.d;
        d.iter_mut().zip(o.d).for_each(|(a, b)| *a -= b);
        Self { v: self.v - o.v, d }
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut d = [T::zero(); MAX_BLOCK_VARS];
        for i in 0..MAX_BLOCK_VARS {
            d[i] = self.d[i] * o.v + o.d[i] * self.v;
        }
        Self { v: self.v * o.v, d }
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = T::one() / o.v;
        let q = self.v * inv;
        let mut d = [T::zero(); MAX_BLOCK_VARS];
        for i in 0..MAX_BLOCK_VARS {
            d[i] = (self.d[i] - q * o.d[i]) * inv;
        }
        Self { v: q, d }
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(-self.v, -T::one())
    }
}

impl<T: Scalar> Real for Dual<T> {
    fn cst(x: f64) -> Self {
        Self::constant(T::lit(x))
    }

    fn root(self) -> Self {
        let s = self.v.sqrt();
        self.map(s, T::lit(0.5) / s)
    }

    fn magnitude(self) -> Self {
        if self.v < T::zero() {
            -self
        } else {
            self
        }
    }

    fn re(self) -> f64 {
        self.v.to_f64_lossy()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::var(3.0f64, 0);
        let y = Dual::var(2.0f64, 1);
        let f = x * x * y / (x + y); // 18 / 5
        assert!((f.v - 3.6).abs() < 1e-12);
        // df/dx = (2xy(x+y) - x²y) / (x+y)² = (60 - 18)/25
        assert!((f.d[0] - 42.0 / 25.0).abs() < 1e-12);
        // df/dy = x³ / (x+y)²
        assert!((f.d[1] - 27.0 / 25.0).abs() < 1e-12);
        let r = (x * x + y * y).root();
        assert!((r.d[0] - 3.0 / 13f64.sqrt()).abs() < 1e-12);
    }
}
