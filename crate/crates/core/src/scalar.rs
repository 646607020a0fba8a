//! Floating-point abstraction shared by the geometry, solver, noise and
//! model code. Everything numeric in this crate is generic over [`Scalar`];
//! the crate root exports `f64`/`f32` aliases for the common cases.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};

/// f32 or f64.
pub trait Scalar:
    Float
    + Real
    + FloatConst
    + FromPrimitive
    + NumCast
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    /// `c ← a·b + beta·c` with `a: m×k`, `b: k×n`, `c: m×n`, each given by
    /// (row stride, column stride). Callers check that strides stay in
    /// bounds; see [`crate::linalg::gemm`].
    #[allow(clippy::too_many_arguments)]
    fn gemm_strided(
        m: usize,
        k: usize,
        n: usize,
        a: &[Self],
        sa: [usize; 2],
        b: &[Self],
        sb: [usize; 2],
        beta: Self,
        c: &mut [Self],
        sc: [usize; 2],
    ) {
        for i in 0..m {
            for j in 0..n {
                let mut acc = Self::zero();
                for p in 0..k {
                    acc += a[i * sa[0] + p * sa[1]] * b[p * sb[0] + j * sb[1]];
                }
                let at = i * sc[0] + j * sc[1];
                c[at] = if beta == Self::zero() { acc } else { acc + beta * c[at] };
            }
        }
    }
}

macro_rules! impl_scalar_gemm {
    ($t:ty, $kernel:path) => {
        impl Scalar for $t {
            fn gemm_strided(
                m: usize,
                k: usize,
                n: usize,
                a: &[Self],
                sa: [usize; 2],
                b: &[Self],
                sb: [usize; 2],
                beta: Self,
                c: &mut [Self],
                sc: [usize; 2],
            ) {
                if m == 0 || n == 0 {
                    return;
                }
                // SAFETY: `linalg::gemm` verifies that every strided index
                // touched for these dimensions lies inside the slices.
                unsafe {
                    $kernel(
                        m,
                        k,
                        n,
                        1.0,
                        a.as_ptr(),
                        sa[0] as isize,
                        sa[1] as isize,
                        b.as_ptr(),
                        sb[0] as isize,
                        sb[1] as isize,
                        beta,
                        c.as_mut_ptr(),
                        sc[0] as isize,
                        sc[1] as isize,
                    )
                }
            }
        }
    };
}

impl_scalar_gemm!(f32, matrixmultiply::sgemm);
impl_scalar_gemm!(f64, matrixmultiply::dgemm);

/// Arithmetic subset used by geometry kernels that must run both on plain
/// scalars and on forward-mode dual numbers (see `solver::dual`).
pub trait Real:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
    fn root(self) -> Self;
    fn magnitude(self) -> Self;
    /// Primal value, for branch decisions.
    fn re(self) -> f64;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn cst(x: f64) -> Self {
                x as $t
            }
            fn root(self) -> Self {
                <$t>::sqrt(self)
            }
            fn magnitude(self) -> Self {
                <$t>::abs(self)
            }
            fn re(self) -> f64 {
                self as f64
            }
        }
    };
}
impl_real!(f32);
impl_real!(f64);
