use crate::scalar::Scalar;

use super::PrimitiveKind;

/// Bit width of the uniform parameter quantizer.
pub const QUANT_BITS: u32 = 6;

/// Uniform quantizer over normalized sketch units.
///
/// Coordinates cover `[-0.5, 0.5]` with `2^bits` bins,
/// `bin = floor((x + 0.5)·2^bits)` clamped to the last bin. Radii cover
/// `[0, 0.5]` with the same bin width, so only the lower half of the bins
/// (`2^(bits-1)`) is used. Out-of-range inputs are clamped.
pub fn quantize<T: Scalar>(x: T, bits: u32, is_radius: bool) -> u32 {
    let levels = T::lit((1u64 << bits) as f64);
    let half = T::lit(0.5);
    let (u, top) = if is_radius {
        (clamp(x, T::zero(), half), (1u32 << (bits - 1)) - 1)
    } else {
        (clamp(x, -half, half) + half, (1u32 << bits) - 1)
    };
    let bin = (u * levels).floor().to_f64_lossy();
    if bin.is_nan() || bin < 0.0 {
        0
    } else {
        (bin as u32).min(top)
    }
}

/// Centre of a quantization bin.
pub fn dequantize<T: Scalar>(bin: u32, bits: u32, is_radius: bool) -> T {
    let levels = (1u64 << bits) as f64;
    let v = (bin as f64 + 0.5) / levels;
    T::lit(if is_radius { v } else { v - 0.5 })
}

fn clamp<T: Scalar>(x: T, lo: T, hi: T) -> T {
    if x.is_nan() {
        lo
    } else {
        x.max(lo).min(hi)
    }
}

/// Whether parameter `index` of `kind` is a radius (uses the radius quantizer).
pub fn is_radius_param(kind: PrimitiveKind, index: usize) -> bool {
    kind == PrimitiveKind::Circle && index == 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints_and_centre() {
        assert_eq!(quantize(-0.5f64, 6, false), 0);
        assert_eq!(quantize(0.5f64 - 1e-12, 6, false), 63);
        assert_eq!(quantize(0.5f64, 6, false), 63);
        assert_eq!(quantize(0.0f64, 6, false), 32);
        assert_eq!(quantize(0.25f64, 6, true), 16);
        assert_eq!(quantize(0.5f64, 6, true), 31);
        assert_eq!(quantize(-3.0f32, 6, false), 0);
        assert_eq!(quantize(9.0f32, 6, false), 63);
    }

    #[test]
    fn bin_centres() {
        assert_eq!(dequantize::<f64>(0, 6, false), -0.5 + 1.0 / 128.0);
        assert_eq!(dequantize::<f64>(16, 6, true), 16.5 / 64.0);
    }

    proptest! {
        #[test]
        fn round_trip_within_half_bin(x in -2.0f64..2.0, bits in 2u32..=8) {
            let half_bin = 0.5 / (1u64 << bits) as f64;
            let q = dequantize::<f64>(quantize(x, bits, false), bits, false);
            prop_assert!((q - x.clamp(-0.5, 0.5)).abs() <= half_bin + 1e-15);
            let r = x.abs();
            let qr = dequantize::<f64>(quantize(r, bits, true), bits, true);
            prop_assert!((qr - r.clamp(0.0, 0.5)).abs() <= half_bin + 1e-15);
        }
    }
}
