use crate::scalar::Scalar;

use super::geom::sketch_bbox;
use super::{Sketch, SketchError};

/// The similarity `p ↦ p·scale + offset` applied by [`normalize_sketch`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormalizeTransform<T> {
    pub scale: T,
    pub offset: [T; 2],
}

impl<T: Scalar> NormalizeTransform<T> {
    pub fn apply(&self, p: [T; 2]) -> [T; 2] {
        [p[0] * self.scale + self.offset[0], p[1] * self.scale + self.offset[1]]
    }

    pub fn inverse(&self) -> Self {
        let inv = T::one() / self.scale;
        Self { scale: inv, offset: [-self.offset[0] * inv, -self.offset[1] * inv] }
    }

    /// Maps a normalized sketch back into the original frame.
    pub fn denormalize(&self, s: &Sketch<T>) -> Sketch<T> {
        let inv = self.inverse();
        s.transformed(inv.scale, inv.offset)
    }
}

/// Uniformly rescales and translates a sketch so that its square bounding
/// box (side = max of the tight box's width and height) has side 1 and is
/// centred at the origin.
pub fn normalize_sketch<T: Scalar>(s: &Sketch<T>) -> Result<(Sketch<T>, NormalizeTransform<T>), SketchError> {
    let bb = sketch_bbox(s.primitives()).ok_or(SketchError::DegenerateExtent)?;
    let side = (bb[2] - bb[0]).max(bb[3] - bb[1]);
    if !(side > T::zero()) || !side.is_finite() {
        return Err(SketchError::DegenerateExtent);
    }
    let half = T::lit(0.5);
    let center = [(bb[0] + bb[2]) * half, (bb[1] + bb[3]) * half];
    let scale = T::one() / side;
    let transform = NormalizeTransform { scale, offset: [-center[0] * scale, -center[1] * scale] };
    Ok((s.transformed(transform.scale, transform.offset), transform))
}
