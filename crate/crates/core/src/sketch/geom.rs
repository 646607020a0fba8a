//! Planar geometry helpers shared by normalization, solving and rendering.

use crate::scalar::{Real, Scalar};

use super::{Primitive, PrimitiveKind};

/// Centre and radius of the circle through three points; `None` when the
/// points are collinear.
pub fn circumcenter<R: Real>(a: [R; 2], b: [R; 2], c: [R; 2]) -> Option<([R; 2], R)> {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = R::cst(2.0) * (bx * cy - by * cx);
    if d.re() == 0.0 || !d.re().is_finite() {
        return None;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    let r = (ux * ux + uy * uy).root();
    Some(([a[0] + ux, a[1] + uy], r))
}

/// An arc expressed in polar form around its centre. `sweep` is signed:
/// positive for counter-clockwise travel from start to end through the
/// midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcGeometry<T> {
    pub center: [T; 2],
    pub radius: T,
    pub start_angle: T,
    pub sweep: T,
}

impl<T: Scalar> ArcGeometry<T> {
    pub fn from_points(start: [T; 2], mid: [T; 2], end: [T; 2]) -> Option<Self> {
        let (center, radius) = circumcenter(start, mid, end)?;
        let ang = |p: [T; 2]| (p[1] - center[1]).atan2(p[0] - center[0]);
        let tau = T::TAU();
        let wrap = |a: T| {
            let mut a = a % tau;
            if a < T::zero() {
                a += tau;
            }
            a
        };
        let a0 = ang(start);
        let ccw_mid = wrap(ang(mid) - a0);
        let ccw_end = wrap(ang(end) - a0);
        let sweep = if ccw_mid <= ccw_end { ccw_end } else { ccw_end - tau };
        Some(Self { center, radius, start_angle: a0, sweep })
    }

    pub fn point_at(&self, t: T) -> [T; 2] {
        let a = self.start_angle + self.sweep * t;
        [self.center[0] + self.radius * a.cos(), self.center[1] + self.radius * a.sin()]
    }

    /// Whether the arc passes through polar angle `a`.
    pub fn contains_angle(&self, a: T) -> bool {
        let tau = T::TAU();
        let mut rel = (a - self.start_angle) % tau;
        if self.sweep >= T::zero() {
            if rel < T::zero() {
                rel += tau;
            }
            rel <= self.sweep
        } else {
            if rel > T::zero() {
                rel -= tau;
            }
            rel >= self.sweep
        }
    }

    pub fn length(&self) -> T {
        self.radius * self.sweep.abs()
    }
}

/// Axis-aligned bounding box `[min_x, min_y, max_x, max_y]`.
pub type BBox<T> = [T; 4];

fn extend<T: Scalar>(bb: &mut BBox<T>, p: [T; 2]) {
    bb[0] = bb[0].min(p[0]);
    bb[1] = bb[1].min(p[1]);
    bb[2] = bb[2].max(p[0]);
    bb[3] = bb[3].max(p[1]);
}

/// Tight bounding box of the curve geometry of one primitive (arcs include
/// the axis extremes they actually pass through).
pub fn primitive_bbox<T: Scalar>(p: &Primitive<T>) -> BBox<T> {
    let v = p.params();
    let mut bb = [T::infinity(), T::infinity(), T::neg_infinity(), T::neg_infinity()];
    match p.kind() {
        PrimitiveKind::Point => extend(&mut bb, [v[0], v[1]]),
        PrimitiveKind::Line => {
            extend(&mut bb, [v[0], v[1]]);
            extend(&mut bb, [v[2], v[3]]);
        }
        PrimitiveKind::Circle => {
            extend(&mut bb, [v[0] - v[2], v[1] - v[2]]);
            extend(&mut bb, [v[0] + v[2], v[1] + v[2]]);
        }
        PrimitiveKind::Arc => {
            extend(&mut bb, [v[0], v[1]]);
            extend(&mut bb, [v[4], v[5]]);
            if let Some(arc) = ArcGeometry::from_points([v[0], v[1]], [v[2], v[3]], [v[4], v[5]]) {
                for k in 0..4 {
                    let a = T::FRAC_PI_2() * T::from_usize_lossy(k);
                    if arc.contains_angle(a) {
                        extend(&mut bb, [arc.center[0] + arc.radius * a.cos(), arc.center[1] + arc.radius * a.sin()]);
                    }
                }
            } else {
                extend(&mut bb, [v[2], v[3]]);
            }
        }
    }
    bb
}

/// Bounding box over all primitives; `None` for an empty slice.
pub fn sketch_bbox<T: Scalar>(prims: &[Primitive<T>]) -> Option<BBox<T>> {
    let mut it = prims.iter().map(primitive_bbox);
    let first = it.next()?;
    Some(it.fold(first, |mut acc, b| {
        extend(&mut acc, [b[0], b[1]]);
        extend(&mut acc, [b[2], b[3]]);
        acc
    }))
}

/// Mean of the defining points (circle: its centre).
pub fn centroid<T: Scalar>(p: &Primitive<T>) -> [T; 2] {
    let v = p.params();
    match p.kind() {
        PrimitiveKind::Circle => [v[0], v[1]],
        _ => {
            let n = T::from_usize_lossy(v.len() / 2);
            let sx: T = v.iter().step_by(2).copied().sum();
            let sy: T = v.iter().skip(1).step_by(2).copied().sum();
            [sx / n, sy / n]
        }
    }
}
