//! Sketch domain model: primitives, sub-primitive references, constraints,
//! and the operations that act on whole sketches (normalization,
//! quantization, deduplication keys, degrees-of-freedom accounting).

mod dedup;
mod dof;
pub mod geom;
mod json;
mod normalize;
mod quantize;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use dedup::{dedup_key, DedupKey};
pub use dof::{constraint_dof_removed, degrees_of_freedom, DofReport};
pub use json::{RawConstraint, RawPrimitive, RawReference, RawSketch};
pub use normalize::{normalize_sketch, NormalizeTransform};
pub use quantize::{dequantize, is_radius_param, quantize, QUANT_BITS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SketchError {
    #[error("{kind} expects {expected} parameters, got {got}")]
    ParamCount { kind: PrimitiveKind, expected: usize, got: usize },
    #[error("non-finite parameter in {0}")]
    NonFinite(PrimitiveKind),
    #[error("circle radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("arc defining points are collinear")]
    DegenerateArc,
    #[error("unknown primitive kind `{0}`")]
    UnknownPrimitiveKind(String),
    #[error("unknown constraint kind `{0}`")]
    UnknownConstraintKind(String),
    #[error("unknown slot `{0}`")]
    UnknownSlot(String),
    #[error("{kind} takes {expected} reference(s), got {got}")]
    Arity { kind: ConstraintKind, expected: &'static str, got: usize },
    #[error("constraint {constraint} references primitive {primitive}, but the sketch has {count}")]
    ReferenceOutOfRange { constraint: usize, primitive: usize, count: usize },
    #[error("slot {slot} is not valid for a {kind}")]
    InvalidSlot { kind: PrimitiveKind, slot: Slot },
    #[error("sketch geometry has zero extent")]
    DegenerateExtent,
    #[error("malformed sketch JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    Arc,
    Circle,
    Line,
    Point,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 4] = [Self::Arc, Self::Circle, Self::Line, Self::Point];

    /// Number of parameters in the canonical parameterization.
    pub fn param_count(self) -> usize {
        match self {
            Self::Arc => 6,
            Self::Circle => 3,
            Self::Line => 4,
            Self::Point => 2,
        }
    }

    /// Geometric degrees of freedom. Arcs carry six numbers but only five
    /// are independent: the midpoint is dependent geometry.
    pub fn dof(self) -> u32 {
        match self {
            Self::Arc => 5,
            Self::Circle => 3,
            Self::Line => 4,
            Self::Point => 2,
        }
    }

    /// Sub-primitive slots a constraint may reference, in canonical order.
    pub fn slots(self) -> &'static [Slot] {
        match self {
            Self::Arc => &[Slot::Whole, Slot::First, Slot::Center, Slot::Second],
            Self::Circle => &[Slot::Whole, Slot::Center],
            Self::Line => &[Slot::Whole, Slot::First, Slot::Second],
            Self::Point => &[Slot::Whole],
        }
    }

    pub fn has_slot(self, slot: Slot) -> bool {
        self.slots().contains(&slot)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Arc => "arc",
            Self::Circle => "circle",
            Self::Line => "line",
            Self::Point => "point",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, SketchError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| SketchError::UnknownPrimitiveKind(name.to_string()))
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Addressable component of a primitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Whole,
    First,
    Center,
    Second,
}

impl Slot {
    pub fn name(self) -> &'static str {
        match self {
            Self::Whole => "whole",
            Self::First => "first",
            Self::Center => "center",
            Self::Second => "second",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, SketchError> {
        [Self::Whole, Self::First, Self::Center, Self::Second]
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| SketchError::UnknownSlot(name.to_string()))
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Typed geometric element in canonical parameterization:
///
/// | kind   | params                              |
/// |--------|-------------------------------------|
/// | Arc    | `x1, y1, x_mid, y_mid, x2, y2`      |
/// | Circle | `x, y, r`                           |
/// | Line   | `x1, y1, x2, y2`                    |
/// | Point  | `x, y`                              |
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive<T> {
    kind: PrimitiveKind,
    params: Vec<T>,
    is_construction: bool,
}

/// Collinearity tolerance (sine of the angle at the start point) below which
/// an arc is rejected.
pub const ARC_COLLINEAR_TOL: f64 = 1e-9;

impl<T: Scalar> Primitive<T> {
    pub fn new(kind: PrimitiveKind, params: Vec<T>, is_construction: bool) -> Result<Self, SketchError> {
        validate_params(kind, &params)?;
        Ok(Self { kind, params, is_construction })
    }

    pub fn line(x1: T, y1: T, x2: T, y2: T) -> Self {
        Self { kind: PrimitiveKind::Line, params: vec![x1, y1, x2, y2], is_construction: false }
    }

    pub fn point(x: T, y: T) -> Self {
        Self { kind: PrimitiveKind::Point, params: vec![x, y], is_construction: false }
    }

    pub fn circle(x: T, y: T, r: T) -> Result<Self, SketchError> {
        Self::new(PrimitiveKind::Circle, vec![x, y, r], false)
    }

    pub fn arc(start: [T; 2], mid: [T; 2], end: [T; 2]) -> Result<Self, SketchError> {
        Self::new(PrimitiveKind::Arc, vec![start[0], start[1], mid[0], mid[1], end[0], end[1]], false)
    }

    pub fn construction(mut self, flag: bool) -> Self {
        self.is_construction = flag;
        self
    }

    pub fn kind(&self) -> PrimitiveKind {
        self.kind
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn is_construction(&self) -> bool {
        self.is_construction
    }

    /// Replaces the parameters, re-checking every invariant.
    pub fn with_params(&self, params: Vec<T>) -> Result<Self, SketchError> {
        Self::new(self.kind, params, self.is_construction)
    }

    /// Location of a point-like slot. `Whole` resolves only for points; the
    /// arc centre is the circumcentre of its three defining points.
    pub fn slot_point(&self, slot: Slot) -> Option<[T; 2]> {
        let p = &self.params;
        match (self.kind, slot) {
            (PrimitiveKind::Point, Slot::Whole) => Some([p[0], p[1]]),
            (PrimitiveKind::Line, Slot::First) | (PrimitiveKind::Arc, Slot::First) => Some([p[0], p[1]]),
            (PrimitiveKind::Line, Slot::Second) => Some([p[2], p[3]]),
            (PrimitiveKind::Arc, Slot::Second) => Some([p[4], p[5]]),
            (PrimitiveKind::Circle, Slot::Center) => Some([p[0], p[1]]),
            (PrimitiveKind::Arc, Slot::Center) => {
                geom::circumcenter([p[0], p[1]], [p[2], p[3]], [p[4], p[5]]).map(|(c, _)| c)
            }
            _ => None,
        }
    }

    /// Applies `p ↦ p·scale + offset` to every point and scales radii.
    pub fn transformed(&self, scale: T, offset: [T; 2]) -> Self {
        let mut params = self.params.clone();
        match self.kind {
            PrimitiveKind::Circle => {
                params[0] = params[0] * scale + offset[0];
                params[1] = params[1] * scale + offset[1];
                params[2] = params[2] * scale;
            }
            _ => {
                for pair in params.chunks_mut(2) {
                    pair[0] = pair[0] * scale + offset[0];
                    pair[1] = pair[1] * scale + offset[1];
                }
            }
        }
        Self { kind: self.kind, params, is_construction: self.is_construction }
    }

    /// Converts the scalar type.
    pub fn cast<U: Scalar>(&self) -> Primitive<U> {
        Primitive {
            kind: self.kind,
            params: self.params.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
            is_construction: self.is_construction,
        }
    }
}

fn validate_params<T: Scalar>(kind: PrimitiveKind, params: &[T]) -> Result<(), SketchError> {
    if params.len() != kind.param_count() {
        return Err(SketchError::ParamCount { kind, expected: kind.param_count(), got: params.len() });
    }
    if params.iter().any(|v| !v.is_finite()) {
        return Err(SketchError::NonFinite(kind));
    }
    match kind {
        PrimitiveKind::Circle if !(params[2] > T::zero()) => {
            Err(SketchError::NonPositiveRadius(params[2].to_f64_lossy()))
        }
        PrimitiveKind::Arc => {
            let p: Vec<f64> = params.iter().map(|v| v.to_f64_lossy()).collect();
            let (ax, ay) = (p[2] - p[0], p[3] - p[1]);
            let (bx, by) = (p[4] - p[0], p[5] - p[1]);
            let cross = ax * by - ay * bx;
            let scale = (ax.hypot(ay)) * (bx.hypot(by));
            if !(scale > 0.0) || cross.abs() <= ARC_COLLINEAR_TOL * scale {
                Err(SketchError::DegenerateArc)
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

/// Pointer to a primitive or one of its sub-primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reference {
    pub primitive: usize,
    pub slot: Slot,
}

impl Reference {
    pub fn new(primitive: usize, slot: Slot) -> Self {
        Self { primitive, slot }
    }

    pub fn whole(primitive: usize) -> Self {
        Self::new(primitive, Slot::Whole)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Coincident,
    Concentric,
    Equal,
    Fix,
    Horizontal,
    Midpoint,
    Normal,
    Offset,
    Parallel,
    Perpendicular,
    Quadrant,
    Tangent,
    Vertical,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 13] = [
        Self::Coincident,
        Self::Concentric,
        Self::Equal,
        Self::Fix,
        Self::Horizontal,
        Self::Midpoint,
        Self::Normal,
        Self::Offset,
        Self::Parallel,
        Self::Perpendicular,
        Self::Quadrant,
        Self::Tangent,
        Self::Vertical,
    ];

    /// Position in [`Self::ALL`].
    pub fn ordinal(self) -> usize {
        Self::ALL.iter().position(|&k| k == self).unwrap()
    }

    /// Fix, Horizontal and Vertical accept one or two references.
    pub fn accepts_arity(self, n: usize) -> bool {
        match self {
            Self::Fix | Self::Horizontal | Self::Vertical => n == 1 || n == 2,
            _ => n == 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Coincident => "coincident",
            Self::Concentric => "concentric",
            Self::Equal => "equal",
            Self::Fix => "fix",
            Self::Horizontal => "horizontal",
            Self::Midpoint => "midpoint",
            Self::Normal => "normal",
            Self::Offset => "offset",
            Self::Parallel => "parallel",
            Self::Perpendicular => "perpendicular",
            Self::Quadrant => "quadrant",
            Self::Tangent => "tangent",
            Self::Vertical => "vertical",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, SketchError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| SketchError::UnknownConstraintKind(name.to_string()))
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Categorical relation over one or two references.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    kind: ConstraintKind,
    refs: Vec<Reference>,
}

impl Constraint {
    pub fn new(kind: ConstraintKind, refs: Vec<Reference>) -> Result<Self, SketchError> {
        if !kind.accepts_arity(refs.len()) {
            let expected = match kind {
                ConstraintKind::Fix | ConstraintKind::Horizontal | ConstraintKind::Vertical => "1 or 2",
                _ => "2",
            };
            return Err(SketchError::Arity { kind, expected, got: refs.len() });
        }
        Ok(Self { kind, refs })
    }

    pub fn unary(kind: ConstraintKind, a: Reference) -> Result<Self, SketchError> {
        Self::new(kind, vec![a])
    }

    pub fn binary(kind: ConstraintKind, a: Reference, b: Reference) -> Result<Self, SketchError> {
        Self::new(kind, vec![a, b])
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn refs(&self) -> &[Reference] {
        &self.refs
    }

    /// Highest primitive index among the references; the sort key of the
    /// canonical constraint order.
    pub fn latest_primitive(&self) -> usize {
        self.refs.iter().map(|r| r.primitive).max().unwrap_or(0)
    }
}

/// Ordered primitives plus ordered constraints. Constraints are kept sorted
/// (stably) by their latest member primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct Sketch<T> {
    primitives: Vec<Primitive<T>>,
    constraints: Vec<Constraint>,
}

impl<T: Scalar> Default for Sketch<T> {
    fn default() -> Self {
        Self { primitives: Vec::new(), constraints: Vec::new() }
    }
}

impl<T: Scalar> Sketch<T> {
    /// Validates every reference and stably sorts the constraints into
    /// canonical order.
    pub fn new(primitives: Vec<Primitive<T>>, mut constraints: Vec<Constraint>) -> Result<Self, SketchError> {
        for (ci, c) in constraints.iter().enumerate() {
            for r in &c.refs {
                let prim = primitives.get(r.primitive).ok_or(SketchError::ReferenceOutOfRange {
                    constraint: ci,
                    primitive: r.primitive,
                    count: primitives.len(),
                })?;
                if !prim.kind.has_slot(r.slot) {
                    return Err(SketchError::InvalidSlot { kind: prim.kind, slot: r.slot });
                }
            }
        }
        constraints.sort_by_key(Constraint::latest_primitive);
        Ok(Self { primitives, constraints })
    }

    pub fn from_primitives(primitives: Vec<Primitive<T>>) -> Self {
        Self { primitives, constraints: Vec::new() }
    }

    pub fn primitives(&self) -> &[Primitive<T>] {
        &self.primitives
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn primitive(&self, i: usize) -> Option<&Primitive<T>> {
        self.primitives.get(i)
    }

    pub fn with_constraints(&self, constraints: Vec<Constraint>) -> Result<Self, SketchError> {
        Self::new(self.primitives.clone(), constraints)
    }

    /// Same constraints over new primitives of identical kinds.
    pub fn with_primitives(&self, primitives: Vec<Primitive<T>>) -> Result<Self, SketchError> {
        Self::new(primitives, self.constraints.clone())
    }

    pub fn cast<U: Scalar>(&self) -> Sketch<U> {
        Sketch {
            primitives: self.primitives.iter().map(Primitive::cast).collect(),
            constraints: self.constraints.clone(),
        }
    }

    pub fn transformed(&self, scale: T, offset: [T; 2]) -> Self {
        Self {
            primitives: self.primitives.iter().map(|p| p.transformed(scale, offset)).collect(),
            constraints: self.constraints.clone(),
        }
    }
}
