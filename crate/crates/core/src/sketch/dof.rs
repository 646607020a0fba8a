use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::{Constraint, ConstraintKind, PrimitiveKind, Reference, Sketch, Slot};

/// Degrees-of-freedom tally. `net` is floored at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DofReport {
    pub total: u32,
    pub removed: u32,
    pub net: u32,
}

fn is_point_like<T: Scalar>(s: &Sketch<T>, r: &Reference) -> bool {
    r.slot != Slot::Whole || s.primitives()[r.primitive].kind() == PrimitiveKind::Point
}

/// DOF removed by one constraint under the counting convention used for
/// distributional statistics (not solver behaviour):
///
/// Coincident 2 for point–point and 1 otherwise, Concentric 2, Equal 1,
/// Fix removes everything its first target has (2 for a sub-point),
/// Horizontal 1, Midpoint 2, Normal 1, Offset 1, Parallel 1,
/// Perpendicular 1, Quadrant 2, Tangent 1, Vertical 1.
pub fn constraint_dof_removed<T: Scalar>(s: &Sketch<T>, c: &Constraint) -> u32 {
    use ConstraintKind::*;
    match c.kind() {
        Coincident => {
            if c.refs().iter().all(|r| is_point_like(s, r)) {
                2
            } else {
                1
            }
        }
        Fix => {
            let r = c.refs()[0];
            if r.slot == Slot::Whole {
                s.primitives()[r.primitive].kind().dof()
            } else {
                2
            }
        }
        Concentric | Midpoint | Quadrant => 2,
        Equal | Horizontal | Normal | Offset | Parallel | Perpendicular | Tangent | Vertical => 1,
    }
}

pub fn degrees_of_freedom<T: Scalar>(s: &Sketch<T>) -> DofReport {
    let total: u32 = s.primitives().iter().map(|p| p.kind().dof()).sum();
    let removed: u32 = s.constraints().iter().map(|c| constraint_dof_removed(s, c)).sum();
    DofReport { total, removed, net: total.saturating_sub(removed) }
}
