//! Residual blocks, one per constraint. Each block reads only the
//! parameters of the primitives its constraint references; branch choices
//! (tangency side, quadrant axis) and Fix targets are frozen from the
//! configuration the block was built against.

use crate::scalar::{Real, Scalar};
use crate::sketch::geom::circumcenter;
use crate::sketch::{Constraint, ConstraintKind, PrimitiveKind, Reference, Sketch, Slot};

use super::dual::Dual;
use super::SolveError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PointRef {
    local: usize,
    kind: PrimitiveKind,
    slot: Slot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CurveRef {
    local: usize,
    kind: PrimitiveKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Residual {
    Coincident { a: PointRef, b: PointRef },
    PointOnLine { p: PointRef, line: usize },
    PointOnCurve { p: PointRef, curve: CurveRef },
    Collinear { a: usize, b: usize },
    SameCurve { a: CurveRef, b: CurveRef },
    /// Horizontal/Vertical on a single line: the relevant component of the
    /// unit direction.
    LineAxis { line: usize, axis: Axis },
    /// Horizontal/Vertical between two points: coordinate difference.
    PointsAxis { a: PointRef, b: PointRef, axis: Axis },
    Parallel { a: usize, b: usize },
    Perpendicular { a: usize, b: usize },
    TangentLine { line: usize, curve: CurveRef },
    TangentCurves { a: CurveRef, b: CurveRef, internal: bool },
    EqualLength { a: usize, b: usize },
    EqualRadius { a: CurveRef, b: CurveRef },
    Midpoint { p: PointRef, line: usize },
    Normal { line: usize, curve: CurveRef },
    Quadrant { p: PointRef, curve: CurveRef, dir: [f64; 2] },
    FixParams { local: usize, initial: Vec<f64> },
    FixPoint { p: PointRef, initial: [f64; 2] },
    Concat(Vec<Residual>),
    Empty,
}

#[derive(Debug, Clone, Copy)]
enum Role {
    Point(PointRef),
    Line(usize),
    Curve(CurveRef),
}

/// A constraint's residual function bound to the primitives it reads.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    pub constraint: usize,
    /// Distinct primitive indices read by this block, in local order.
    pub primitives: Vec<usize>,
    pub(crate) residual: Residual,
}

impl ResidualBlock {
    pub fn build<T: Scalar>(index: usize, c: &Constraint, s: &Sketch<T>) -> Result<Self, SolveError> {
        let mut primitives: Vec<usize> = Vec::with_capacity(2);
        for r in c.refs() {
            if r.primitive >= s.primitives().len() {
                return Err(SolveError::InvalidReference(*r));
            }
            if !primitives.contains(&r.primitive) {
                primitives.push(r.primitive);
            }
        }
        let roles: Vec<Role> = c
            .refs()
            .iter()
            .map(|r| {
                let local = primitives.iter().position(|&p| p == r.primitive).unwrap();
                let kind = s.primitives()[r.primitive].kind();
                if !kind.has_slot(r.slot) {
                    return Err(SolveError::InvalidReference(*r));
                }
                Ok(match (kind, r.slot) {
                    (PrimitiveKind::Line, Slot::Whole) => Role::Line(local),
                    (PrimitiveKind::Circle | PrimitiveKind::Arc, Slot::Whole) => Role::Curve(CurveRef { local, kind }),
                    _ => Role::Point(PointRef { local, kind, slot: r.slot }),
                })
            })
            .collect::<Result<_, _>>()?;
        let locals: Vec<Vec<f64>> = primitives
            .iter()
            .map(|&i| s.primitives()[i].params().iter().map(|v| v.to_f64_lossy()).collect())
            .collect();
        let view: Vec<&[f64]> = locals.iter().map(Vec::as_slice).collect();
        let residual = resolve(c, &roles, &view).ok_or_else(|| unsupported(c, s))?;
        Ok(Self { constraint: index, primitives, residual })
    }

    pub fn eval<R: Real>(&self, locals: &[&[R]]) -> Vec<R> {
        let mut out = Vec::with_capacity(3);
        eval_into(&self.residual, locals, &mut out);
        out
    }

    /// Residuals and their exact Jacobian with respect to the block's local
    /// variables (concatenated parameters of `primitives`).
    pub fn eval_with_jacobian<T: Scalar>(&self, locals: &[&[T]]) -> (Vec<T>, Vec<Vec<T>>) {
        let mut k = 0;
        let duals: Vec<Vec<Dual<T>>> = locals
            .iter()
            .map(|ps| {
                ps.iter()
                    .map(|&v| {
                        let d = Dual::var(v, k);
                        k += 1;
                        d
                    })
                    .collect()
            })
            .collect();
        let view: Vec<&[Dual<T>]> = duals.iter().map(Vec::as_slice).collect();
        let out = self.eval(&view);
        let values = out.iter().map(|d| d.v).collect();
        let jac = out.iter().map(|d| d.d[..k].to_vec()).collect();
        (values, jac)
    }
}

fn unsupported<T: Scalar>(c: &Constraint, s: &Sketch<T>) -> SolveError {
    let desc = c
        .refs()
        .iter()
        .map(|r| format!("{}.{}", s.primitives()[r.primitive].kind(), r.slot))
        .collect::<Vec<_>>()
        .join(", ");
    SolveError::UnsupportedPair { kind: c.kind(), refs: desc }
}

fn resolve(c: &Constraint, roles: &[Role], init: &[&[f64]]) -> Option<Residual> {
    use ConstraintKind::*;
    use Residual as Rs;
    use Role::*;
    let pair = || (roles[0], roles[1]);
    Some(match c.kind() {
        Offset => Rs::Empty,
        Coincident => match pair() {
            (Point(a), Point(b)) => Rs::Coincident { a, b },
            (Point(p), Line(line)) | (Line(line), Point(p)) => Rs::PointOnLine { p, line },
            (Point(p), Curve(curve)) | (Curve(curve), Point(p)) => Rs::PointOnCurve { p, curve },
            (Line(a), Line(b)) => Rs::Collinear { a, b },
            (Curve(a), Curve(b)) => Rs::SameCurve { a, b },
            _ => return None,
        },
        Concentric => {
            let centre = |r: Role| match r {
                Point(p) => Some(p),
                Curve(c) => Some(PointRef { local: c.local, kind: c.kind, slot: Slot::Center }),
                Line(_) => None,
            };
            Rs::Coincident { a: centre(roles[0])?, b: centre(roles[1])? }
        }
        Equal => match pair() {
            (Line(a), Line(b)) => Rs::EqualLength { a, b },
            (Curve(a), Curve(b)) => Rs::EqualRadius { a, b },
            _ => return None,
        },
        Fix => {
            let parts: Vec<Residual> = roles
                .iter()
                .zip(c.refs())
                .map(|(role, r)| match role {
                    Point(p) if r.slot != Slot::Whole => {
                        let at = point(*p, init);
                        Rs::FixPoint { p: *p, initial: at }
                    }
                    Point(p) => Rs::FixParams { local: p.local, initial: init[p.local].to_vec() },
                    Line(l) => Rs::FixParams { local: *l, initial: init[*l].to_vec() },
                    Curve(cv) => Rs::FixParams { local: cv.local, initial: init[cv.local].to_vec() },
                })
                .collect();
            if parts.len() == 1 {
                parts.into_iter().next().unwrap()
            } else {
                Rs::Concat(parts)
            }
        }
        Horizontal | Vertical => {
            let axis = if c.kind() == Horizontal { Axis::Y } else { Axis::X };
            match roles {
                [Line(line)] => Rs::LineAxis { line: *line, axis },
                [Point(a), Point(b)] => Rs::PointsAxis { a: *a, b: *b, axis },
                _ => return None,
            }
        }
        Midpoint => match pair() {
            (Point(p), Line(line)) | (Line(line), Point(p)) => Rs::Midpoint { p, line },
            _ => return None,
        },
        Normal => match pair() {
            (Line(line), Curve(curve)) | (Curve(curve), Line(line)) => Rs::Normal { line, curve },
            _ => return None,
        },
        Parallel => match pair() {
            (Line(a), Line(b)) => Rs::Parallel { a, b },
            _ => return None,
        },
        Perpendicular => match pair() {
            (Line(a), Line(b)) => Rs::Perpendicular { a, b },
            _ => return None,
        },
        Quadrant => match pair() {
            (Point(p), Curve(curve)) | (Curve(curve), Point(p)) => {
                let at = point(p, init);
                let (c0, _) = curve_of(curve, init);
                let (dx, dy) = (at[0] - c0[0], at[1] - c0[1]);
                let dir = if dx.abs() >= dy.abs() { [dx.signum(), 0.0] } else { [0.0, dy.signum()] };
                Rs::Quadrant { p, curve, dir }
            }
            _ => return None,
        },
        Tangent => match pair() {
            (Line(line), Curve(curve)) | (Curve(curve), Line(line)) => Rs::TangentLine { line, curve },
            (Curve(a), Curve(b)) => {
                let (ca, ra) = curve_of(a, init);
                let (cb, rb) = curve_of(b, init);
                let d = ((ca[0] - cb[0]).powi(2) + (ca[1] - cb[1]).powi(2)).sqrt();
                let external = (d - (ra + rb)).abs();
                let internal = (d - (ra - rb).abs()).abs();
                Rs::TangentCurves { a, b, internal: internal < external }
            }
            _ => return None,
        },
    })
}

fn point<R: Real>(p: PointRef, v: &[&[R]]) -> [R; 2] {
    let q = v[p.local];
    match (p.kind, p.slot) {
        (PrimitiveKind::Line, Slot::Second) => [q[2], q[3]],
        (PrimitiveKind::Arc, Slot::Second) => [q[4], q[5]],
        (PrimitiveKind::Arc, Slot::Center) => arc_circle(q).0,
        _ => [q[0], q[1]],
    }
}

fn arc_circle<R: Real>(q: &[R]) -> ([R; 2], R) {
    circumcenter([q[0], q[1]], [q[2], q[3]], [q[4], q[5]])
        .unwrap_or(([R::cst(f64::NAN), R::cst(f64::NAN)], R::cst(f64::NAN)))
}

fn curve_of<R: Real>(c: CurveRef, v: &[&[R]]) -> ([R; 2], R) {
    let q = v[c.local];
    match c.kind {
        PrimitiveKind::Arc => arc_circle(q),
        _ => ([q[0], q[1]], q[2]),
    }
}

fn line_of<R: Real>(l: usize, v: &[&[R]]) -> ([R; 2], [R; 2]) {
    let q = v[l];
    ([q[0], q[1]], [q[2], q[3]])
}

fn sub<R: Real>(a: [R; 2], b: [R; 2]) -> [R; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm<R: Real>(a: [R; 2]) -> R {
    (a[0] * a[0] + a[1] * a[1]).root()
}

fn unit<R: Real>(a: [R; 2]) -> [R; 2] {
    let n = norm(a);
    [a[0] / n, a[1] / n]
}

fn cross<R: Real>(a: [R; 2], b: [R; 2]) -> R {
    a[0] * b[1] - a[1] * b[0]
}

fn dot<R: Real>(a: [R; 2], b: [R; 2]) -> R {
    a[0] * b[0] + a[1] * b[1]
}

fn eval_into<R: Real>(res: &Residual, v: &[&[R]], out: &mut Vec<R>) {
    use Residual as Rs;
    match res {
        Rs::Empty => {}
        Rs::Coincident { a, b } => out.extend(sub(point(*a, v), point(*b, v))),
        Rs::PointOnLine { p, line } => {
            let (a, b) = line_of(*line, v);
            out.push(cross(unit(sub(b, a)), sub(point(*p, v), a)));
        }
        Rs::PointOnCurve { p, curve } => {
            let (c, r) = curve_of(*curve, v);
            out.push(norm(sub(point(*p, v), c)) - r);
        }
        Rs::Collinear { a, b } => {
            let (a1, a2) = line_of(*a, v);
            let (b1, b2) = line_of(*b, v);
            let d = unit(sub(a2, a1));
            out.push(cross(d, sub(b1, a1)));
            out.push(cross(d, sub(b2, a1)));
        }
        Rs::SameCurve { a, b } => {
            let (ca, ra) = curve_of(*a, v);
            let (cb, rb) = curve_of(*b, v);
            out.extend(sub(ca, cb));
            out.push(ra - rb);
        }
        Rs::LineAxis { line, axis } => {
            let (a, b) = line_of(*line, v);
            let d = unit(sub(b, a));
            out.push(match axis {
                Axis::Y => d[1],
                Axis::X => d[0],
            });
        }
        Rs::PointsAxis { a, b, axis } => {
            let (pa, pb) = (point(*a, v), point(*b, v));
            out.push(match axis {
                Axis::Y => pb[1] - pa[1],
                Axis::X => pb[0] - pa[0],
            });
        }
        Rs::Parallel { a, b } => {
            let (a1, a2) = line_of(*a, v);
            let (b1, b2) = line_of(*b, v);
            out.push(cross(unit(sub(a2, a1)), unit(sub(b2, b1))));
        }
        Rs::Perpendicular { a, b } => {
            let (a1, a2) = line_of(*a, v);
            let (b1, b2) = line_of(*b, v);
            out.push(dot(unit(sub(a2, a1)), unit(sub(b2, b1))));
        }
        Rs::TangentLine { line, curve } => {
            let (a, b) = line_of(*line, v);
            let (c, r) = curve_of(*curve, v);
            out.push(cross(unit(sub(b, a)), sub(c, a)).magnitude() - r);
        }
        Rs::TangentCurves { a, b, internal } => {
            let (ca, ra) = curve_of(*a, v);
            let (cb, rb) = curve_of(*b, v);
            let d = norm(sub(ca, cb));
            out.push(if *internal { d - (ra - rb).magnitude() } else { d - (ra + rb) });
        }
        Rs::EqualLength { a, b } => {
            let (a1, a2) = line_of(*a, v);
            let (b1, b2) = line_of(*b, v);
            out.push(norm(sub(a2, a1)) - norm(sub(b2, b1)));
        }
        Rs::EqualRadius { a, b } => {
            out.push(curve_of(*a, v).1 - curve_of(*b, v).1);
        }
        Rs::Midpoint { p, line } => {
            let (a, b) = line_of(*line, v);
            let q = point(*p, v);
            let half = R::cst(0.5);
            out.push(q[0] - (a[0] + b[0]) * half);
            out.push(q[1] - (a[1] + b[1]) * half);
        }
        Rs::Normal { line, curve } => {
            let (a, b) = line_of(*line, v);
            let (c, _) = curve_of(*curve, v);
            let d = unit(sub(b, a));
            let t = dot(sub(c, a), d);
            let near = [a[0] + d[0] * t, a[1] + d[1] * t];
            out.push(cross(d, sub(near, c)));
        }
        Rs::Quadrant { p, curve, dir } => {
            let (c, r) = curve_of(*curve, v);
            let q = point(*p, v);
            out.push(q[0] - (c[0] + r * R::cst(dir[0])));
            out.push(q[1] - (c[1] + r * R::cst(dir[1])));
        }
        Rs::FixParams { local, initial } => {
            out.extend(v[*local].iter().zip(initial).map(|(&x, &x0)| x - R::cst(x0)));
        }
        Rs::FixPoint { p, initial } => {
            let q = point(*p, v);
            out.push(q[0] - R::cst(initial[0]));
            out.push(q[1] - R::cst(initial[1]));
        }
        Rs::Concat(parts) => parts.iter().for_each(|r| eval_into(r, v, out)),
    }
}

/// Residual vector of one constraint evaluated on `s`, with any branch
/// choice made against `s` itself. Zero iff the constraint is satisfied.
pub fn residual<T: Scalar>(c: &Constraint, s: &Sketch<T>) -> Result<Vec<T>, SolveError> {
    let block = ResidualBlock::build(0, c, s)?;
    let locals: Vec<&[T]> = block.primitives.iter().map(|&i| s.primitives()[i].params()).collect();
    Ok(block.eval(&locals))
}

/// Convenience for error messages and tests.
pub fn describe_reference<T: Scalar>(s: &Sketch<T>, r: &Reference) -> String {
    match s.primitive(r.primitive) {
        Some(p) => format!("{}#{}.{}", p.kind(), r.primitive, r.slot),
        None => format!("#{}.{}", r.primitive, r.slot),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::Primitive;

    fn eval(kind: ConstraintKind, prims: Vec<Primitive<f64>>, refs: Vec<Reference>) -> Vec<f64> {
        let c = Constraint::new(kind, refs).unwrap();
        let s = Sketch::<f64>::new(prims, vec![c.clone()]).unwrap();
        residual(&c, &s).unwrap()
    }

    #[test]
    fn horizontal_satisfied() {
        let r = eval(ConstraintKind::Horizontal, vec![Primitive::line(0.0, 0.0, 1.0, 0.0)], vec![Reference::whole(0)]);
        assert_eq!(r, vec![0.0]);
    }

    #[test]
    fn coincident_points() {
        let r = eval(
            ConstraintKind::Coincident,
            vec![Primitive::point(0.1, 0.2), Primitive::point(0.1, 0.2)],
            vec![Reference::whole(0), Reference::whole(1)],
        );
        assert_eq!(r, vec![0.0, 0.0]);
    }

    #[test]
    fn tangent_circle_line() {
        let r = eval(
            ConstraintKind::Tangent,
            vec![Primitive::circle(0.0, 0.0, 0.2).unwrap(), Primitive::line(-1.0, 0.3, 1.0, 0.3)],
            vec![Reference::whole(0), Reference::whole(1)],
        );
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn tangent_circles_pick_closer_branch() {
        // internally tangent: distance 0.1 = |0.3 - 0.2|
        let r = eval(
            ConstraintKind::Tangent,
            vec![Primitive::circle(0.0, 0.0, 0.3).unwrap(), Primitive::circle(0.1, 0.0, 0.2).unwrap()],
            vec![Reference::whole(0), Reference::whole(1)],
        );
        assert!(r[0].abs() < 1e-15);
    }

    #[test]
    fn quadrant_axis_from_initial_direction() {
        let r = eval(
            ConstraintKind::Quadrant,
            vec![Primitive::point(0.05, 0.52), Primitive::circle(0.0, 0.0, 0.5).unwrap()],
            vec![Reference::whole(0), Reference::whole(1)],
        );
        assert!((r[0] - 0.05).abs() < 1e-15 && (r[1] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn midpoint_and_normal() {
        let r = eval(
            ConstraintKind::Midpoint,
            vec![Primitive::point(0.5, 0.0), Primitive::line(0.0, 0.0, 1.0, 0.0)],
            vec![Reference::whole(0), Reference::whole(1)],
        );
        assert_eq!(r, vec![0.0, 0.0]);
        let r = eval(
            ConstraintKind::Normal,
            vec![Primitive::line(-1.0, 0.25, 1.0, 0.25), Primitive::circle(0.0, 0.0, 0.1).unwrap()],
            vec![Reference::whole(0), Reference::whole(1)],
        );
        assert!((r[0].abs() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn offset_is_empty() {
        let r = eval(
            ConstraintKind::Offset,
            vec![Primitive::line(0.0, 0.0, 1.0, 0.0), Primitive::line(0.0, 1.0, 1.0, 1.0)],
            vec![Reference::whole(0), Reference::whole(1)],
        );
        assert!(r.is_empty());
    }

    #[test]
    fn unsupported_pairs() {
        let prims = vec![Primitive::line(0.0, 0.0, 1.0, 0.0), Primitive::circle(0.0, 0.0, 1.0).unwrap()];
        for (kind, refs) in [
            (ConstraintKind::Parallel, vec![Reference::whole(0), Reference::whole(1)]),
            (ConstraintKind::Horizontal, vec![Reference::whole(1)]),
            (ConstraintKind::Midpoint, vec![Reference::whole(0), Reference::whole(1)]),
            (ConstraintKind::Tangent, vec![Reference::whole(0), Reference::new(0, Slot::First)]),
        ] {
            let c = Constraint::new(kind, refs).unwrap();
            let s = Sketch::<f64>::new(prims.clone(), vec![c.clone()]).unwrap();
            assert!(matches!(residual(&c, &s), Err(SolveError::UnsupportedPair { .. })), "{kind}");
        }
    }

    #[test]
    fn fix_sub_point_and_whole() {
        let c = Constraint::new(ConstraintKind::Fix, vec![Reference::new(0, Slot::Second), Reference::whole(1)]).unwrap();
        let s = Sketch::<f64>::new(vec![Primitive::line(0.0, 0.0, 1.0, 0.0), Primitive::point(0.3, 0.3)], vec![c.clone()]).unwrap();
        let block = ResidualBlock::build(0, &c, &s).unwrap();
        let moved = [[0.0f64, 0.0, 1.5, 0.25].as_slice(), [0.3, 0.4].as_slice()];
        let r = block.eval(&moved);
        assert_eq!(r.len(), 4);
        assert!((r[0] - 0.5).abs() < 1e-15 && (r[1] - 0.25).abs() < 1e-15);
        assert!(r[2].abs() < 1e-15 && (r[3] - 0.1).abs() < 1e-12);
    }
}
