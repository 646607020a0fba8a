//! Synthetic constrained-sketch generators standing in for a real CAD
//! corpus: multi-rectangle layouts, slotted plates, and bolt-hole patterns,
//! plus unconstrained-by-design random sketches for codec fuzzing.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::sketch::{normalize_sketch, Constraint, ConstraintKind, Primitive, PrimitiveKind, Reference, Sketch, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthFamily {
    Rectangles,
    SlottedPlate,
    BoltCircle,
    /// Uniform mixture of the three families above.
    Mixed,
}

impl SynthFamily {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "rectangles" => Some(Self::Rectangles),
            "slotted_plate" => Some(Self::SlottedPlate),
            "bolt_circle" => Some(Self::BoltCircle),
            "mixed" => Some(Self::Mixed),
            _ => None,
        }
    }
}

#[derive(Default)]
struct Builder {
    prims: Vec<Primitive<f64>>,
    cons: Vec<Constraint>,
}

impl Builder {
    fn push(&mut self, p: Primitive<f64>) -> usize {
        self.prims.push(p);
        self.prims.len() - 1
    }

    fn unary(&mut self, kind: ConstraintKind, a: Reference) {
        self.cons.push(Constraint::unary(kind, a).expect("unary arity"));
    }

    fn binary(&mut self, kind: ConstraintKind, a: Reference, b: Reference) {
        self.cons.push(Constraint::binary(kind, a, b).expect("binary arity"));
    }

    fn finish(self) -> Sketch<f64> {
        Sketch::new(self.prims, self.cons).expect("generator emits valid references")
    }

    /// Closed axis-aligned rectangle traversed counter-clockwise from its
    /// lower-left corner. Returns the four line indices.
    fn rectangle(&mut self, x0: f64, y0: f64, w: f64, h: f64) -> [usize; 4] {
        let c = [[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]];
        let idx: Vec<usize> =
            (0..4).map(|i| self.push(Primitive::line(c[i][0], c[i][1], c[(i + 1) % 4][0], c[(i + 1) % 4][1]))).collect();
        for i in 0..4 {
            let (a, b) = (idx[i], idx[(i + 1) % 4]);
            self.binary(ConstraintKind::Coincident, Reference::new(a, Slot::Second), Reference::new(b, Slot::First));
        }
        for (i, &l) in idx.iter().enumerate() {
            let kind = if i % 2 == 0 { ConstraintKind::Horizontal } else { ConstraintKind::Vertical };
            self.unary(kind, Reference::whole(l));
        }
        [idx[0], idx[1], idx[2], idx[3]]
    }
}

/// A sketch of `count` independent fully-constrained rectangles
/// (4 lines, 4 corner coincidences, 2 horizontal, 2 vertical each).
pub fn rectangles(rng: &mut impl Rng, count: usize) -> Sketch<f64> {
    let mut b = Builder::default();
    for _ in 0..count {
        let w = rng.random_range(0.1..0.5);
        let h = rng.random_range(0.1..0.5);
        let x0 = rng.random_range(-0.5..0.5 - w);
        let y0 = rng.random_range(-0.5..0.5 - h);
        b.rectangle(x0, y0, w, h);
    }
    b.finish()
}

/// The unit-square rectangle used as a fixture throughout the tests.
pub fn unit_rectangle() -> Sketch<f64> {
    let mut b = Builder::default();
    b.rectangle(0.0, 0.0, 1.0, 1.0);
    b.finish()
}

/// Rectangular plate with an obround slot (two horizontal lines capped by
/// tangent half-circle arcs) and up to three equal round holes.
pub fn slotted_plate(rng: &mut impl Rng) -> Sketch<f64> {
    let mut b = Builder::default();
    let (w, h) = (rng.random_range(0.7..1.0), rng.random_range(0.5..0.8));
    b.rectangle(-w / 2.0, -h / 2.0, w, h);

    let r = rng.random_range(0.04..0.08);
    let half = rng.random_range(0.08..0.2);
    let cx = rng.random_range(-w / 2.0 + half + r + 0.05..w / 2.0 - half - r - 0.05);
    let cy = rng.random_range(-0.05..0.05);
    let top = b.push(Primitive::line(cx - half, cy + r, cx + half, cy + r));
    let right = b.push(
        Primitive::arc([cx + half, cy + r], [cx + half + r, cy], [cx + half, cy - r]).expect("non-degenerate cap"),
    );
    let bottom = b.push(Primitive::line(cx + half, cy - r, cx - half, cy - r));
    let left = b.push(
        Primitive::arc([cx - half, cy - r], [cx - half - r, cy], [cx - half, cy + r]).expect("non-degenerate cap"),
    );
    let ring = [top, right, bottom, left];
    for i in 0..4 {
        let (a, c) = (ring[i], ring[(i + 1) % 4]);
        b.binary(ConstraintKind::Coincident, Reference::new(a, Slot::Second), Reference::new(c, Slot::First));
    }
    for (line, arc) in [(top, right), (bottom, right), (bottom, left), (top, left)] {
        b.binary(ConstraintKind::Tangent, Reference::whole(line), Reference::whole(arc));
    }
    b.unary(ConstraintKind::Horizontal, Reference::whole(top));
    b.binary(ConstraintKind::Equal, Reference::whole(right), Reference::whole(left));

    let holes = rng.random_range(0..=3usize);
    let hr = rng.random_range(0.02..0.04);
    let mut first = None;
    for k in 0..holes {
        let x = -w / 2.0 + (k as f64 + 1.0) * w / (holes as f64 + 1.0);
        let y = if cy > 0.0 { -h / 4.0 } else { h / 4.0 };
        let c = b.push(Primitive::circle(x, y, hr).expect("positive radius"));
        match first {
            None => first = Some(c),
            Some(f) => b.binary(ConstraintKind::Equal, Reference::whole(f), Reference::whole(c)),
        }
    }
    b.finish()
}

/// Square plate with a construction pitch circle and 3 to 6 equal holes
/// whose centres lie on it.
pub fn bolt_circle(rng: &mut impl Rng) -> Sketch<f64> {
    let mut b = Builder::default();
    let side = rng.random_range(0.8..1.0);
    b.rectangle(-side / 2.0, -side / 2.0, side, side);
    let pitch_r = rng.random_range(0.2..0.3);
    let pitch = b.push(Primitive::circle(0.0, 0.0, pitch_r).expect("positive radius").construction(true));
    let n = rng.random_range(3..=6usize);
    let hr = rng.random_range(0.02..0.05);
    let phase = rng.random_range(0.0..2.0 * PI);
    let mut first = None;
    for k in 0..n {
        let t = phase + 2.0 * PI * k as f64 / n as f64;
        let c = b.push(Primitive::circle(pitch_r * t.cos(), pitch_r * t.sin(), hr).expect("positive radius"));
        b.binary(ConstraintKind::Coincident, Reference::new(c, Slot::Center), Reference::whole(pitch));
        match first {
            None => first = Some(c),
            Some(f) => b.binary(ConstraintKind::Equal, Reference::whole(f), Reference::whole(c)),
        }
    }
    b.finish()
}

/// One sketch of the requested family, normalized.
pub fn family_sketch(rng: &mut impl Rng, family: SynthFamily) -> Sketch<f64> {
    let s = match family {
        SynthFamily::Rectangles => {
            let n = rng.random_range(2..=4);
            rectangles(rng, n)
        }
        SynthFamily::SlottedPlate => slotted_plate(rng),
        SynthFamily::BoltCircle => bolt_circle(rng),
        SynthFamily::Mixed => {
            let f = [SynthFamily::Rectangles, SynthFamily::SlottedPlate, SynthFamily::BoltCircle][rng.random_range(0..3)];
            return family_sketch(rng, f);
        }
    };
    normalize_sketch(&s).expect("generated sketches have extent").0
}

/// `n` normalized sketches of one family, reproducible from `seed`.
pub fn synthetic_corpus(family: SynthFamily, n: usize, seed: u64) -> Vec<Sketch<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| family_sketch(&mut rng, family)).collect()
}

/// Adds independent Gaussian noise to every parameter. Radii are kept
/// positive; arcs that would degenerate keep their original parameters.
pub fn perturb(s: &Sketch<f64>, sigma: f64, rng: &mut impl Rng) -> Sketch<f64> {
    let noise = Normal::new(0.0, sigma).expect("finite sigma");
    let prims = s
        .primitives()
        .iter()
        .map(|p| {
            let mut params: Vec<f64> = p.params().iter().map(|&v| v + noise.sample(rng)).collect();
            if p.kind() == PrimitiveKind::Circle {
                params[2] = params[2].abs().max(1e-3);
            }
            p.with_params(params).unwrap_or_else(|_| p.clone())
        })
        .collect();
    s.with_primitives(prims).expect("same kinds")
}

/// A random normalized sketch of 1..=`max_primitives` primitives with
/// random (not necessarily geometrically consistent) constraints. Arcs are
/// kept large enough that quantizing their three points never collapses
/// them.
pub fn random_valid_sketch(rng: &mut impl Rng, max_primitives: usize) -> Sketch<f64> {
    loop {
        let n = rng.random_range(1..=max_primitives.max(1));
        let prims: Vec<Primitive<f64>> = (0..n).map(|_| random_primitive(rng)).collect();
        let Ok((normed, _)) = normalize_sketch(&Sketch::from_primitives(prims)) else {
            continue;
        };
        if !arcs_survive_quantization(&normed) {
            continue;
        }
        let m = rng.random_range(0..=2 * n);
        let cons = (0..m).map(|_| random_constraint(rng, normed.primitives())).collect();
        return normed.with_constraints(cons).expect("references drawn from the sketch");
    }
}

fn random_primitive(rng: &mut impl Rng) -> Primitive<f64> {
    fn pt(rng: &mut impl Rng) -> [f64; 2] {
        [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]
    }
    let construction = rng.random_bool(0.15);
    let p = match rng.random_range(0..4) {
        0 => {
            let a = pt(rng);
            let b = pt(rng);
            Primitive::line(a[0], a[1], b[0], b[1])
        }
        1 => {
            let c = pt(rng);
            Primitive::point(c[0], c[1])
        }
        2 => {
            let c = pt(rng);
            Primitive::circle(c[0], c[1], rng.random_range(0.05..0.5)).expect("positive radius")
        }
        _ => {
            let c = pt(rng);
            let r = rng.random_range(0.2..0.5);
            let start = rng.random_range(0.0..2.0 * PI);
            let sweep = rng.random_range(PI / 3.0..5.0 * PI / 3.0);
            let at = |t: f64| [c[0] + r * t.cos(), c[1] + r * t.sin()];
            Primitive::arc(at(start), at(start + sweep / 2.0), at(start + sweep)).expect("wide arc")
        }
    };
    p.construction(construction)
}

fn arcs_survive_quantization(s: &Sketch<f64>) -> bool {
    use crate::sketch::{dequantize, quantize, QUANT_BITS};
    s.primitives().iter().filter(|p| p.kind() == PrimitiveKind::Arc).all(|p| {
        let q: Vec<f64> =
            p.params().iter().map(|&v| dequantize(quantize(v, QUANT_BITS, false), QUANT_BITS, false)).collect();
        p.with_params(q).is_ok()
    })
}

fn random_constraint(rng: &mut impl Rng, prims: &[Primitive<f64>]) -> Constraint {
    let kind = ConstraintKind::ALL[rng.random_range(0..ConstraintKind::ALL.len())];
    let arity = if kind.accepts_arity(1) && (!kind.accepts_arity(2) || rng.random_bool(0.5)) { 1 } else { 2 };
    let refs = (0..arity)
        .map(|_| {
            let i = rng.random_range(0..prims.len());
            let slots = prims[i].kind().slots();
            Reference::new(i, slots[rng.random_range(0..slots.len())])
        })
        .collect();
    Constraint::new(kind, refs).expect("arity chosen from the kind")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::check_satisfied;
    use crate::sketch::degrees_of_freedom;

    #[test]
    fn generators_are_satisfied() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            for f in [SynthFamily::Rectangles, SynthFamily::SlottedPlate, SynthFamily::BoltCircle] {
                let s = family_sketch(&mut rng, f);
                assert!(check_satisfied(&s, 1e-9).unwrap(), "{f:?}");
                assert!((6..=16).contains(&s.primitives().len()), "{f:?} {}", s.primitives().len());
            }
        }
    }

    #[test]
    fn unit_rectangle_dof() {
        let d = degrees_of_freedom(&unit_rectangle());
        assert_eq!((d.total, d.removed, d.net), (16, 12, 4));
    }

    #[test]
    fn corpus_is_reproducible() {
        assert_eq!(synthetic_corpus(SynthFamily::Mixed, 5, 9), synthetic_corpus(SynthFamily::Mixed, 5, 9));
    }
}
