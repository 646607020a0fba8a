//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sketchforge_core::sketch::{Constraint, ConstraintKind, Primitive, PrimitiveKind, Reference, Sketch, Slot};
use sketchforge_core::seqmodel::{Example, ModelConfig, ModelKind, SequenceModel};
use sketchforge_core::solver::{ResidualBlock, ResidualSystem};

/// Two of each primitive kind, at random positions.
pub fn random_config(rng: &mut impl Rng) -> Sketch<f64> {
    let mut u = || rng.random_range(-1.0f64..1.0);
    let mut prims = Vec::new();
    for _ in 0..2 {
        prims.push(Primitive::line(u(), u(), u(), u()));
    }
    for _ in 0..2 {
        let (x, y) = (u(), u());
        prims.push(Primitive::circle(x, y, 0.1 + u().abs()).unwrap());
    }
    for _ in 0..2 {
        let (cx, cy, r) = (u(), u(), 0.2 + u().abs());
        let t0 = u() * PI;
        let sweep = PI / 3.0 + (u().abs()) * PI;
        let at = |t: f64| [cx + r * t.cos(), cy + r * t.sin()];
        prims.push(Primitive::arc(at(t0), at(t0 + sweep / 2.0), at(t0 + sweep)).unwrap());
    }
    for _ in 0..2 {
        prims.push(Primitive::point(u(), u()));
    }
    Sketch::from_primitives(prims)
}

/// Every (kind, references) combination over the layout of
/// [`random_config`] that has a residual defined.
pub fn supported_constraints(s: &Sketch<f64>) -> Vec<Constraint> {
    let refs: Vec<Reference> = s
        .primitives()
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.kind().slots().iter().map(move |&slot| Reference::new(i, slot)))
        .collect();
    let mut out = Vec::new();
    for kind in ConstraintKind::ALL {
        if kind.accepts_arity(1) {
            for &a in &refs {
                let c = Constraint::unary(kind, a).unwrap();
                if ResidualBlock::build(0, &c, s).is_ok() {
                    out.push(c);
                }
            }
        }
        if kind.accepts_arity(2) {
            for &a in &refs {
                for &b in &refs {
                    if a.primitive == b.primitive {
                        continue;
                    }
                    let c = Constraint::binary(kind, a, b).unwrap();
                    if ResidualBlock::build(0, &c, s).is_ok() {
                        out.push(c);
                    }
                }
            }
        }
    }
    out
}

/// Frobenius relative error between the analytic block Jacobian and
/// central differences with step `h`.
pub fn jacobian_rel_error(s: &Sketch<f64>, c: &Constraint, h: f64) -> f64 {
    let sketch = s.with_constraints(vec![c.clone()]).unwrap();
    let sys = ResidualSystem::new(&sketch).unwrap();
    let block = &sys.blocks[0];
    let x = sys.variables.clone();
    let cols = sys.columns(block);
    let (_, jac) = sys.block_jacobian(block, &x);
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &col) in cols.iter().enumerate() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[col] += h;
        xm[col] -= h;
        let rp = sys.block_residual(block, &xp);
        let rm = sys.block_residual(block, &xm);
        for (row, (p, m)) in rp.iter().zip(&rm).enumerate() {
            let fd = (p - m) / (2.0 * h);
            num += (jac[row][k] - fd).powi(2);
            den += fd * fd;
        }
    }
    if den == 0.0 && num == 0.0 {
        0.0
    } else {
        num.sqrt() / den.sqrt().max(1e-12)
    }
}

/// Largest relative Jacobian error over `configs` random configurations
/// and every supported constraint, plus the number of blocks checked.
pub fn jacobian_sweep(rng: &mut impl Rng, configs: usize) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..configs {
        let s = random_config(rng);
        for c in supported_constraints(&s) {
            let e = jacobian_rel_error(&s, &c, 1e-6);
            worst = worst.max(e);
            checked += 1;
        }
    }
    (worst, checked)
}

/// Max-norm of every constraint residual, computed straight from geometry
/// rather than through the solver's residual blocks. Only covers the
/// constraint kinds the synthetic generators emit.
pub fn violation_oracle(s: &Sketch<f64>) -> f64 {
    let mut worst = 0.0f64;
    let point = |r: &Reference| -> [f64; 2] { s.primitives()[r.primitive].slot_point(r.slot).unwrap() };
    let circle = |i: usize| -> ([f64; 2], f64) {
        let p = s.primitives()[i].params();
        match s.primitives()[i].kind() {
            PrimitiveKind::Circle => ([p[0], p[1]], p[2]),
            _ => {
                let c = s.primitives()[i].slot_point(Slot::Center).unwrap();
                (c, ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt())
            }
        }
    };
    for c in s.constraints() {
        let r = c.refs();
        let v: f64 = match c.kind() {
            ConstraintKind::Coincident => {
                let a = &r[0];
                let b = &r[1];
                let bk = s.primitives()[b.primitive].kind();
                if b.slot == Slot::Whole && matches!(bk, PrimitiveKind::Circle | PrimitiveKind::Arc) {
                    let p = point(a);
                    let (cc, rr) = circle(b.primitive);
                    (((p[0] - cc[0]).powi(2) + (p[1] - cc[1]).powi(2)).sqrt() - rr).abs()
                } else {
                    let (p, q) = (point(a), point(b));
                    (p[0] - q[0]).abs().max((p[1] - q[1]).abs())
                }
            }
            ConstraintKind::Horizontal | ConstraintKind::Vertical => {
                let p = s.primitives()[r[0].primitive].params();
                let (dx, dy) = (p[2] - p[0], p[3] - p[1]);
                let len = (dx * dx + dy * dy).sqrt();
                if c.kind() == ConstraintKind::Horizontal { dy.abs() / len } else { dx.abs() / len }
            }
            ConstraintKind::Tangent => {
                let p = s.primitives()[r[0].primitive].params();
                let (cc, rr) = circle(r[1].primitive);
                let (dx, dy) = (p[2] - p[0], p[3] - p[1]);
                let dist = ((cc[0] - p[0]) * dy - (cc[1] - p[1]) * dx).abs() / (dx * dx + dy * dy).sqrt();
                (dist - rr).abs()
            }
            ConstraintKind::Equal => {
                let ka = s.primitives()[r[0].primitive].kind();
                if ka == PrimitiveKind::Line {
                    let len = |i: usize| {
                        let p = s.primitives()[i].params();
                        ((p[2] - p[0]).powi(2) + (p[3] - p[1]).powi(2)).sqrt()
                    };
                    (len(r[0].primitive) - len(r[1].primitive)).abs()
                } else {
                    (circle(r[0].primitive).1 - circle(r[1].primitive).1).abs()
                }
            }
            other => panic!("oracle does not cover {other}"),
        };
        worst = worst.max(v);
    }
    worst
}

/// Worst relative error between analytic gradients and central
/// differences over 50 random parameters of a tiny f64 model.
pub fn gradcheck(kind: ModelKind, ex: &Example, seed: u64) -> f64 {
    let cfg = ModelConfig { init_seed: seed, ..ModelConfig::tiny(kind) };
    let mut model = SequenceModel::<f64>::new(cfg).unwrap();
    // Break the symmetric initial biases/gains so their gradients are generic.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..model.params.len() {
        model.params.tensor_mut(i).data.iter_mut().for_each(|v| *v += rng.random_range(-0.1..0.1));
    }
    let (_, grads) = model.loss_and_gradients(ex).unwrap();
    let h = 1e-4;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let i = rng.random_range(0..model.params.len());
        let j = rng.random_range(0..model.params.tensor(i).data.len());
        let orig = model.params.tensor(i).data[j];
        model.params.tensor_mut(i).data[j] = orig + h;
        let up = model.loss(ex).unwrap();
        model.params.tensor_mut(i).data[j] = orig - h;
        let down = model.loss(ex).unwrap();
        model.params.tensor_mut(i).data[j] = orig;
        let numeric = (up - down) / (2.0 * h);
        let analytic = grads[i].data[j];
        let err = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
        worst = worst.max(err);
    }
    worst
}
