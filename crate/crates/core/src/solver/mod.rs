//! Damped least-squares constraint solver.
//!
//! Every constraint becomes a residual block over the parameters of the
//! primitives it references. Levenberg-Marquardt minimizes the squared
//! residuals plus a weak quadratic pull towards an anchor, which keeps
//! under-constrained sketches close to where the user left them.

pub mod dual;
mod lm;
mod residual;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::sketch::geom::ArcGeometry;
use crate::sketch::{ConstraintKind, Primitive, PrimitiveKind, Reference, Sketch};

pub use residual::{describe_reference, residual, ResidualBlock};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("no residual defined for {kind} on ({refs})")]
    UnsupportedPair { kind: ConstraintKind, refs: String },
    #[error("reference {0:?} does not resolve against the sketch")]
    InvalidReference(Reference),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Step-size tolerance (max-norm of an accepted update) for termination.
    pub tol: f64,
    pub w_anchor: f64,
    /// Max constraint violation below which the solve counts as converged.
    pub violation_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-8, w_anchor: 1e-3, violation_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub max_constraint_violation: f64,
    /// Objective value after the start and after every accepted step.
    #[serde(skip, default)]
    pub objective_history: Vec<f64>,
}

/// All primitive parameters flattened into one vector plus the residual
/// blocks reading them.
#[derive(Debug, Clone)]
pub struct ResidualSystem<T> {
    pub variables: Vec<T>,
    pub blocks: Vec<ResidualBlock>,
    offsets: Vec<usize>,
    sizes: Vec<usize>,
}

impl<T: Scalar> ResidualSystem<T> {
    pub fn new(s: &Sketch<T>) -> Result<Self, SolveError> {
        let mut offsets = Vec::with_capacity(s.primitives().len());
        let mut sizes = Vec::with_capacity(s.primitives().len());
        let mut variables = Vec::new();
        for p in s.primitives() {
            offsets.push(variables.len());
            sizes.push(p.params().len());
            variables.extend_from_slice(p.params());
        }
        let blocks = s
            .constraints()
            .iter()
            .enumerate()
            .map(|(i, c)| ResidualBlock::build(i, c, s))
            .collect::<Result<_, _>>()?;
        Ok(Self { variables, blocks, offsets, sizes })
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    /// Global variable indices read by `block`, in its local order.
    pub fn columns(&self, block: &ResidualBlock) -> Vec<usize> {
        block.primitives.iter().flat_map(|&p| self.offsets[p]..self.offsets[p] + self.sizes[p]).collect()
    }

    fn locals<'a>(&self, block: &ResidualBlock, x: &'a [T]) -> Vec<&'a [T]> {
        block.primitives.iter().map(|&p| &x[self.offsets[p]..self.offsets[p] + self.sizes[p]]).collect()
    }

    pub fn block_residual(&self, block: &ResidualBlock, x: &[T]) -> Vec<T> {
        block.eval(&self.locals(block, x))
    }

    /// Residuals of `block` and its dense Jacobian over [`Self::columns`].
    pub fn block_jacobian(&self, block: &ResidualBlock, x: &[T]) -> (Vec<T>, Vec<Vec<T>>) {
        block.eval_with_jacobian(&self.locals(block, x))
    }

    /// Concatenated constraint residuals (anchor terms excluded).
    pub fn residuals(&self, x: &[T]) -> Vec<T> {
        self.blocks.iter().flat_map(|b| self.block_residual(b, x)).collect()
    }

    fn max_violation(&self, x: &[T]) -> f64 {
        self.residuals(x).iter().map(|r| r.to_f64_lossy().abs()).fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
    }

    fn write_back(&self, s: &Sketch<T>, x: &[T]) -> Vec<Result<Primitive<T>, ()>> {
        s.primitives()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut params = x[self.offsets[i]..self.offsets[i] + self.sizes[i]].to_vec();
                if params.as_slice() == p.params() {
                    return Ok(p.clone());
                }
                match p.kind() {
                    PrimitiveKind::Circle => params[2] = params[2].abs(),
                    PrimitiveKind::Arc => {
                        let a = ArcGeometry::from_points([params[0], params[1]], [params[2], params[3]], [params[4], params[5]]);
                        if let Some(a) = a {
                            let m = a.point_at(T::lit(0.5));
                            params[2] = m[0];
                            params[3] = m[1];
                        }
                    }
                    _ => {}
                }
                p.with_params(params).map_err(|_| ())
            })
            .collect()
    }
}

/// Solves the sketch's constraints starting from its current geometry.
///
/// Non-convergence is reported, not raised; the returned sketch is always a
/// valid best effort with the same kinds, flags, and constraints.
pub fn solve<T: Scalar>(s: &Sketch<T>, opts: &SolveOptions) -> Result<(Sketch<T>, SolveReport), SolveError> {
    let system = ResidualSystem::new(s)?;
    let outcome = lm::minimize(&system, opts);
    let mut fell_back = false;
    let prims: Vec<Primitive<T>> = system
        .write_back(s, &outcome.x)
        .into_iter()
        .zip(s.primitives())
        .map(|(p, orig)| {
            p.unwrap_or_else(|()| {
                fell_back = true;
                orig.clone()
            })
        })
        .collect();
    let solved = s.with_primitives(prims).expect("kinds and constraints are unchanged");
    let x: Vec<T> = solved.primitives().iter().flat_map(|p| p.params().iter().copied()).collect();
    let r = system.residuals(&x);
    let residual_norm = r.iter().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>().sqrt();
    let max_constraint_violation = system.max_violation(&x);
    let converged = !fell_back && max_constraint_violation < opts.violation_tol;
    let report = SolveReport {
        converged,
        iterations: outcome.iterations,
        residual_norm,
        max_constraint_violation,
        objective_history: outcome.history,
    };
    Ok((solved, report))
}

/// True iff every constraint's residual max-norm is below `tol`.
pub fn check_satisfied<T: Scalar>(s: &Sketch<T>, tol: f64) -> Result<bool, SolveError> {
    for c in s.constraints() {
        let r = residual(c, s)?;
        if r.iter().any(|v| !(v.to_f64_lossy().abs() < tol)) {
            return Ok(false);
        }
    }
    Ok(true)
}
