//! Levenberg-Marquardt with a proximal anchor.
//!
//! Each step minimizes ‖r(x)‖² + w‖x − a‖² linearized at x, damped by λ.
//! After an accepted step the anchor moves to the new iterate, so the
//! anchor regularizes every step without biasing the final solution
//! away from the constraint manifold.

use crate::linalg::Cholesky;
use crate::scalar::Scalar;

use super::{ResidualSystem, SolveOptions};

pub(crate) struct Outcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub history: Vec<f64>,
}

const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;

fn sum_sq<T: Scalar>(r: &[T]) -> T {
    r.iter().fold(T::zero(), |acc, &v| acc + v * v)
}

fn objective<T: Scalar>(sys: &ResidualSystem<T>, x: &[T], anchor: &[T], w: T) -> T {
    let prox = x.iter().zip(anchor).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
    sum_sq(&sys.residuals(x)) + w * prox
}

/// Gauss-Newton normal matrix `JᵀJ` (row-major) and gradient half `Jᵀr`.
fn normal_equations<T: Scalar>(sys: &ResidualSystem<T>, x: &[T]) -> (Vec<T>, Vec<T>) {
    let n = sys.len();
    let mut jtj = vec![T::zero(); n * n];
    let mut jtr = vec![T::zero(); n];
    for block in &sys.blocks {
        let cols = sys.columns(block);
        let (r, jac) = sys.block_jacobian(block, x);
        for (ri, row) in r.iter().zip(&jac) {
            for (a, &ca) in cols.iter().enumerate() {
                if row[a] == T::zero() {
                    continue;
                }
                jtr[ca] += row[a] * *ri;
                for (b, &cb) in cols.iter().enumerate() {
                    jtj[ca * n + cb] += row[a] * row[b];
                }
            }
        }
    }
    (jtj, jtr)
}

pub(crate) fn minimize<T: Scalar>(sys: &ResidualSystem<T>, opts: &SolveOptions) -> Outcome<T> {
    let n = sys.len();
    let mut x = sys.variables.clone();
    let w = T::lit(opts.w_anchor);
    let tol = T::lit(opts.tol);
    let mut f = sum_sq(&sys.residuals(&x));
    let mut history = vec![f.to_f64_lossy()];
    let mut iterations = 0;
    if sys.blocks.is_empty() || n == 0 || sys.max_violation(&x) < opts.violation_tol.min(opts.tol) {
        return Outcome { x, iterations, history };
    }
    let mut lambda = LAMBDA_INIT;
    while iterations < opts.max_iter {
        let (jtj, jtr) = normal_equations(sys, &x);
        if jtr.iter().all(|g| g.abs() <= T::lit(f64::MIN_POSITIVE)) {
            break;
        }
        let mut stepped = false;
        while iterations < opts.max_iter && lambda <= LAMBDA_MAX {
            iterations += 1;
            let mut a = jtj.clone();
            let damp = w + T::lit(lambda);
            for i in 0..n {
                a[i * n + i] += damp;
            }
            let Some(chol) = Cholesky::factor(&a, n) else {
                lambda *= 10.0;
                continue;
            };
            let neg: Vec<T> = jtr.iter().map(|&g| -g).collect();
            let delta = chol.solve(&neg);
            let trial: Vec<T> = x.iter().zip(&delta).map(|(&a, &d)| a + d).collect();
            let f_trial = objective(sys, &trial, &x, w);
            if f_trial.is_finite() && f_trial < f {
                let step = delta.iter().fold(T::zero(), |m, d| m.max(d.abs()));
                x = trial;
                // Re-centring the anchor at x drops the proximal term.
                f = sum_sq(&sys.residuals(&x));
                history.push(f.to_f64_lossy());
                lambda = (lambda / 10.0).max(1e-12);
                stepped = true;
                if step < tol {
                    return Outcome { x, iterations, history };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            break;
        }
    }
    Outcome { x, iterations, history }
}
