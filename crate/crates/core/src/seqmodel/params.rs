//! Named parameter tensors and the AdamW optimizer.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::scalar::Scalar;

use super::tape::ParamGrads;
use super::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> Default for ParamSet<T> {
    fn default() -> Self {
        Self { names: Vec::new(), tensors: Vec::new(), index: HashMap::new() }
    }
}

impl<T: Scalar> ParamSet<T> {
    pub fn insert(&mut self, name: impl Into<String>, t: Tensor<T>) -> usize {
        let name = name.into();
        assert!(!self.index.contains_key(&name), "duplicate parameter {name}");
        self.index.insert(name.clone(), self.tensors.len());
        self.names.push(name);
        self.tensors.push(t);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn tensor(&self, i: usize) -> &Tensor<T> {
        &self.tensors[i]
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut Tensor<T> {
        &mut self.tensors[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Total number of scalar parameters.
    pub fn count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn cast<U: Scalar>(&self) -> ParamSet<U> {
        ParamSet { names: self.names.clone(), tensors: self.tensors.iter().map(Tensor::cast).collect(), index: self.index.clone() }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }
}

pub(crate) fn normal_tensor<T: Scalar>(rows: usize, cols: usize, std: f64, rng: &mut impl Rng) -> Tensor<T> {
    let dist = Normal::new(0.0, std).expect("finite std");
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| T::lit(dist.sample(rng))).collect())
}

pub(crate) fn filled<T: Scalar>(rows: usize, cols: usize, v: f64) -> Tensor<T> {
    Tensor::from_vec(rows, cols, vec![T::lit(v); rows * cols])
}

/// Adam with decoupled weight decay. Decay is skipped for 1-row tensors
/// (biases and normalization gains).
#[derive(Debug, Clone)]
pub struct AdamW<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamW<T> {
    pub fn new(params: &ParamSet<T>, weight_decay: f64) -> Self {
        let zeros = |t: &Tensor<T>| Tensor::zeros(t.rows, t.cols);
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            m: params.tensors.iter().map(zeros).collect(),
            v: params.tensors.iter().map(zeros).collect(),
        }
    }

    pub fn update(&mut self, params: &mut ParamSet<T>, grads: &ParamGrads<T>, lr: f64) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let (b1, b2) = (T::lit(self.beta1), T::lit(self.beta2));
        let (one_b1, one_b2) = (T::lit(1.0 - self.beta1), T::lit(1.0 - self.beta2));
        let step = T::lit(lr / bc1);
        let inv_bc2 = T::lit(1.0 / bc2);
        let eps = T::lit(self.eps);
        for (i, g) in grads.iter().enumerate() {
            let p = &mut params.tensors[i];
            if p.rows > 1 && self.weight_decay > 0.0 {
                let keep = T::lit(1.0 - lr * self.weight_decay);
                p.data.iter_mut().for_each(|x| *x *= keep);
            }
            let Some(g) = g else { continue };
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..p.data.len() {
                let gj = g.data[j];
                m.data[j] = b1 * m.data[j] + one_b1 * gj;
                v.data[j] = b2 * v.data[j] + one_b2 * gj * gj;
                p.data[j] -= step * m.data[j] / ((v.data[j] * inv_bc2).sqrt() + eps);
            }
        }
    }
}

/// One-cycle schedule: cosine warm-up from `max/div` to `max` over the
/// first `pct_start` of steps, then cosine annealing to `max/(div·final_div)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneCycle {
    pub max_lr: f64,
    pub total_steps: usize,
    pub pct_start: f64,
    pub div_factor: f64,
    pub final_div_factor: f64,
}

impl OneCycle {
    pub fn lr(&self, step: usize) -> f64 {
        let initial = self.max_lr / self.div_factor;
        let fin = initial / self.final_div_factor;
        let warm = ((self.total_steps as f64) * self.pct_start).max(1.0);
        let t = step as f64;
        let cos = |from: f64, to: f64, frac: f64| to + (from - to) * 0.5 * (1.0 + (std::f64::consts::PI * frac.clamp(0.0, 1.0)).cos());
        if t < warm {
            cos(initial, self.max_lr, t / warm)
        } else {
            let rest = (self.total_steps as f64 - warm).max(1.0);
            cos(self.max_lr, fin, (t - warm) / rest)
        }
    }
}
