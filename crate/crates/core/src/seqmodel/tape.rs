//! Reverse-mode differentiation over a fixed set of tensor operators.
//!
//! A [`Tape`] records every operation of one forward pass; [`Tape::backward`]
//! walks it in reverse and returns gradients for the parameters that were
//! read.

use crate::scalar::Scalar;

use super::params::ParamSet;
use super::tensor::Tensor;

/// Handle to a node on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

const LN_EPS: f64 = 1e-5;

enum Op<T> {
    Leaf,
    Param(usize),
    Rows { src: Var, idx: Vec<usize> },
    Add(Var, Var),
    AddRow(Var, Var),
    MatMul(Var, Var),
    MatMulNT(Var, Var),
    Scale(Var, T),
    LayerNorm { x: Var, gain: Var, bias: Var, xhat: Tensor<T>, rstd: Vec<T> },
    Gelu(Var),
    Attention { q: Var, k: Var, v: Var, heads: usize, probs: Vec<Tensor<T>> },
    ConcatRows(Vec<Var>),
    CrossEntropy { logits: Var, targets: Vec<usize>, probs: Tensor<T> },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

pub struct Tape<'p, T: Scalar> {
    params: &'p ParamSet<T>,
    nodes: Vec<Node<T>>,
    param_nodes: Vec<Option<Var>>,
}

/// Gradients aligned with the parameter set; `None` for unread parameters.
pub type ParamGrads<T> = Vec<Option<Tensor<T>>>;

impl<'p, T: Scalar> Tape<'p, T> {
    pub fn new(params: &'p ParamSet<T>) -> Self {
        Self { params, nodes: Vec::new(), param_nodes: vec![None; params.len()] }
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn input(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf)
    }

    pub fn param(&mut self, index: usize) -> Var {
        if let Some(v) = self.param_nodes[index] {
            return v;
        }
        let v = self.push(self.params.tensor(index).clone(), Op::Param(index));
        self.param_nodes[index] = Some(v);
        v
    }

    /// Row gather (embedding lookup / selection).
    pub fn rows(&mut self, src: Var, idx: &[usize]) -> Var {
        let s = self.value(src);
        let mut out = Tensor::zeros(idx.len(), s.cols);
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).copy_from_slice(s.row(i));
        }
        self.push(out, Op::Rows { src, idx: idx.to_vec() })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        self.push(out, Op::Add(a, b))
    }

    /// Adds a `1×c` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let mut out = self.value(a).clone();
        let r = self.value(row);
        assert_eq!((r.rows, r.cols), (1, out.cols), "broadcast row shape");
        for i in 0..out.rows {
            out.row_mut(i).iter_mut().zip(&r.data).for_each(|(x, &b)| *x += b);
        }
        self.push(out, Op::AddRow(a, row))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).matmul(self.value(b));
        self.push(out, Op::MatMul(a, b))
    }

    /// `a·bᵀ`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        let mut out = Tensor::zeros(va.rows, vb.rows);
        out.add_matmul(va, false, vb, true);
        self.push(out, Op::MatMulNT(a, b))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        let mut out = self.value(a).clone();
        out.data.iter_mut().for_each(|x| *x *= s);
        self.push(out, Op::Scale(a, s))
    }

    /// Per-row layer normalization with affine `gain`/`bias` rows.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Var {
        let v = self.value(x);
        let (n, d) = v.shape();
        let (g, b) = (self.value(gain), self.value(bias));
        let mut xhat = Tensor::zeros(n, d);
        let mut out = Tensor::zeros(n, d);
        let mut rstd = Vec::with_capacity(n);
        let inv_d = T::one() / T::from_usize_lossy(d);
        for i in 0..n {
            let row = v.row(i);
            let mean = row.iter().copied().sum::<T>() * inv_d;
            let var = row.iter().map(|&a| (a - mean) * (a - mean)).sum::<T>() * inv_d;
            let r = T::one() / (var + T::lit(LN_EPS)).sqrt();
            rstd.push(r);
            for j in 0..d {
                let h = (row[j] - mean) * r;
                xhat.data[i * d + j] = h;
                out.data[i * d + j] = h * g.data[j] + b.data[j];
            }
        }
        self.push(out, Op::LayerNorm { x, gain, bias, xhat, rstd })
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        let mut out = self.value(x).clone();
        out.data.iter_mut().for_each(|v| *v = gelu(*v).0);
        self.push(out, Op::Gelu(x))
    }

    /// Multi-head scaled dot-product attention. With `causal`, query `i`
    /// only sees keys `j ≤ i`; masked keys are never read, so outputs for a
    /// prefix do not depend on later rows at all.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, heads: usize, causal: bool) -> Var {
        let (qv, kv, vv) = (self.value(q), self.value(k), self.value(v));
        let (nq, d) = qv.shape();
        let nk = kv.rows;
        assert_eq!(d % heads, 0, "embed dim must divide into heads");
        assert!(!causal || nq == nk, "causal attention needs square scores");
        let dh = d / heads;
        let scale = T::one() / T::from_usize_lossy(dh).sqrt();
        let mut out = Tensor::zeros(nq, d);
        let mut probs = Vec::with_capacity(heads);
        for h in 0..heads {
            let off = h * dh;
            let mut p = Tensor::zeros(nq, nk);
            for i in 0..nq {
                let visible = if causal { i + 1 } else { nk };
                let qi = &qv.row(i)[off..off + dh];
                let mut max = T::neg_infinity();
                for j in 0..visible {
                    let kj = &kv.row(j)[off..off + dh];
                    let s = qi.iter().zip(kj).fold(T::zero(), |acc, (&a, &b)| acc + a * b) * scale;
                    p.data[i * nk + j] = s;
                    max = max.max(s);
                }
                let mut sum = T::zero();
                for j in 0..visible {
                    let e = (p.data[i * nk + j] - max).exp();
                    p.data[i * nk + j] = e;
                    sum += e;
                }
                for j in 0..visible {
                    p.data[i * nk + j] /= sum;
                }
                let orow = &mut out.data[i * d + off..i * d + off + dh];
                for j in 0..visible {
                    let w = p.data[i * nk + j];
                    let vj = &vv.row(j)[off..off + dh];
                    orow.iter_mut().zip(vj).for_each(|(o, &x)| *o += w * x);
                }
            }
            probs.push(p);
        }
        self.push(out, Op::Attention { q, k, v, heads, probs })
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let cols = self.value(parts[0]).cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            assert_eq!(t.cols, cols, "concat column mismatch");
            data.extend_from_slice(&t.data);
            rows += t.rows;
        }
        self.push(Tensor::from_vec(rows, cols, data), Op::ConcatRows(parts.to_vec()))
    }

    /// Summed negative log-likelihood (nats) of `targets` under row-wise
    /// softmax of `logits`, as a 1×1 tensor.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Var {
        let l = self.value(logits);
        assert_eq!(l.rows, targets.len(), "one target per logits row");
        let mut probs = Tensor::zeros(l.rows, l.cols);
        let mut total = T::zero();
        for (i, &t) in targets.iter().enumerate() {
            let row = l.row(i);
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let sum: T = row.iter().map(|&x| (x - max).exp()).sum();
            let lse = max + sum.ln();
            for (j, &x) in row.iter().enumerate() {
                probs.data[i * l.cols + j] = (x - lse).exp();
            }
            total += lse - row[t];
        }
        self.push(Tensor::scalar(total), Op::CrossEntropy { logits, targets: targets.to_vec(), probs })
    }

    /// Gradients of the scalar node `loss` with respect to every parameter
    /// read on this tape.
    pub fn backward(&self, loss: Var) -> ParamGrads<T> {
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(T::one()));
        let mut out: ParamGrads<T> = vec![None; self.params.len()];
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::Param(p) => out[*p] = Some(g),
                Op::Rows { src, idx: rows } => {
                    let s = self.value(*src);
                    let acc = slot(&mut grads, *src, s.rows, s.cols);
                    for (r, &i) in rows.iter().enumerate() {
                        acc.row_mut(i).iter_mut().zip(g.row(r)).for_each(|(a, &b)| *a += b);
                    }
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, &g);
                    accumulate(&mut grads, *b, &g);
                }
                Op::AddRow(a, row) => {
                    accumulate(&mut grads, *a, &g);
                    let acc = slot(&mut grads, *row, 1, g.cols);
                    for i in 0..g.rows {
                        acc.data.iter_mut().zip(g.row(i)).for_each(|(x, &y)| *x += y);
                    }
                }
                Op::MatMul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    slot(&mut grads, *a, va.rows, va.cols).add_matmul(&g, false, vb, true);
                    slot(&mut grads, *b, vb.rows, vb.cols).add_matmul(va, true, &g, false);
                }
                Op::MatMulNT(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    slot(&mut grads, *a, va.rows, va.cols).add_matmul(&g, false, vb, false);
                    slot(&mut grads, *b, vb.rows, vb.cols).add_matmul(&g, true, va, false);
                }
                Op::Scale(a, s) => {
                    let acc = slot(&mut grads, *a, g.rows, g.cols);
                    acc.data.iter_mut().zip(&g.data).for_each(|(x, &y)| *x += y * *s);
                }
                Op::LayerNorm { x, gain, bias, xhat, rstd } => {
                    let (n, d) = g.shape();
                    let gv = self.value(*gain).data.clone();
                    let mut dg = vec![T::zero(); d];
                    let mut db = vec![T::zero(); d];
                    let mut dx = Tensor::zeros(n, d);
                    let inv_d = T::one() / T::from_usize_lossy(d);
                    for i in 0..n {
                        let gy = g.row(i);
                        let xh = xhat.row(i);
                        let mut mean_dxh = T::zero();
                        let mut mean_dxh_xh = T::zero();
                        for j in 0..d {
                            dg[j] += gy[j] * xh[j];
                            db[j] += gy[j];
                            let dxh = gy[j] * gv[j];
                            mean_dxh += dxh;
                            mean_dxh_xh += dxh * xh[j];
                        }
                        mean_dxh *= inv_d;
                        mean_dxh_xh *= inv_d;
                        for j in 0..d {
                            let dxh = gy[j] * gv[j];
                            dx.data[i * d + j] = rstd[i] * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
                        }
                    }
                    accumulate(&mut grads, *x, &dx);
                    accumulate(&mut grads, *gain, &Tensor::from_vec(1, d, dg));
                    accumulate(&mut grads, *bias, &Tensor::from_vec(1, d, db));
                }
                Op::Gelu(x) => {
                    let xv = self.value(*x);
                    let acc = slot(&mut grads, *x, g.rows, g.cols);
                    for ((a, &gy), &xx) in acc.data.iter_mut().zip(&g.data).zip(&xv.data) {
                        *a += gy * gelu(xx).1;
                    }
                }
                Op::Attention { q, k, v, heads, probs } => {
                    let (qv, kv, vv) = (self.value(*q), self.value(*k), self.value(*v));
                    let (nq, d) = qv.shape();
                    let nk = kv.rows;
                    let dh = d / heads;
                    let scale = T::one() / T::from_usize_lossy(dh).sqrt();
                    let mut dq = Tensor::zeros(nq, d);
                    let mut dk = Tensor::zeros(nk, d);
                    let mut dv = Tensor::zeros(nk, d);
                    for (h, p) in probs.iter().enumerate() {
                        let off = h * dh;
                        for i in 0..nq {
                            let go = &g.row(i)[off..off + dh];
                            // dP_ij = ⟨dO_i, V_j⟩; dS = P ⊙ (dP − Σ_j P·dP).
                            let mut dp = vec![T::zero(); nk];
                            let mut dot = T::zero();
                            for j in 0..nk {
                                let pij = p.data[i * nk + j];
                                if pij == T::zero() {
                                    continue;
                                }
                                let vj = &vv.row(j)[off..off + dh];
                                let s = go.iter().zip(vj).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
                                dp[j] = s;
                                dot += pij * s;
                                let dvj = &mut dv.data[j * d + off..j * d + off + dh];
                                dvj.iter_mut().zip(go).for_each(|(x, &y)| *x += pij * y);
                            }
                            for j in 0..nk {
                                let pij = p.data[i * nk + j];
                                if pij == T::zero() {
                                    continue;
                                }
                                let ds = pij * (dp[j] - dot) * scale;
                                for c in 0..dh {
                                    dq.data[i * d + off + c] += ds * kv.data[j * d + off + c];
                                    dk.data[j * d + off + c] += ds * qv.data[i * d + off + c];
                                }
                            }
                        }
                    }
                    accumulate(&mut grads, *q, &dq);
                    accumulate(&mut grads, *k, &dk);
                    accumulate(&mut grads, *v, &dv);
                }
                Op::ConcatRows(parts) => {
                    let mut at = 0;
                    for &p in parts {
                        let t = self.value(p);
                        let piece = Tensor::from_vec(t.rows, t.cols, g.data[at * t.cols..(at + t.rows) * t.cols].to_vec());
                        accumulate(&mut grads, p, &piece);
                        at += t.rows;
                    }
                }
                Op::CrossEntropy { logits, targets, probs } => {
                    let s = g.data[0];
                    let mut dl = probs.clone();
                    for (i, &t) in targets.iter().enumerate() {
                        dl.data[i * dl.cols + t] -= T::one();
                    }
                    dl.data.iter_mut().for_each(|x| *x *= s);
                    accumulate(&mut grads, *logits, &dl);
                }
            }
        }
        out
    }
}

fn slot<T: Scalar>(grads: &mut [Option<Tensor<T>>], v: Var, rows: usize, cols: usize) -> &mut Tensor<T> {
    grads[v.0].get_or_insert_with(|| Tensor::zeros(rows, cols))
}

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], v: Var, g: &Tensor<T>) {
    match &mut grads[v.0] {
        Some(acc) => acc.add_assign(g),
        none => *none = Some(g.clone()),
    }
}

/// tanh-approximated GELU and its derivative.
fn gelu<T: Scalar>(x: T) -> (T, T) {
    let c = T::lit((2.0 / std::f64::consts::PI).sqrt());
    let a = T::lit(0.044715);
    let half = T::lit(0.5);
    let u = c * (x + a * x * x * x);
    let t = u.tanh();
    let y = half * x * (T::one() + t);
    let dy = half * (T::one() + t) + half * x * (T::one() - t * t) * c * (T::one() + T::lit(3.0) * a * x * x);
    (y, dy)
}
