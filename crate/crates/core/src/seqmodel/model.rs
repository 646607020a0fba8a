//! Transformer stacks and the three model heads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::handdraw::{PATCH_COUNT, PATCH_LEN};
use crate::scalar::Scalar;
use crate::tokenizer::{vocab, PrimitiveLayout, TokenTriple};

use super::data::{Example, Stream};
use super::params::{filled, normal_tensor, ParamSet};
use super::tape::{Tape, Var};
use super::tensor::Tensor;
use super::{ModelConfig, ModelError, ModelKind};

/// Index of the first sub-primitive candidate in the constraint model's
/// output: one `Stop` row and the 13 constraint types come first.
pub const POINTER_OFFSET: usize = 1 + 13;

const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone)]
struct LinearIx {
    w: usize,
    b: usize,
}

#[derive(Debug, Clone)]
struct NormIx {
    g: usize,
    b: usize,
}

#[derive(Debug, Clone)]
struct AttnIx {
    q: LinearIx,
    k: LinearIx,
    v: LinearIx,
    o: LinearIx,
}

#[derive(Debug, Clone)]
struct BlockIx {
    ln1: NormIx,
    attn: AttnIx,
    cross: Option<(NormIx, AttnIx)>,
    ln2: NormIx,
    fc1: LinearIx,
    fc2: LinearIx,
}

#[derive(Debug, Clone)]
struct StackIx {
    blocks: Vec<BlockIx>,
    lnf: NormIx,
}

#[derive(Debug, Clone)]
struct EmbedIx {
    value: usize,
    id: usize,
    pos: usize,
}

#[derive(Debug, Clone)]
struct Indices {
    prim: EmbedIx,
    cons: Option<EmbedIx>,
    patch: Option<(LinearIx, usize)>,
    encoder: Option<StackIx>,
    decoder: StackIx,
    head: LinearIx,
}

/// Parameter shapes for a configuration, in creation order.
fn layout(cfg: &ModelConfig) -> Vec<(String, usize, usize)> {
    let d = cfg.embed_dim;
    let mut v: Vec<(String, usize, usize)> = Vec::new();
    let lin = |v: &mut Vec<(String, usize, usize)>, name: &str, i: usize, o: usize| {
        v.push((format!("{name}.w"), i, o));
        v.push((format!("{name}.b"), 1, o));
    };
    let norm = |v: &mut Vec<(String, usize, usize)>, name: &str| {
        v.push((format!("{name}.g"), 1, d));
        v.push((format!("{name}.b"), 1, d));
    };
    v.push(("prim.value".into(), cfg.primitive_vocab, d));
    v.push(("prim.id".into(), cfg.primitive_id_vocab, d));
    v.push(("prim.pos".into(), cfg.max_primitives + 1, d));
    if cfg.kind == ModelKind::Constraint {
        v.push(("cons.value".into(), cfg.constraint_value_vocab, d));
        v.push(("cons.id".into(), cfg.constraint_id_vocab, d));
        v.push(("cons.pos".into(), cfg.max_constraints + 1, d));
    }
    if cfg.kind == ModelKind::ImageConditional {
        lin(&mut v, "patch.proj", PATCH_LEN, d);
        v.push(("patch.pos".into(), PATCH_COUNT, d));
    }
    let cross = cfg.kind != ModelKind::Primitive;
    let mut stacks = vec![("dec", cross)];
    if cross {
        stacks.insert(0, ("enc", false));
    }
    for (s, with_cross) in stacks {
        for l in 0..cfg.layers {
            let p = format!("{s}.{l}");
            norm(&mut v, &format!("{p}.ln1"));
            for m in ["q", "k", "v", "o"] {
                lin(&mut v, &format!("{p}.attn.{m}"), d, d);
            }
            if with_cross {
                norm(&mut v, &format!("{p}.lnx"));
                for m in ["q", "k", "v", "o"] {
                    lin(&mut v, &format!("{p}.xattn.{m}"), d, d);
                }
            }
            norm(&mut v, &format!("{p}.ln2"));
            lin(&mut v, &format!("{p}.fc1"), d, d * cfg.mlp_ratio);
            lin(&mut v, &format!("{p}.fc2"), d * cfg.mlp_ratio, d);
        }
        norm(&mut v, &format!("{s}.lnf"));
    }
    match cfg.kind {
        ModelKind::Constraint => lin(&mut v, "pointer", d, d),
        _ => lin(&mut v, "head", d, cfg.primitive_vocab),
    }
    v
}

impl Indices {
    fn resolve<T: Scalar>(p: &ParamSet<T>, cfg: &ModelConfig) -> Result<Self, ModelError> {
        let f = |name: String| p.find(&name).ok_or_else(|| ModelError::Checkpoint(format!("missing parameter {name}")));
        let lin = |name: &str| -> Result<LinearIx, ModelError> {
            Ok(LinearIx { w: f(format!("{name}.w"))?, b: f(format!("{name}.b"))? })
        };
        let norm = |name: &str| -> Result<NormIx, ModelError> {
            Ok(NormIx { g: f(format!("{name}.g"))?, b: f(format!("{name}.b"))? })
        };
        let attn = |name: &str| -> Result<AttnIx, ModelError> {
            Ok(AttnIx {
                q: lin(&format!("{name}.q"))?,
                k: lin(&format!("{name}.k"))?,
                v: lin(&format!("{name}.v"))?,
                o: lin(&format!("{name}.o"))?,
            })
        };
        let stack = |s: &str, cross: bool| -> Result<StackIx, ModelError> {
            let blocks = (0..cfg.layers)
                .map(|l| {
                    let p = format!("{s}.{l}");
                    Ok(BlockIx {
                        ln1: norm(&format!("{p}.ln1"))?,
                        attn: attn(&format!("{p}.attn"))?,
                        cross: if cross { Some((norm(&format!("{p}.lnx"))?, attn(&format!("{p}.xattn"))?)) } else { None },
                        ln2: norm(&format!("{p}.ln2"))?,
                        fc1: lin(&format!("{p}.fc1"))?,
                        fc2: lin(&format!("{p}.fc2"))?,
                    })
                })
                .collect::<Result<_, ModelError>>()?;
            Ok(StackIx { blocks, lnf: norm(&format!("{s}.lnf"))? })
        };
        let embed = |s: &str| -> Result<EmbedIx, ModelError> {
            Ok(EmbedIx { value: f(format!("{s}.value"))?, id: f(format!("{s}.id"))?, pos: f(format!("{s}.pos"))? })
        };
        let cross = cfg.kind != ModelKind::Primitive;
        Ok(Self {
            prim: embed("prim")?,
            cons: if cfg.kind == ModelKind::Constraint { Some(embed("cons")?) } else { None },
            patch: if cfg.kind == ModelKind::ImageConditional {
                Some((lin("patch.proj")?, f("patch.pos".into())?))
            } else {
                None
            },
            encoder: if cross { Some(stack("enc", false)?) } else { None },
            decoder: stack("dec", cross)?,
            head: lin(if cfg.kind == ModelKind::Constraint { "pointer" } else { "head" })?,
        })
    }
}

/// Logits for every predicted step of one example (natural-log scale after
/// softmax), with the index of the observed next token in each row.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLogits {
    pub logits: Vec<Vec<f64>>,
    pub targets: Vec<usize>,
    /// Position field of each target token (primitive or constraint ordinal;
    /// 0 for `Stop`).
    pub positions: Vec<u32>,
}

/// Anything that assigns next-token distributions to a tokenized example.
pub trait NextTokenModel {
    fn stream(&self) -> Stream;
    fn step_logits(&self, ex: &Example) -> Result<StepLogits, ModelError>;
}

/// Assigns equal probability to every token in the output vocabulary
/// (every candidate, for the constraint stream).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformModel {
    pub stream: Stream,
}

impl NextTokenModel for UniformModel {
    fn stream(&self) -> Stream {
        self.stream
    }

    fn step_logits(&self, ex: &Example) -> Result<StepLogits, ModelError> {
        let (targets, positions, width) = targets_for(self.stream, ex)?;
        Ok(StepLogits { logits: vec![vec![0.0; width]; targets.len()], targets, positions })
    }
}

/// Target indices, their positions, and the output width for a stream.
pub(crate) fn targets_for(stream: Stream, ex: &Example) -> Result<(Vec<usize>, Vec<u32>, usize), ModelError> {
    match stream {
        Stream::Primitive => {
            let t = &ex.primitives[1..];
            Ok((t.iter().map(|t| t.value as usize).collect(), t.iter().map(|t| t.position).collect(), vocab::PRIMITIVE_VOCAB as usize))
        }
        Stream::Constraint => {
            let layout = layout_of(&ex.primitives)?;
            let t = &ex.constraints[1..];
            let targets = t.iter().map(|t| candidate_index(t.value, &layout)).collect::<Result<_, _>>()?;
            Ok((targets, t.iter().map(|t| t.position).collect(), POINTER_OFFSET + layout.designated().len()))
        }
    }
}

/// Recovers the primitive layout from a primitive token stream.
pub(crate) fn layout_of(tokens: &[TokenTriple]) -> Result<PrimitiveLayout, ModelError> {
    let kinds: Vec<_> = tokens.iter().filter(|t| t.id == vocab::TYPE_ID).filter_map(|t| vocab::primitive_kind_of(t.value)).collect();
    Ok(PrimitiveLayout::new(&kinds))
}

/// Output-candidate index of a constraint-stream value.
pub(crate) fn candidate_index(value: u32, layout: &PrimitiveLayout) -> Result<usize, ModelError> {
    if value == vocab::STOP {
        return Ok(0);
    }
    if vocab::constraint_kind_of(value).is_some() {
        return Ok(1 + (value - vocab::CONSTRAINT_TYPE_BASE) as usize);
    }
    if value >= vocab::REFERENCE_BASE {
        let k = (value - vocab::REFERENCE_BASE) as usize;
        if let Some(j) = layout.designated().iter().position(|&(i, _)| i == k) {
            return Ok(POINTER_OFFSET + j);
        }
    }
    Err(ModelError::OutOfVocab { what: "constraint target", value, size: POINTER_OFFSET + layout.designated().len() })
}

/// Constraint-stream value for an output-candidate index.
pub(crate) fn candidate_value(index: usize, layout: &PrimitiveLayout) -> Option<u32> {
    match index {
        0 => Some(vocab::STOP),
        i if i < POINTER_OFFSET => Some(vocab::CONSTRAINT_TYPE_BASE + (i - 1) as u32),
        i => layout.designated().get(i - POINTER_OFFSET).map(|&(k, _)| vocab::REFERENCE_BASE + k as u32),
    }
}

/// `E_value[v] + E_id[id] + E_pos[pos]` for every token.
pub fn embed<T: Scalar>(
    tokens: &[TokenTriple],
    value: &Tensor<T>,
    id: &Tensor<T>,
    pos: &Tensor<T>,
) -> Result<Tensor<T>, ModelError> {
    let d = value.cols;
    if id.cols != d || pos.cols != d {
        return Err(ModelError::DimMismatch(format!("embedding widths {}, {}, {}", d, id.cols, pos.cols)));
    }
    check_vocab(tokens, value.rows, id.rows, pos.rows)?;
    let mut out = Tensor::zeros(tokens.len(), d);
    for (i, t) in tokens.iter().enumerate() {
        let (a, b, c) = (value.row(t.value as usize), id.row(t.id as usize), pos.row(t.position as usize));
        for j in 0..d {
            out.data[i * d + j] = a[j] + b[j] + c[j];
        }
    }
    Ok(out)
}

fn check_vocab(tokens: &[TokenTriple], nv: usize, ni: usize, np: usize) -> Result<(), ModelError> {
    for t in tokens {
        if t.value as usize >= nv {
            return Err(ModelError::OutOfVocab { what: "value", value: t.value, size: nv });
        }
        if t.id as usize >= ni {
            return Err(ModelError::OutOfVocab { what: "id", value: t.id, size: ni });
        }
        if t.position as usize >= np {
            return Err(ModelError::OutOfVocab { what: "position", value: t.position, size: np });
        }
    }
    Ok(())
}

/// Inner products of `state` with the rows of `types` followed by the rows
/// of `subprimitives` (one shared categorical over both).
pub fn pointer_logits<T: Scalar>(state: &[T], types: &Tensor<T>, subprimitives: &Tensor<T>) -> Result<Vec<T>, ModelError> {
    let d = state.len();
    if types.cols != d || (subprimitives.rows > 0 && subprimitives.cols != d) {
        return Err(ModelError::DimMismatch(format!(
            "state width {d}, candidate widths {} and {}",
            types.cols, subprimitives.cols
        )));
    }
    let dot = |r: &[T]| r.iter().zip(state).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    Ok((0..types.rows).map(|i| dot(types.row(i))).chain((0..subprimitives.rows).map(|i| dot(subprimitives.row(i)))).collect())
}

/// A model: configuration plus parameters.
#[derive(Debug, Clone)]
pub struct SequenceModel<T: Scalar> {
    pub config: ModelConfig,
    pub params: ParamSet<T>,
    ix: Indices,
}

impl<T: Scalar> SequenceModel<T> {
    /// Fresh parameters drawn from `config.init_seed`.
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let resid_std = INIT_STD / (2.0 * config.layers as f64).sqrt();
        let mut params = ParamSet::default();
        for (name, rows, cols) in layout(&config) {
            let t = if name.ends_with(".g") {
                filled(rows, cols, 1.0)
            } else if name.ends_with(".b") {
                Tensor::zeros(rows, cols)
            } else if name == "prim.value" {
                numeric_embedding(rows, cols, &mut rng)
            } else if name.ends_with(".o.w") || name.ends_with(".fc2.w") {
                normal_tensor(rows, cols, resid_std, &mut rng)
            } else {
                normal_tensor(rows, cols, INIT_STD, &mut rng)
            };
            params.insert(name, t);
        }
        Self::from_params(config, params)
    }

    pub fn from_params(config: ModelConfig, params: ParamSet<T>) -> Result<Self, ModelError> {
        config.validate()?;
        for (name, rows, cols) in layout(&config) {
            let i = params.find(&name).ok_or_else(|| ModelError::Checkpoint(format!("missing parameter {name}")))?;
            if params.tensor(i).shape() != (rows, cols) {
                return Err(ModelError::Checkpoint(format!("parameter {name} has shape {:?}, expected ({rows}, {cols})", params.tensor(i).shape())));
            }
        }
        let ix = Indices::resolve(&params, &config)?;
        Ok(Self { config, params, ix })
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn cast<U: Scalar>(&self) -> SequenceModel<U> {
        SequenceModel { config: self.config.clone(), params: self.params.cast(), ix: self.ix.clone() }
    }

    fn check_len(&self, n: usize) -> Result<(), ModelError> {
        if n > self.config.max_seq_len {
            return Err(ModelError::SeqTooLong { len: n, max: self.config.max_seq_len });
        }
        Ok(())
    }

    fn embed_var(&self, tape: &mut Tape<'_, T>, e: &EmbedIx, tokens: &[TokenTriple]) -> Result<Var, ModelError> {
        let (nv, ni, np) =
            (self.params.tensor(e.value).rows, self.params.tensor(e.id).rows, self.params.tensor(e.pos).rows);
        check_vocab(tokens, nv, ni, np)?;
        let (tv, ti, tp) = (tape.param(e.value), tape.param(e.id), tape.param(e.pos));
        let a = tape.rows(tv, &tokens.iter().map(|t| t.value as usize).collect::<Vec<_>>());
        let b = tape.rows(ti, &tokens.iter().map(|t| t.id as usize).collect::<Vec<_>>());
        let c = tape.rows(tp, &tokens.iter().map(|t| t.position as usize).collect::<Vec<_>>());
        let ab = tape.add(a, b);
        Ok(tape.add(ab, c))
    }

    fn linear(&self, tape: &mut Tape<'_, T>, x: Var, l: &LinearIx) -> Var {
        let (w, b) = (tape.param(l.w), tape.param(l.b));
        let y = tape.matmul(x, w);
        tape.add_row(y, b)
    }

    fn norm(&self, tape: &mut Tape<'_, T>, x: Var, n: &NormIx) -> Var {
        let (g, b) = (tape.param(n.g), tape.param(n.b));
        tape.layer_norm(x, g, b)
    }

    fn attend(&self, tape: &mut Tape<'_, T>, x: Var, mem: Var, a: &AttnIx, causal: bool) -> Var {
        let q = self.linear(tape, x, &a.q);
        let k = self.linear(tape, mem, &a.k);
        let v = self.linear(tape, mem, &a.v);
        let o = tape.attention(q, k, v, self.config.heads, causal);
        self.linear(tape, o, &a.o)
    }

    fn stack(&self, tape: &mut Tape<'_, T>, mut x: Var, memory: Option<Var>, s: &StackIx, causal: bool) -> Var {
        for b in &s.blocks {
            let h = self.norm(tape, x, &b.ln1);
            let a = self.attend(tape, h, h, &b.attn, causal);
            x = tape.add(x, a);
            if let (Some(m), Some((ln, xa))) = (memory, &b.cross) {
                let h = self.norm(tape, x, ln);
                let a = self.attend(tape, h, m, xa, false);
                x = tape.add(x, a);
            }
            let h = self.norm(tape, x, &b.ln2);
            let h = self.linear(tape, h, &b.fc1);
            let h = tape.gelu(h);
            let h = self.linear(tape, h, &b.fc2);
            x = tape.add(x, h);
        }
        self.norm(tape, x, &s.lnf)
    }

    fn encode_patches(&self, tape: &mut Tape<'_, T>, patches: &[Vec<f32>]) -> Result<Var, ModelError> {
        let (proj, pos) = self.ix.patch.as_ref().ok_or(ModelError::ContextMismatch(self.kind()))?;
        if patches.len() != PATCH_COUNT || patches.iter().any(|p| p.len() != PATCH_LEN) {
            return Err(ModelError::DimMismatch(format!("expected {PATCH_COUNT} patches of {PATCH_LEN}")));
        }
        let flat: Vec<T> = patches.iter().flatten().map(|&v| T::lit(f64::from(v))).collect();
        let x = tape.input(Tensor::from_vec(PATCH_COUNT, PATCH_LEN, flat));
        let h = self.linear(tape, x, proj);
        let p = tape.param(*pos);
        let h = tape.add(h, p);
        let enc = self.ix.encoder.as_ref().expect("image models have an encoder");
        Ok(self.stack(tape, h, None, enc, false))
    }

    /// Decoder stack over precomputed embeddings (causal), optionally
    /// cross-attending into `memory`. Returns output-vocabulary logits for
    /// primitive-stream models.
    pub fn decoder_forward(&self, embeddings: &Tensor<T>, memory: Option<&Tensor<T>>) -> Result<Tensor<T>, ModelError> {
        if self.kind() == ModelKind::Constraint {
            return Err(ModelError::ContextMismatch(self.kind()));
        }
        self.check_len(embeddings.rows)?;
        if embeddings.cols != self.config.embed_dim {
            return Err(ModelError::DimMismatch(format!("embedding width {}", embeddings.cols)));
        }
        let mut tape = Tape::new(&self.params);
        let x = tape.input(embeddings.clone());
        let m = memory.map(|m| tape.input(m.clone()));
        if m.is_some() != (self.kind() == ModelKind::ImageConditional) {
            return Err(ModelError::ContextMismatch(self.kind()));
        }
        let h = self.stack(&mut tape, x, m, &self.ix.decoder, true);
        let logits = self.linear(&mut tape, h, &self.ix.head);
        Ok(tape.value(logits).clone())
    }

    /// Builds the forward graph for one example and returns the logits node
    /// and target indices.
    pub(crate) fn forward(&self, tape: &mut Tape<'_, T>, ex: &Example, full: bool) -> Result<(Var, Vec<usize>), ModelError> {
        match self.kind() {
            ModelKind::Primitive | ModelKind::ImageConditional => {
                let inputs = if full { &ex.primitives[..] } else { &ex.primitives[..ex.primitives.len() - 1] };
                self.check_len(inputs.len())?;
                let memory = match (self.kind(), &ex.patches) {
                    (ModelKind::ImageConditional, Some(p)) => Some(self.encode_patches(tape, p)?),
                    (ModelKind::ImageConditional, None) => return Err(ModelError::ContextMismatch(self.kind())),
                    _ => None,
                };
                let x = self.embed_var(tape, &self.ix.prim, inputs)?;
                let h = self.stack(tape, x, memory, &self.ix.decoder, true);
                let logits = self.linear(tape, h, &self.ix.head);
                let targets = if full { Vec::new() } else { ex.primitives[1..].iter().map(|t| t.value as usize).collect() };
                Ok((logits, targets))
            }
            ModelKind::Constraint => {
                self.check_len(ex.primitives.len())?;
                let inputs = if full { &ex.constraints[..] } else { &ex.constraints[..ex.constraints.len() - 1] };
                self.check_len(inputs.len())?;
                let layout = layout_of(&ex.primitives)?;
                let x = self.embed_var(tape, &self.ix.prim, &ex.primitives)?;
                let enc = self.stack(tape, x, None, self.ix.encoder.as_ref().expect("constraint encoder"), false);

                let cons = self.ix.cons.as_ref().expect("constraint embeddings");
                let nv = self.params.tensor(cons.value).rows;
                let nprim = ex.primitives.len();
                // Pointer tokens embed as the encoder output they point at.
                let mut idx = Vec::with_capacity(inputs.len());
                for t in inputs {
                    if t.value >= vocab::REFERENCE_BASE {
                        let k = (t.value - vocab::REFERENCE_BASE) as usize;
                        if k >= nprim {
                            return Err(ModelError::OutOfVocab { what: "pointer", value: t.value, size: nprim });
                        }
                        idx.push(nv + k);
                    } else {
                        idx.push(t.value as usize);
                    }
                }
                let shifted: Vec<TokenTriple> =
                    inputs.iter().map(|t| TokenTriple { value: t.value.min(vocab::REFERENCE_BASE - 1), ..*t }).collect();
                check_vocab(&shifted, nv, self.params.tensor(cons.id).rows, self.params.tensor(cons.pos).rows)?;
                let table_v = tape.param(cons.value);
                let table = tape.concat_rows(&[table_v, enc]);
                let a = tape.rows(table, &idx);
                let ti = tape.param(cons.id);
                let tp = tape.param(cons.pos);
                let b = tape.rows(ti, &inputs.iter().map(|t| t.id as usize).collect::<Vec<_>>());
                let c = tape.rows(tp, &inputs.iter().map(|t| t.position as usize).collect::<Vec<_>>());
                let ab = tape.add(a, b);
                let x = tape.add(ab, c);
                let h = self.stack(tape, x, Some(enc), &self.ix.decoder, true);
                let state = self.linear(tape, h, &self.ix.head);

                let mut head_rows = vec![vocab::STOP as usize];
                head_rows.extend((0..13).map(|i| (vocab::CONSTRAINT_TYPE_BASE + i) as usize));
                let types = tape.rows(table_v, &head_rows);
                let subs: Vec<usize> = layout.designated().iter().map(|&(k, _)| k).collect();
                let cand = if subs.is_empty() {
                    types
                } else {
                    let s = tape.rows(enc, &subs);
                    tape.concat_rows(&[types, s])
                };
                let logits = tape.matmul_nt(state, cand);
                let targets = if full {
                    Vec::new()
                } else {
                    ex.constraints[1..].iter().map(|t| candidate_index(t.value, &layout)).collect::<Result<_, _>>()?
                };
                Ok((logits, targets))
            }
        }
    }

    /// Summed next-token NLL (nats) of one example.
    pub fn loss(&self, ex: &Example) -> Result<f64, ModelError> {
        Ok(self.loss_and_grads(ex, false)?.0)
    }

    /// Summed next-token NLL (nats) and its gradient for every parameter
    /// (zeros for parameters the example does not reach).
    pub fn loss_and_gradients(&self, ex: &Example) -> Result<(f64, Vec<Tensor<T>>), ModelError> {
        let (loss, _, g) = self.loss_and_grads(ex, true)?;
        let g = g.expect("gradients requested");
        let grads = g
            .into_iter()
            .enumerate()
            .map(|(i, g)| g.unwrap_or_else(|| {
                let t = self.params.tensor(i);
                Tensor::zeros(t.rows, t.cols)
            }))
            .collect();
        Ok((loss, grads))
    }

    /// Summed next-token NLL (nats) of one example and the number of
    /// predicted tokens, with gradients when `grads` is requested.
    pub(crate) fn loss_and_grads(&self, ex: &Example, with_grads: bool) -> Result<(f64, usize, Option<super::tape::ParamGrads<T>>), ModelError> {
        let mut tape = Tape::new(&self.params);
        let (logits, targets) = self.forward(&mut tape, ex, false)?;
        let loss = tape.cross_entropy(logits, &targets);
        let value = tape.value(loss).data[0].to_f64_lossy();
        let grads = with_grads.then(|| tape.backward(loss));
        Ok((value, targets.len(), grads))
    }

    /// Next-token logits after every prefix of the predicted stream (all
    /// tokens used as input; row `t` predicts token `t + 1`).
    pub fn logits(&self, ex: &Example) -> Result<Tensor<T>, ModelError> {
        let mut tape = Tape::new(&self.params);
        let (logits, _) = self.forward(&mut tape, ex, true)?;
        Ok(tape.value(logits).clone())
    }

    /// Primitive-stream logits for a token prefix (row t predicts token t+1).
    pub fn primitive_logits(&self, tokens: &[TokenTriple]) -> Result<Tensor<T>, ModelError> {
        if self.kind() != ModelKind::Primitive {
            return Err(ModelError::ContextMismatch(self.kind()));
        }
        let ex = Example { primitives: tokens.to_vec(), constraints: Vec::new(), patches: None, primitive_count: 0 };
        self.logits(&ex)
    }
}

impl<T: Scalar> NextTokenModel for SequenceModel<T> {
    fn stream(&self) -> Stream {
        if self.kind() == ModelKind::Constraint {
            Stream::Constraint
        } else {
            Stream::Primitive
        }
    }

    fn step_logits(&self, ex: &Example) -> Result<StepLogits, ModelError> {
        let mut tape = Tape::new(&self.params);
        let (logits, targets) = self.forward(&mut tape, ex, false)?;
        let l = tape.value(logits);
        let (_, positions, _) = targets_for(self.stream(), ex)?;
        Ok(StepLogits {
            logits: (0..l.rows).map(|i| l.row(i).iter().map(|v| v.to_f64_lossy()).collect()).collect(),
            targets,
            positions,
        })
    }
}

/// Value embeddings whose numeric-bin rows start as smooth Fourier features
/// of the bin index, so neighbouring bins begin close together.
fn numeric_embedding<T: Scalar>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor<T> {
    let mut t: Tensor<T> = normal_tensor(rows, cols, INIT_STD, rng);
    let bins = vocab::NUMERIC_BINS as usize;
    let base = vocab::NUMERIC_BASE as usize;
    for b in 0..bins.min(rows.saturating_sub(base)) {
        let x = (b as f64 + 0.5) / bins as f64;
        for j in 0..cols {
            let freq = (j / 2 + 1) as f64;
            let phase = std::f64::consts::PI * freq * x;
            let f = if j % 2 == 0 { phase.cos() } else { phase.sin() };
            let v = t.data[(base + b) * cols + j].to_f64_lossy() * 0.25 + INIT_STD * 2.0 * f;
            t.data[(base + b) * cols + j] = T::lit(v);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::synth::{synthetic_corpus, SynthFamily};

    fn example() -> Example {
        Example::from_sketch(&synthetic_corpus(SynthFamily::SlottedPlate, 1, 2)[0]).unwrap()
    }

    #[test]
    fn shapes_for_each_kind() {
        let ex = example();
        for kind in [ModelKind::Primitive, ModelKind::Constraint] {
            let m = SequenceModel::<f32>::new(ModelConfig::desk(kind)).unwrap();
            let s = m.step_logits(&ex).unwrap();
            assert_eq!(s.logits.len(), s.targets.len());
            let width = s.logits[0].len();
            assert!(s.targets.iter().all(|&t| t < width));
        }
    }

    #[test]
    fn candidate_count_grows_by_slot_count() {
        let ex = example();
        let m = SequenceModel::<f64>::new(ModelConfig::tiny(ModelKind::Constraint)).unwrap();
        let w = m.step_logits(&ex).unwrap().logits[0].len();
        let layout = layout_of(&ex.primitives).unwrap();
        assert_eq!(w, POINTER_OFFSET + layout.designated().len());
    }

    #[test]
    fn embed_is_sum_of_tables() {
        let v = Tensor::from_vec(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let i = Tensor::from_vec(2, 2, vec![10.0, 0.0, 0.0, 10.0]);
        let p = Tensor::from_vec(2, 2, vec![100.0, 100.0, 0.0, 0.0]);
        let e = embed(&[TokenTriple::new(2, 1, 0)], &v, &i, &p).unwrap();
        assert_eq!(e.data, vec![101.0, 111.0]);
        assert!(matches!(embed(&[TokenTriple::new(3, 0, 0)], &v, &i, &p), Err(ModelError::OutOfVocab { .. })));
    }

    #[test]
    fn pointer_logit_geometry() {
        let types = Tensor::from_vec(13, 13, (0..169).map(|i| if i % 14 == 0 { 1.0 } else { 0.0 }).collect::<Vec<f64>>());
        let subs = Tensor::from_vec(0, 13, vec![]);
        let mut state = vec![0.0; 13];
        state[4] = 1.0;
        let l = pointer_logits(&state, &types, &subs).unwrap();
        assert_eq!(l.len(), 13);
        let argmax = l.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(argmax, 4);
        let zero = pointer_logits(&[0.0; 13], &types, &subs).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        assert!(pointer_logits(&[0.0; 3], &types, &subs).is_err());
    }
}
