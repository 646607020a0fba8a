//! Parametric CAD sketches as sequences: the sketch data model, token
//! codecs, a Levenberg–Marquardt constraint solver, a hand-drawing
//! simulator, small transformer models, and dataset/metric tooling.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below name the common instantiations.

pub mod handdraw;
pub mod linalg;
pub mod pipeline;
pub mod scalar;
pub mod seqmodel;
pub mod sketch;
pub mod solver;
pub mod tokenizer;

pub type Sketch32 = sketch::Sketch<f32>;
pub type Sketch64 = sketch::Sketch<f64>;
pub type Primitive32 = sketch::Primitive<f32>;
pub type Primitive64 = sketch::Primitive<f64>;
/// Models train in single precision.
pub type Model32 = seqmodel::SequenceModel<f32>;
/// Double-precision models, used for gradient checks.
pub type Model64 = seqmodel::SequenceModel<f64>;
pub type Tensor32 = seqmodel::Tensor<f32>;
pub type Tensor64 = seqmodel::Tensor<f64>;
