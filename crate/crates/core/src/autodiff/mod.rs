//! Reverse-mode automatic differentiation over dense `f64` tensors and the
//! neural primitives the dialog model is built from.

mod adam;
mod check;
mod checkpoint;
pub mod nn;
mod params;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use check::{check_all_ops, check_input_gradients, check_param_gradients, GradCheckReport};
pub use checkpoint::{Checkpoint, NamedTensor, CHECKPOINT_FORMAT};
pub use params::{ParamGrads, ParamId, ParamStore};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum AutodiffError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite value in {pass} pass of `{op}`")]
    NonFinite { op: &'static str, pass: &'static str },
    #[error("loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("parameter `{0}` registered twice")]
    DuplicateParam(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
