//! Reverse-mode automatic differentiation over dense f64 tensors.
//!
//! A [`Tape`] records each operation as it runs; [`Tape::backward`] then walks
//! the records once in reverse. Only the handful of operations the models
//! need are provided.

mod adam;
mod checkpoint;
mod gemm;
mod gradcheck;
mod sparse;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use gradcheck::{check_gradients, GradCheck};
pub use sparse::SparseRows;
pub use tape::{DiffTensor, Gradients, Input, SparseInput, Tape};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
