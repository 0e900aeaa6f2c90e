//! Minimal dense-tensor numeric core with reverse-mode differentiation.
//!
//! Training runs in f32; a 64-bit mode exists for finite-difference gradient
//! checks. All stochastic ops draw from the splittable counter-based
//! [`SplitRng`] so experiments are bit-reproducible.

mod checkpoint;
mod gradcheck;
mod optim;
mod rng;
mod scalar;
mod tape;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use gradcheck::{check_gradients, max_rel_error_vs_fd, GradCheckReport};
pub use optim::{adamw_step, AdamWParams, OptState};
pub use rng::SplitRng;
pub use scalar::Scalar;
pub use tape::{Axis, GradMap, NodeId, Tape};
pub use tensor::{sinusoidal_embedding, Tensor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("loss must be scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("NaN encountered in backward of {op}")]
    NanInBackward { op: &'static str },

    #[error("shape mismatch: {context}: {left:?} vs {right:?}")]
    ShapeMismatch {
        context: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("function is non-deterministic: loss {first} != {second} on re-evaluation")]
    NonDeterministic { first: f64, second: f64 },

    #[error("checkpoint error on {path}: {message}")]
    Checkpoint { path: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, TensorError>;
