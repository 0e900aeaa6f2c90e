//! Deterministic synthesis of paired video supervision.
//!
//! Four independent generators share this crate: affine lifting of image
//! edit pairs into pseudo video pairs, slicing densely captioned videos
//! into before/after triples, transition targets with spatiotemporal
//! masks, and model-free degradations for controllable-generation pairs.

pub mod affine;
pub mod degrade;
pub mod slicer;
pub mod transition;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("infeasible pose: corner ({x:.4}, {y:.4}) outside {width}x{height} by more than 1e-6 px")]
    InfeasiblePose {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("slice index out of range: {0} (filter/slice inconsistency)")]
    SliceOutOfRange(String),

    #[error("caption is empty")]
    EmptyCaption,

    #[error("rewriter hook exited with {status}: {stderr}")]
    HookFailed { status: i32, stderr: String },

    #[error("rewriter hook io error: {0}")]
    HookIo(String),

    #[error(transparent)]
    Media(#[from] v2vforge_media::MediaError),
}

pub type Result<T> = std::result::Result<T, DataError>;
