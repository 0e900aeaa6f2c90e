//! Pixel-space containers and dataset plumbing shared by every pipeline stage.
//!
//! The central type is [`VideoClip`], a dense frame tensor (frames × channels
//! × height × width) stored either as 8-bit samples or unit-interval floats.
//! Clips round-trip bit-exactly through the `RVID` container format, and
//! datasets are described by JSON-lines manifests of [`EditTriple`] records.

mod clip;
mod container;
mod error;
mod manifest;
mod pngseq;

pub use clip::{ClipData, Image, MaskVideo, SampleEncoding, VideoClip};
pub use container::{read_container, read_container_header, write_container, ContainerHeader};
pub use error::MediaError;
pub use manifest::{
    read_manifest, validate_manifest, validate_triple, write_manifest, EditTriple, EditType,
    Manifest, Violation,
};
pub use pngseq::{export_png_sequence, import_png_sequence};

pub type Result<T> = std::result::Result<T, MediaError>;
