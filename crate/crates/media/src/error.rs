use thiserror::Error;

/// Errors shared by clip construction, container I/O, and manifest handling.
#[derive(Debug, Error)]
pub enum MediaError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid clip: {0}")]
    InvalidClip(String),

    #[error("mask sample at index {index} is {value}, not binary")]
    NotBinary { index: usize, value: f64 },

    #[error("bad magic: expected \"RVID\", found {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("unknown container version {0}")]
    UnknownVersion(u32),

    #[error("unknown sample encoding byte {0}")]
    UnknownEncoding(u8),

    #[error("truncated payload: header declares {declared} bytes, found {actual}")]
    Truncated { declared: usize, actual: usize },

    #[error("dimension {0} exceeds 2^31-1 and cannot be written")]
    Unrepresentable(usize),

    #[error("manifest line {line}: {source}")]
    ManifestParse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("png sequence error: {0}")]
    PngSequence(String),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl MediaError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        MediaError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
