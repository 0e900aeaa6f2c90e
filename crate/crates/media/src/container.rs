//! The `RVID` raw clip container.
//!
//! Layout: magic `"RVID"`, five little-endian u32 fields (version=1, N, C,
//! H, W), one encoding byte (0 = u8, 1 = f32), then raw row-major samples
//! (f32 samples little-endian). Lossless and bit-exact by construction.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{ClipData, MediaError, Result, SampleEncoding, VideoClip};

pub const RVID_MAGIC: [u8; 4] = *b"RVID";
pub const RVID_VERSION: u32 = 1;

/// Parsed fixed-size header of an `RVID` file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainerHeader {
    pub version: u32,
    pub frames: u32,
    pub channels: u32,
    pub height: u32,
    pub width: u32,
    pub encoding: SampleEncoding,
}

impl ContainerHeader {
    pub fn sample_count(&self) -> usize {
        self.frames as usize * self.channels as usize * self.height as usize * self.width as usize
    }
}

fn check_dim(dim: usize) -> Result<u32> {
    if dim > i32::MAX as usize {
        return Err(MediaError::Unrepresentable(dim));
    }
    Ok(dim as u32)
}

pub fn write_container(clip: &VideoClip, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| MediaError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| MediaError::io(path, e);

    w.write_all(&RVID_MAGIC).map_err(io_err)?;
    for dim in [
        RVID_VERSION,
        check_dim(clip.frames())?,
        check_dim(clip.channels())?,
        check_dim(clip.height())?,
        check_dim(clip.width())?,
    ] {
        w.write_all(&dim.to_le_bytes()).map_err(io_err)?;
    }
    w.write_all(&[clip.encoding() as u8]).map_err(io_err)?;
    match clip.data() {
        ClipData::U8(samples) => w.write_all(samples).map_err(io_err)?,
        ClipData::F32(samples) => {
            for s in samples {
                w.write_all(&s.to_le_bytes()).map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}

fn parse_header(r: &mut impl Read, path: &Path) -> Result<ContainerHeader> {
    let io_err = |e| MediaError::io(path, e);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if magic != RVID_MAGIC {
        return Err(MediaError::BadMagic { found: magic });
    }
    let mut fields = [0u32; 5];
    for field in fields.iter_mut() {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf).map_err(io_err)?;
        *field = u32::from_le_bytes(buf);
    }
    if fields[0] != RVID_VERSION {
        return Err(MediaError::UnknownVersion(fields[0]));
    }
    let mut enc = [0u8; 1];
    r.read_exact(&mut enc).map_err(io_err)?;
    let encoding = match enc[0] {
        0 => SampleEncoding::U8,
        1 => SampleEncoding::F32,
        other => return Err(MediaError::UnknownEncoding(other)),
    };
    Ok(ContainerHeader {
        version: fields[0],
        frames: fields[1],
        channels: fields[2],
        height: fields[3],
        width: fields[4],
        encoding,
    })
}

/// Read only the header; used for cheap shape validation.
pub fn read_container_header(path: impl AsRef<Path>) -> Result<ContainerHeader> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| MediaError::io(path, e))?;
    parse_header(&mut BufReader::new(file), path)
}

pub fn read_container(path: impl AsRef<Path>) -> Result<VideoClip> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| MediaError::io(path, e))?;
    let mut r = BufReader::new(file);
    let header = parse_header(&mut r, path)?;

    let count = header.sample_count();
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)
        .map_err(|e| MediaError::io(path, e))?;

    let data = match header.encoding {
        SampleEncoding::U8 => {
            if payload.len() != count {
                return Err(MediaError::Truncated {
                    declared: count,
                    actual: payload.len(),
                });
            }
            ClipData::U8(payload)
        }
        SampleEncoding::F32 => {
            if payload.len() != count * 4 {
                return Err(MediaError::Truncated {
                    declared: count * 4,
                    actual: payload.len(),
                });
            }
            ClipData::F32(
                payload
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect(),
            )
        }
    };
    VideoClip::new(
        header.frames as usize,
        header.channels as usize,
        header.height as usize,
        header.width as usize,
        data,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn header_layout_byte_count() {
        // 4-byte magic + 5 u32 fields + 1 encoding byte = 25-byte header.
        let dir = tempdir().unwrap();
        let path = dir.path().join("zero.rvid");
        let clip = VideoClip::new(1, 3, 2, 2, ClipData::U8(vec![0; 12])).unwrap();
        write_container(&clip, &path).unwrap();
        let len = std::fs::metadata(&path).unwrap().len();
        assert_eq!(len, 25 + 12);
    }

    #[test]
    fn roundtrip_u8_and_f32() {
        let dir = tempdir().unwrap();
        let u8_clip = VideoClip::new(2, 3, 2, 2, ClipData::U8((0u8..24).collect())).unwrap();
        let f32_clip =
            VideoClip::new(1, 1, 2, 2, ClipData::F32(vec![0.0, 0.25, 0.5, 1.0])).unwrap();
        for (name, clip) in [("a.rvid", &u8_clip), ("b.rvid", &f32_clip)] {
            let path = dir.path().join(name);
            write_container(clip, &path).unwrap();
            assert_eq!(&read_container(&path).unwrap(), clip);
        }
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.rvid");
        std::fs::write(&path, b"XXXX0000000000000000000000").unwrap();
        assert!(matches!(
            read_container(&path),
            Err(MediaError::BadMagic { .. })
        ));
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("short.rvid");
        let clip = VideoClip::new(1, 3, 2, 2, ClipData::U8(vec![7; 12])).unwrap();
        write_container(&clip, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        // Drop the final sample: header still declares 12.
        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        match read_container(&path) {
            Err(MediaError::Truncated { declared, actual }) => {
                assert_eq!(declared, 12);
                assert_eq!(actual, 11);
            }
            other => panic!("unexpected result {other:?}"),
        }
    }

    #[test]
    fn unknown_version_and_encoding_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("v2.rvid");
        let clip = VideoClip::new(1, 1, 1, 1, ClipData::U8(vec![1])).unwrap();
        write_container(&clip, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 2; // version field
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_container(&path),
            Err(MediaError::UnknownVersion(2))
        ));

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 1;
        bytes[24] = 9; // encoding byte
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_container(&path),
            Err(MediaError::UnknownEncoding(9))
        ));
    }
}
