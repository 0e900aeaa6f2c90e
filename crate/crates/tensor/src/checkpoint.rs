//! `RTNS` named-tensor checkpoint files.
//!
//! Same header discipline as the RVID clip container: magic `"RTNS"`, two
//! little-endian u32 fields (version=1, entry count), then per entry a
//! u32 name length, the UTF-8 name, a u32 rank, u32 dims, and f32 LE data.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Result, Tensor, TensorError};

const RTNS_MAGIC: [u8; 4] = *b"RTNS";
const RTNS_VERSION: u32 = 1;

fn ck_err(path: &Path, message: impl Into<String>) -> TensorError {
    TensorError::Checkpoint {
        path: path.display().to_string(),
        message: message.into(),
    }
}

pub fn write_checkpoint(entries: &[(String, Tensor<f32>)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| TensorError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| TensorError::Io {
        path: path.display().to_string(),
        source: e,
    };

    w.write_all(&RTNS_MAGIC).map_err(io_err)?;
    w.write_all(&RTNS_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(entries.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (name, tensor) in entries {
        w.write_all(&(name.len() as u32).to_le_bytes()).map_err(io_err)?;
        w.write_all(name.as_bytes()).map_err(io_err)?;
        w.write_all(&(tensor.shape().len() as u32).to_le_bytes())
            .map_err(io_err)?;
        for &dim in tensor.shape() {
            w.write_all(&(dim as u32).to_le_bytes()).map_err(io_err)?;
        }
        for &v in tensor.data() {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Vec<(String, Tensor<f32>)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| TensorError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut r = BufReader::new(file);
    let io_err = |e: std::io::Error| TensorError::Io {
        path: path.display().to_string(),
        source: e,
    };

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if magic != RTNS_MAGIC {
        return Err(ck_err(path, format!("bad magic {magic:?}")));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf).map_err(io_err)?;
    let version = u32::from_le_bytes(u32buf);
    if version != RTNS_VERSION {
        return Err(ck_err(path, format!("unknown version {version}")));
    }
    r.read_exact(&mut u32buf).map_err(io_err)?;
    let count = u32::from_le_bytes(u32buf) as usize;

    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut u32buf).map_err(io_err)?;
        let name_len = u32::from_le_bytes(u32buf) as usize;
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes).map_err(io_err)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| ck_err(path, "tensor name is not UTF-8"))?;
        r.read_exact(&mut u32buf).map_err(io_err)?;
        let rank = u32::from_le_bytes(u32buf) as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            r.read_exact(&mut u32buf).map_err(io_err)?;
            shape.push(u32::from_le_bytes(u32buf) as usize);
        }
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        for _ in 0..numel {
            r.read_exact(&mut u32buf).map_err(io_err)?;
            data.push(f32::from_le_bytes(u32buf));
        }
        entries.push((name, Tensor::new(shape, data)));
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(io_err)?;
    if !rest.is_empty() {
        return Err(ck_err(path, format!("{} trailing bytes", rest.len())));
    }
    Ok(entries)
}
