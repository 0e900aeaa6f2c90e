//! Patchification of latent grids into token matrices, 3D positional
//! codes shared across streams, and the assembled-sequence metadata.

use v2vforge_tensor::{NodeId, Scalar, Tensor};

use crate::{LatentGrid, ModelError, Result};

/// Which stream a token belongs to. Tags are metadata; attention is fully
/// bidirectional over the whole sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamTag {
    Tgt,
    Src,
    Mask,
    Ref,
}

impl StreamTag {
    pub fn embedding_row(self) -> usize {
        match self {
            StreamTag::Tgt => 0,
            StreamTag::Src => 1,
            StreamTag::Mask => 2,
            StreamTag::Ref => 3,
        }
    }
}

/// Token counts per stream of an assembled sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StreamCounts {
    pub src: usize,
    pub tgt: usize,
    pub mask: usize,
    pub reference: usize,
}

impl StreamCounts {
    pub fn total(&self) -> usize {
        self.src + self.tgt + self.mask + self.reference
    }
}

/// An assembled token sequence: the tape node holding the [T, d] matrix
/// plus per-token stream tags and 3D grid positions.
#[derive(Debug, Clone)]
pub struct TokenSequence {
    pub node: NodeId,
    pub tags: Vec<StreamTag>,
    pub positions: Vec<(usize, usize, usize)>,
    pub counts: StreamCounts,
    /// Row range of the noisy-target tokens within the sequence.
    pub tgt_rows: (usize, usize),
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

/// Flatten a latent grid into a [T, patch_dim] token matrix, t-major then
/// rows then columns; within a patch the order is (channel, dt, dy, dx).
/// Also returns each token's (t, h, w) patch-grid position.
pub fn patchify<T: Scalar>(
    lat: &LatentGrid,
    patch: (usize, usize, usize),
) -> Result<(Tensor<T>, Vec<(usize, usize, usize)>)> {
    let (pt, ph, pw) = patch;
    let (n, c, h, w) = lat.shape();
    if n % pt != 0 || h % ph != 0 || w % pw != 0 {
        return Err(ModelError::Shape(format!(
            "latent {n}x{c}x{h}x{w} not divisible by patch ({pt},{ph},{pw})"
        )));
    }
    let (gt, gh, gw) = (n / pt, h / ph, w / pw);
    let patch_dim = c * pt * ph * pw;
    let mut data = Vec::with_capacity(gt * gh * gw * patch_dim);
    let mut positions = Vec::with_capacity(gt * gh * gw);
    for ti in 0..gt {
        for hi in 0..gh {
            for wi in 0..gw {
                positions.push((ti, hi, wi));
                for ci in 0..c {
                    for dt in 0..pt {
                        for dy in 0..ph {
                            for dx in 0..pw {
                                let v = lat.data[lat.index(
                                    ti * pt + dt,
                                    ci,
                                    hi * ph + dy,
                                    wi * pw + dx,
                                )];
                                data.push(T::from_f64(v as f64));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((Tensor::new(vec![gt * gh * gw, patch_dim], data), positions))
}

/// Inverse of [`patchify`] for a known latent shape.
pub fn unpatchify(
    tokens: &Tensor<f32>,
    shape: (usize, usize, usize, usize),
    patch: (usize, usize, usize),
) -> Result<LatentGrid> {
    let (pt, ph, pw) = patch;
    let (n, c, h, w) = shape;
    let (gt, gh, gw) = (n / pt, h / ph, w / pw);
    let patch_dim = c * pt * ph * pw;
    let (rows, cols) = tokens.dims2();
    if rows != gt * gh * gw || cols != patch_dim {
        return Err(ModelError::Shape(format!(
            "token matrix {rows}x{cols} does not unpatchify to {n}x{c}x{h}x{w}"
        )));
    }
    let mut lat = LatentGrid::zeros(n, c, h, w);
    let mut row = 0;
    for ti in 0..gt {
        for hi in 0..gh {
            for wi in 0..gw {
                let mut col = 0;
                for ci in 0..c {
                    for dt in 0..pt {
                        for dy in 0..ph {
                            for dx in 0..pw {
                                let idx = lat.index(ti * pt + dt, ci, hi * ph + dy, wi * pw + dx);
                                lat.data[idx] = tokens.data()[row * patch_dim + col];
                                col += 1;
                            }
                        }
                    }
                }
                row += 1;
            }
        }
    }
    Ok(lat)
}

/// Factorized sinusoidal positional code over (t, h, w), shared across
/// streams so corresponding tokens keep a fixed relative geometry.
pub fn positional_codes<T: Scalar>(
    positions: &[(usize, usize, usize)],
    dim: usize,
) -> Tensor<T> {
    let base = (dim / 3) & !1; // even split for h and w
    let dt = dim - 2 * base;
    let mut data = Vec::with_capacity(positions.len() * dim);
    for &(t, h, w) in positions {
        data.extend_from_slice(
            v2vforge_tensor::sinusoidal_embedding::<T>(t as f64, dt).data(),
        );
        data.extend_from_slice(
            v2vforge_tensor::sinusoidal_embedding::<T>(h as f64, base).data(),
        );
        data.extend_from_slice(
            v2vforge_tensor::sinusoidal_embedding::<T>(w as f64, base).data(),
        );
    }
    Tensor::new(vec![positions.len(), dim], data)
}
