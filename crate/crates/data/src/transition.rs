//! Transition-supervised targets and spatiotemporal mask construction.
//!
//! The composed video switches from source to target at an onset frame
//! with a symmetric linear blend; the mask stays binary frame-wise and
//! activates at the onset even while pixels blend.

use serde::{Deserialize, Serialize};
use v2vforge_media::{ClipData, MaskVideo, VideoClip};

use crate::{DataError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendProfile {
    Linear,
}

/// Edit onset and symmetric blend window, in frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub onset: usize,
    pub window: usize,
    pub profile: BlendProfile,
}

impl TransitionSpec {
    pub fn new(onset: usize, window: usize) -> Result<Self> {
        if window % 2 != 0 {
            return Err(DataError::InvalidParam(format!(
                "blend window must be even, got {window}"
            )));
        }
        Ok(TransitionSpec {
            onset,
            window,
            profile: BlendProfile::Linear,
        })
    }
}

/// Axis-aligned pixel box: `x, y` top-left, `w, h` extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxPx {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

/// Per-frame boxes, or one static box broadcast to every frame. `None`
/// entries mean no region on that frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegionSpec {
    Static(Option<BoxPx>),
    PerFrame(Vec<Option<BoxPx>>),
}

impl RegionSpec {
    fn box_for_frame(&self, k: usize) -> Option<BoxPx> {
        match self {
            RegionSpec::Static(b) => *b,
            RegionSpec::PerFrame(v) => v.get(k).copied().flatten(),
        }
    }
}

/// Compose `[src up to onset, blend, tgt after]` plus the frame-wise mask
/// that activates at the onset.
///
/// Frames strictly before `onset - w/2` copy the source bit-for-bit and
/// frames at or past `onset + w/2` copy the target; inside the window the
/// blend weight is `alpha_k = (k - onset + w/2 + 0.5) / w`, which hits 0.5
/// at the onset.
pub fn compose_transition(
    src: &VideoClip,
    tgt: &VideoClip,
    spec: &TransitionSpec,
) -> Result<(VideoClip, MaskVideo)> {
    if src.shape() != tgt.shape() {
        return Err(DataError::DimMismatch(format!(
            "source {:?} vs target {:?}",
            src.shape(),
            tgt.shape()
        )));
    }
    if spec.window % 2 != 0 {
        return Err(DataError::InvalidParam(format!(
            "blend window must be even, got {}",
            spec.window
        )));
    }
    let (n, c, h, w) = src.shape();
    if spec.onset > n {
        return Err(DataError::InvalidParam(format!(
            "onset {} beyond {n} frames",
            spec.onset
        )));
    }

    let src_unit = src.to_unit_samples();
    let tgt_unit = tgt.to_unit_samples();
    let per_frame = c * h * w;
    let half = spec.window as f64 / 2.0;
    let onset = spec.onset as f64;

    let mut out = Vec::with_capacity(n * per_frame);
    for k in 0..n {
        let kf = k as f64;
        let range = k * per_frame..(k + 1) * per_frame;
        if kf < onset - half {
            out.extend_from_slice(&src_unit[range]);
        } else if kf >= onset + half {
            out.extend_from_slice(&tgt_unit[range]);
        } else {
            let alpha = ((kf - onset + half + 0.5) / spec.window as f64) as f32;
            out.extend(src_unit[range.clone()].iter().zip(&tgt_unit[range]).map(
                |(&s, &t)| {
                    // Clamp absorbs one-ulp rounding so the blend stays a
                    // true convex combination per pixel.
                    (s + alpha * (t - s)).clamp(s.min(t), s.max(t))
                },
            ));
        }
    }
    let video = VideoClip::new(n, c, h, w, ClipData::F32(out))?;
    let mask = make_temporal_mask(n, spec.onset, (h, w))?;
    Ok((video, mask))
}

/// Frames at or past the onset are all ones, earlier frames all zeros.
pub fn make_temporal_mask(n: usize, onset: usize, dims: (usize, usize)) -> Result<MaskVideo> {
    if onset > n {
        return Err(DataError::InvalidParam(format!(
            "onset {onset} beyond {n} frames"
        )));
    }
    let (h, w) = dims;
    let plane = h * w;
    let mut flags = vec![false; n * plane];
    for k in onset..n {
        flags[k * plane..(k + 1) * plane].fill(true);
    }
    Ok(MaskVideo::from_flags(n, h, w, &flags)?)
}

/// Ones inside each frame's box, zeros elsewhere.
pub fn make_spatial_mask(n: usize, dims: (usize, usize), region: &RegionSpec) -> Result<MaskVideo> {
    let (h, w) = dims;
    let plane = h * w;
    let mut flags = vec![false; n * plane];
    for k in 0..n {
        if let Some(b) = region.box_for_frame(k) {
            if b.x + b.w > w || b.y + b.h > h {
                return Err(DataError::InvalidParam(format!(
                    "box {b:?} exceeds {w}x{h} frame"
                )));
            }
            for y in b.y..b.y + b.h {
                let row = k * plane + y * w;
                flags[row + b.x..row + b.x + b.w].fill(true);
            }
        }
    }
    Ok(MaskVideo::from_flags(n, h, w, &flags)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    Intersect,
    Union,
}

/// Elementwise AND / OR of two equal-shape masks.
pub fn combine_masks(a: &MaskVideo, b: &MaskVideo, mode: CombineMode) -> Result<MaskVideo> {
    if a.clip().shape() != b.clip().shape() {
        return Err(DataError::DimMismatch(format!(
            "mask {:?} vs {:?}",
            a.clip().shape(),
            b.clip().shape()
        )));
    }
    let av = a.clip().to_unit_samples();
    let bv = b.clip().to_unit_samples();
    let flags: Vec<bool> = av
        .iter()
        .zip(&bv)
        .map(|(&x, &y)| match mode {
            CombineMode::Intersect => x != 0.0 && y != 0.0,
            CombineMode::Union => x != 0.0 || y != 0.0,
        })
        .collect();
    let (n, _, h, w) = a.clip().shape();
    Ok(MaskVideo::from_flags(n, h, w, &flags)?)
}
