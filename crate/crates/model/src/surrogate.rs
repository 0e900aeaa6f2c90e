//! Frozen surrogate video VAE: fixed space-time average pooling with the
//! first frame kept as its own temporal group (so 81 frames compress to
//! 21 at ft=4), and nearest-neighbor decoding. Linear, deterministic, and
//! exactly invertible on block-constant content.

use v2vforge_media::{ClipData, MaskVideo, VideoClip};

use crate::{MaskInjection, ModelError, Result};

/// Compressed space-time grid (frames x channels x height x width).
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    pub frames: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl LatentGrid {
    pub fn new(frames: usize, channels: usize, height: usize, width: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), frames * channels * height * width);
        LatentGrid { frames, channels, height, width, data }
    }

    pub fn zeros(frames: usize, channels: usize, height: usize, width: usize) -> Self {
        LatentGrid::new(frames, channels, height, width, vec![0.0; frames * channels * height * width])
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.frames, self.channels, self.height, self.width)
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn index(&self, t: usize, c: usize, y: usize, x: usize) -> usize {
        ((t * self.channels + c) * self.height + y) * self.width + x
    }
}

/// Original-frame range of temporal group `g`: group 0 is frame 0 alone,
/// then non-overlapping runs of `ft` frames.
fn temporal_group(g: usize, ft: usize) -> (usize, usize) {
    if g == 0 {
        (0, 1)
    } else {
        (1 + (g - 1) * ft, ft)
    }
}

pub fn surrogate_encode(clip: &VideoClip, factors: (usize, usize, usize)) -> Result<LatentGrid> {
    let (ft, fh, fw) = factors;
    let (n_frames, channels, height, width) = clip.shape();
    if (n_frames - 1) % ft != 0 {
        return Err(ModelError::Shape(format!(
            "frame count {n_frames}: (N-1) must divide ft={ft}"
        )));
    }
    if height % fh != 0 || width % fw != 0 {
        return Err(ModelError::Shape(format!(
            "spatial {height}x{width} must divide (fh, fw) = ({fh}, {fw})"
        )));
    }
    let (n, h, w) = (1 + (n_frames - 1) / ft, height / fh, width / fw);
    let samples = clip.to_unit_samples();
    let mut data = vec![0.0f32; n * channels * h * w];
    for g in 0..n {
        let (f0, flen) = temporal_group(g, ft);
        for c in 0..channels {
            for gy in 0..h {
                for gx in 0..w {
                    let mut acc = 0.0f64;
                    for f in f0..f0 + flen {
                        for y in gy * fh..(gy + 1) * fh {
                            for x in gx * fw..(gx + 1) * fw {
                                acc += samples[((f * channels + c) * height + y) * width + x] as f64;
                            }
                        }
                    }
                    data[((g * channels + c) * h + gy) * w + gx] =
                        (acc / (flen * fh * fw) as f64) as f32;
                }
            }
        }
    }
    Ok(LatentGrid::new(n, channels, h, w, data))
}

/// Nearest-neighbor upsampling in all three axes; group 0 expands to one
/// frame, later groups to `ft` frames each. Values are clamped to the unit
/// interval for pixel-space use.
pub fn surrogate_decode(lat: &LatentGrid, factors: (usize, usize, usize)) -> VideoClip {
    let (ft, fh, fw) = factors;
    let (n, channels, h, w) = lat.shape();
    let n_frames = 1 + (n - 1) * ft;
    let (height, width) = (h * fh, w * fw);
    let mut data = vec![0.0f32; n_frames * channels * height * width];
    for g in 0..n {
        let (f0, flen) = temporal_group(g, ft);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    let v = lat.data[lat.index(g, c, y / fh, x / fw)].clamp(0.0, 1.0);
                    for f in f0..f0 + flen {
                        data[((f * channels + c) * height + y) * width + x] = v;
                    }
                }
            }
        }
    }
    VideoClip::new(n_frames, channels, height, width, ClipData::F32(data))
        .expect("decoded samples are clamped to the unit interval")
}

/// Encode a mask video along the route the injection variant demands:
/// the shared surrogate encoder over channel-replicated input for the VAE
/// routes, or a direct single-channel pool for the downsample route.
pub fn encode_mask_for_injection(
    mask: &MaskVideo,
    injection: MaskInjection,
    factors: (usize, usize, usize),
) -> Result<LatentGrid> {
    match injection {
        MaskInjection::AddToSrc | MaskInjection::AddToTgt | MaskInjection::SeqCatMask => {
            let clip = mask.clip();
            let (n, _, h, w) = clip.shape();
            let unit = clip.to_unit_samples();
            let mut replicated = Vec::with_capacity(n * 3 * h * w);
            let plane = h * w;
            for f in 0..n {
                for _c in 0..3 {
                    replicated.extend_from_slice(&unit[f * plane..(f + 1) * plane]);
                }
            }
            let rgb = VideoClip::new(n, 3, h, w, ClipData::F32(replicated))?;
            surrogate_encode(&rgb, factors)
        }
        MaskInjection::DownsampleAddToSrc => surrogate_encode(mask.clip(), factors),
    }
}

/// Latent channel count the configured mask route produces.
pub fn mask_latent_channels(injection: MaskInjection) -> usize {
    match injection {
        MaskInjection::DownsampleAddToSrc => 1,
        _ => 3,
    }
}
