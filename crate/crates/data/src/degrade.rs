//! Model-free controllable-generation condition signals.
//!
//! Each kind maps an RGB clip to a same-shape clip, deterministically given
//! the seed. Stochastic kinds key their stream by (seed, frame index) so
//! frame-parallel execution stays reproducible. Value-preserving integer
//! ops (negate, grayscale) keep u8 encoding when the input is u8; the rest
//! emit unit-interval f32.

use serde::{Deserialize, Serialize};
use v2vforge_media::{ClipData, MaskVideo, VideoClip};
use v2vforge_tensor::SplitRng;

use crate::transition::BoxPx;
use crate::{DataError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DegradeKind {
    Grayscale,
    GaussianBlur { sigma: f64 },
    Negate,
    Saturation { factor: f64 },
    Contrast { factor: f64 },
    Brightness { delta: f64 },
    Pixelate { block: usize },
    WaveWarp { amplitude: f64, period: f64 },
    Posterize { levels: u32 },
    GaussianNoise { sigma: f64 },
    ColorOverlay { rgba: [f64; 4] },
    CannyEdges { low: f64, high: f64 },
    /// Blacken per-frame boxes; one box broadcasts to all frames.
    RectMask { boxes: Vec<BoxPx> },
    BorderMask { px: usize },
}

/// Degraded clip plus the mask the region kinds emit.
#[derive(Debug, Clone)]
pub struct DegradeOutput {
    pub clip: VideoClip,
    pub mask: Option<MaskVideo>,
}

fn validate(kind: &DegradeKind, clip: &VideoClip) -> Result<()> {
    if clip.channels() != 3 {
        return Err(DataError::InvalidParam(format!(
            "degradations expect RGB clips, got {} channels",
            clip.channels()
        )));
    }
    let bad = |msg: String| Err(DataError::InvalidParam(msg));
    match kind {
        DegradeKind::GaussianBlur { sigma } if *sigma <= 0.0 => {
            bad(format!("blur sigma must be > 0, got {sigma}"))
        }
        DegradeKind::Saturation { factor } | DegradeKind::Contrast { factor } if *factor < 0.0 => {
            bad(format!("factor must be >= 0, got {factor}"))
        }
        DegradeKind::Pixelate { block } if *block < 1 => {
            bad("pixelate block must be >= 1".to_string())
        }
        DegradeKind::WaveWarp { amplitude, period } if *amplitude < 0.0 || *period <= 0.0 => {
            bad(format!("wave warp needs amplitude >= 0, period > 0, got {amplitude}, {period}"))
        }
        DegradeKind::Posterize { levels } if !(2..=255).contains(levels) => {
            bad(format!("posterize levels must be in [2,255], got {levels}"))
        }
        DegradeKind::GaussianNoise { sigma } if *sigma < 0.0 => {
            bad(format!("noise sigma must be >= 0, got {sigma}"))
        }
        DegradeKind::ColorOverlay { rgba } if rgba.iter().any(|v| !(0.0..=1.0).contains(v)) => {
            bad(format!("overlay rgba components must be in [0,1], got {rgba:?}"))
        }
        DegradeKind::CannyEdges { low, high } if !(*low > 0.0 && high > low) => {
            bad(format!("canny needs 0 < low < high, got {low}, {high}"))
        }
        DegradeKind::RectMask { boxes } if boxes.is_empty() => {
            bad("rect mask needs at least one box".to_string())
        }
        DegradeKind::RectMask { boxes } => {
            for b in boxes {
                if b.x + b.w > clip.width() || b.y + b.h > clip.height() {
                    return bad(format!("box {b:?} exceeds frame"));
                }
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

pub fn apply_degradation(clip: &VideoClip, kind: &DegradeKind, seed: u64) -> Result<DegradeOutput> {
    validate(kind, clip)?;
    let (n, _, h, w) = clip.shape();
    let plane = h * w;

    let out = match kind {
        DegradeKind::Negate => DegradeOutput {
            clip: match clip.data() {
                // Integer-domain involution is exact on u8.
                ClipData::U8(v) => VideoClip::new(
                    n,
                    3,
                    h,
                    w,
                    ClipData::U8(v.iter().map(|&b| 255 - b).collect()),
                )?,
                ClipData::F32(v) => VideoClip::new(
                    n,
                    3,
                    h,
                    w,
                    ClipData::F32(v.iter().map(|&s| 1.0 - s).collect()),
                )?,
            },
            mask: None,
        },
        DegradeKind::Grayscale => DegradeOutput {
            clip: grayscale(clip),
            mask: None,
        },
        DegradeKind::GaussianBlur { sigma } => DegradeOutput {
            clip: per_frame_plane_map(clip, |src, dst| gaussian_blur_plane(src, w, h, *sigma, dst)),
            mask: None,
        },
        DegradeKind::Saturation { factor } => {
            let f = *factor as f32;
            DegradeOutput {
                clip: per_pixel_rgb(clip, |r, g, b| {
                    let l = luma(r, g, b);
                    (l + f * (r - l), l + f * (g - l), l + f * (b - l))
                }),
                mask: None,
            }
        }
        DegradeKind::Contrast { factor } => {
            let f = *factor as f32;
            DegradeOutput {
                clip: per_pixel_rgb(clip, |r, g, b| {
                    (0.5 + f * (r - 0.5), 0.5 + f * (g - 0.5), 0.5 + f * (b - 0.5))
                }),
                mask: None,
            }
        }
        DegradeKind::Brightness { delta } => {
            let d = *delta as f32;
            DegradeOutput {
                clip: per_pixel_rgb(clip, |r, g, b| (r + d, g + d, b + d)),
                mask: None,
            }
        }
        DegradeKind::Pixelate { block } => DegradeOutput {
            clip: pixelate(clip, *block),
            mask: None,
        },
        DegradeKind::WaveWarp { amplitude, period } => DegradeOutput {
            clip: per_frame_plane_map(clip, |src, dst| {
                wave_warp_plane(src, w, h, *amplitude, *period, dst)
            }),
            mask: None,
        },
        DegradeKind::Posterize { levels } => {
            let steps = (*levels - 1) as f32;
            DegradeOutput {
                clip: per_pixel_rgb(clip, |r, g, b| {
                    (
                        (r * steps).round() / steps,
                        (g * steps).round() / steps,
                        (b * steps).round() / steps,
                    )
                }),
                mask: None,
            }
        }
        DegradeKind::GaussianNoise { sigma } => DegradeOutput {
            clip: gaussian_noise(clip, *sigma, seed),
            mask: None,
        },
        DegradeKind::ColorOverlay { rgba } => {
            let [or, og, ob, a] = rgba.map(|v| v as f32);
            DegradeOutput {
                clip: per_pixel_rgb(clip, |r, g, b| {
                    (
                        (1.0 - a) * r + a * or,
                        (1.0 - a) * g + a * og,
                        (1.0 - a) * b + a * ob,
                    )
                }),
                mask: None,
            }
        }
        DegradeKind::CannyEdges { low, high } => DegradeOutput {
            clip: canny_edges(clip, *low, *high),
            mask: None,
        },
        DegradeKind::RectMask { boxes } => {
            let per_frame_box = |k: usize| {
                if boxes.len() == 1 {
                    boxes[0]
                } else {
                    boxes[k.min(boxes.len() - 1)]
                }
            };
            let mut data = clip.to_unit_samples();
            let mut flags = vec![false; n * plane];
            for k in 0..n {
                let b = per_frame_box(k);
                for y in b.y..b.y + b.h {
                    for c in 0..3 {
                        let row = (k * 3 + c) * plane + y * w;
                        data[row + b.x..row + b.x + b.w].fill(0.0);
                    }
                    let mrow = k * plane + y * w;
                    flags[mrow + b.x..mrow + b.x + b.w].fill(true);
                }
            }
            DegradeOutput {
                clip: VideoClip::new(n, 3, h, w, ClipData::F32(data))?,
                mask: Some(MaskVideo::from_flags(n, h, w, &flags)?),
            }
        }
        DegradeKind::BorderMask { px } => {
            let px = (*px).min(w / 2).min(h / 2);
            let mut data = clip.to_unit_samples();
            let mut flags = vec![false; n * plane];
            for k in 0..n {
                for y in 0..h {
                    for x in 0..w {
                        let on_border = y < px || y >= h - px || x < px || x >= w - px;
                        if on_border {
                            for c in 0..3 {
                                data[((k * 3 + c) * h + y) * w + x] = 0.0;
                            }
                            flags[(k * h + y) * w + x] = true;
                        }
                    }
                }
            }
            DegradeOutput {
                clip: VideoClip::new(n, 3, h, w, ClipData::F32(data))?,
                mask: Some(MaskVideo::from_flags(n, h, w, &flags)?),
            }
        }
    };
    Ok(out)
}

/// Boxes keyed by (seed, frame index) for random inpainting regions.
pub fn sample_rect_boxes(
    dims: (usize, usize),
    n_frames: usize,
    seed: u64,
    min_frac: f64,
    max_frac: f64,
) -> Vec<BoxPx> {
    let (h, w) = dims;
    let root = SplitRng::new(seed);
    (0..n_frames)
        .map(|k| {
            let mut rng = root.split(k as u64);
            let bw = ((w as f64) * rng.uniform_in(min_frac, max_frac)).round().max(1.0) as usize;
            let bh = ((h as f64) * rng.uniform_in(min_frac, max_frac)).round().max(1.0) as usize;
            let bw = bw.min(w);
            let bh = bh.min(h);
            BoxPx {
                x: rng.index(w - bw + 1),
                y: rng.index(h - bh + 1),
                w: bw,
                h: bh,
            }
        })
        .collect()
}

#[inline]
fn luma(r: f32, g: f32, b: f32) -> f32 {
    if r.to_bits() == g.to_bits() && g.to_bits() == b.to_bits() {
        // Already gray; keep the sample bit-exact.
        return r;
    }
    ((0.299f64 * r as f64) + (0.587f64 * g as f64) + (0.114f64 * b as f64)) as f32
}

fn grayscale(clip: &VideoClip) -> VideoClip {
    let (n, _, h, w) = clip.shape();
    let plane = h * w;
    match clip.data() {
        ClipData::U8(v) => {
            // Integer-domain rounding keeps grayscale idempotent on u8.
            let mut out = vec![0u8; v.len()];
            for k in 0..n {
                for p in 0..plane {
                    let r = v[(k * 3) * plane + p];
                    let g = v[(k * 3 + 1) * plane + p];
                    let b = v[(k * 3 + 2) * plane + p];
                    let l = (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as u8;
                    for c in 0..3 {
                        out[(k * 3 + c) * plane + p] = l;
                    }
                }
            }
            VideoClip::new(n, 3, h, w, ClipData::U8(out)).expect("shape preserved")
        }
        ClipData::F32(_) => per_pixel_rgb(clip, |r, g, b| {
            let l = luma(r, g, b);
            (l, l, l)
        }),
    }
}

fn per_pixel_rgb(clip: &VideoClip, f: impl Fn(f32, f32, f32) -> (f32, f32, f32)) -> VideoClip {
    let (n, _, h, w) = clip.shape();
    let plane = h * w;
    let v = clip.to_unit_samples();
    let mut out = vec![0.0f32; v.len()];
    for k in 0..n {
        for p in 0..plane {
            let (r, g, b) = f(
                v[(k * 3) * plane + p],
                v[(k * 3 + 1) * plane + p],
                v[(k * 3 + 2) * plane + p],
            );
            out[(k * 3) * plane + p] = r.clamp(0.0, 1.0);
            out[(k * 3 + 1) * plane + p] = g.clamp(0.0, 1.0);
            out[(k * 3 + 2) * plane + p] = b.clamp(0.0, 1.0);
        }
    }
    VideoClip::new(n, 3, h, w, ClipData::F32(out)).expect("shape preserved")
}

fn per_frame_plane_map(
    clip: &VideoClip,
    f: impl Fn(&[f32], &mut [f32]),
) -> VideoClip {
    let (n, c, h, w) = clip.shape();
    let plane = h * w;
    let v = clip.to_unit_samples();
    let mut out = vec![0.0f32; v.len()];
    for kc in 0..n * c {
        f(&v[kc * plane..(kc + 1) * plane], &mut out[kc * plane..(kc + 1) * plane]);
    }
    for s in out.iter_mut() {
        *s = s.clamp(0.0, 1.0);
    }
    VideoClip::new(n, c, h, w, ClipData::F32(out)).expect("shape preserved")
}

fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= sum;
    }
    kernel.into_iter().map(|k| k as f32).collect()
}

fn gaussian_blur_plane(src: &[f32], w: usize, h: usize, sigma: f64, dst: &mut [f32]) {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let mut tmp = vec![0.0f32; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0f32;
            for (ki, &kv) in kernel.iter().enumerate() {
                let sx = (x as i64 + ki as i64 - radius).clamp(0, w as i64 - 1) as usize;
                acc += kv * src[y * w + sx];
            }
            tmp[y * w + x] = acc;
        }
    }
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0f32;
            for (ki, &kv) in kernel.iter().enumerate() {
                let sy = (y as i64 + ki as i64 - radius).clamp(0, h as i64 - 1) as usize;
                acc += kv * tmp[sy * w + x];
            }
            dst[y * w + x] = acc;
        }
    }
}

fn wave_warp_plane(src: &[f32], w: usize, h: usize, amplitude: f64, period: f64, dst: &mut [f32]) {
    for y in 0..h {
        let shift = amplitude * (std::f64::consts::TAU * y as f64 / period).sin();
        for x in 0..w {
            let sx = x as f64 + shift;
            let x0 = sx.floor();
            let fx = (sx - x0) as f32;
            let x0c = (x0 as i64).clamp(0, w as i64 - 1) as usize;
            let x1c = (x0 as i64 + 1).clamp(0, w as i64 - 1) as usize;
            dst[y * w + x] = src[y * w + x0c] + fx * (src[y * w + x1c] - src[y * w + x0c]);
        }
    }
}

fn pixelate(clip: &VideoClip, block: usize) -> VideoClip {
    let (n, c, h, w) = clip.shape();
    let plane = h * w;
    let v = clip.to_unit_samples();
    let mut out = vec![0.0f32; v.len()];
    for kc in 0..n * c {
        let src = &v[kc * plane..(kc + 1) * plane];
        let dst = &mut out[kc * plane..(kc + 1) * plane];
        let mut by = 0;
        while by < h {
            let bh = block.min(h - by);
            let mut bx = 0;
            while bx < w {
                let bw = block.min(w - bx);
                let mut acc = 0.0f64;
                for y in by..by + bh {
                    for x in bx..bx + bw {
                        acc += src[y * w + x] as f64;
                    }
                }
                let mean = (acc / (bh * bw) as f64) as f32;
                for y in by..by + bh {
                    for x in bx..bx + bw {
                        dst[y * w + x] = mean;
                    }
                }
                bx += block;
            }
            by += block;
        }
    }
    VideoClip::new(n, c, h, w, ClipData::F32(out)).expect("shape preserved")
}

fn gaussian_noise(clip: &VideoClip, sigma: f64, seed: u64) -> VideoClip {
    let (n, c, h, w) = clip.shape();
    let per_frame = c * h * w;
    let mut out = clip.to_unit_samples();
    if sigma > 0.0 {
        let root = SplitRng::new(seed);
        for k in 0..n {
            let mut rng = root.split(k as u64);
            for s in out[k * per_frame..(k + 1) * per_frame].iter_mut() {
                *s = (*s + (sigma * rng.normal()) as f32).clamp(0.0, 1.0);
            }
        }
    }
    VideoClip::new(n, c, h, w, ClipData::F32(out)).expect("shape preserved")
}

/// Canny from first principles: Gaussian smoothing, Sobel gradients,
/// non-maximum suppression over four quantized directions, double
/// threshold, and 8-connected hysteresis. Thresholds are in unit-scale
/// gradient-magnitude units.
fn canny_edges(clip: &VideoClip, low: f64, high: f64) -> VideoClip {
    let (n, _, h, w) = clip.shape();
    let plane = h * w;
    let v = clip.to_unit_samples();
    let mut out = vec![0.0f32; n * 3 * plane];

    for k in 0..n {
        let mut gray = vec![0.0f32; plane];
        for p in 0..plane {
            gray[p] = luma(
                v[(k * 3) * plane + p],
                v[(k * 3 + 1) * plane + p],
                v[(k * 3 + 2) * plane + p],
            );
        }
        let mut smooth = vec![0.0f32; plane];
        gaussian_blur_plane(&gray, w, h, 1.4, &mut smooth);

        let at = |x: i64, y: i64| -> f32 {
            let x = x.clamp(0, w as i64 - 1) as usize;
            let y = y.clamp(0, h as i64 - 1) as usize;
            smooth[y * w + x]
        };
        let mut mag = vec![0.0f32; plane];
        let mut dir = vec![0u8; plane];
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                    - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
                let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                    - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
                let p = (y as usize) * w + x as usize;
                mag[p] = (gx * gx + gy * gy).sqrt();
                let angle = (gy as f64).atan2(gx as f64).to_degrees();
                let angle = if angle < 0.0 { angle + 180.0 } else { angle };
                dir[p] = if !(22.5..157.5).contains(&angle) {
                    0 // horizontal gradient: compare east/west
                } else if angle < 67.5 {
                    1 // 45 degrees
                } else if angle < 112.5 {
                    2 // vertical gradient: compare north/south
                } else {
                    3 // 135 degrees
                };
            }
        }

        // Non-maximum suppression.
        let mut thin = vec![0.0f32; plane];
        for y in 0..h {
            for x in 0..w {
                let p = y * w + x;
                let (dx, dy): (i64, i64) = match dir[p] {
                    0 => (1, 0),
                    1 => (1, 1),
                    2 => (0, 1),
                    _ => (1, -1),
                };
                let m = mag[p];
                let fwd = {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        0.0
                    } else {
                        mag[ny as usize * w + nx as usize]
                    }
                };
                let back = {
                    let (nx, ny) = (x as i64 - dx, y as i64 - dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        0.0
                    } else {
                        mag[ny as usize * w + nx as usize]
                    }
                };
                if m >= fwd && m >= back {
                    thin[p] = m;
                }
            }
        }

        // Double threshold + hysteresis from strong seeds.
        let mut state = vec![0u8; plane]; // 0 none, 1 weak, 2 strong
        let mut stack = Vec::new();
        for p in 0..plane {
            if thin[p] as f64 >= high {
                state[p] = 2;
                stack.push(p);
            } else if thin[p] as f64 >= low {
                state[p] = 1;
            }
        }
        while let Some(p) = stack.pop() {
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            for ny in y - 1..=y + 1 {
                for nx in x - 1..=x + 1 {
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let np = ny as usize * w + nx as usize;
                    if state[np] == 1 {
                        state[np] = 2;
                        stack.push(np);
                    }
                }
            }
        }
        for p in 0..plane {
            let e = if state[p] == 2 { 1.0 } else { 0.0 };
            for c in 0..3 {
                out[(k * 3 + c) * plane + p] = e;
            }
        }
    }
    VideoClip::new(n, 3, h, w, ClipData::F32(out)).expect("shape preserved")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_clip(n: usize, h: usize, w: usize) -> VideoClip {
        let mut data = Vec::new();
        for k in 0..n {
            for _c in 0..3 {
                for y in 0..h {
                    for x in 0..w {
                        data.push((((x + y + k) % 16) as f32) / 15.0);
                    }
                }
            }
        }
        VideoClip::new(n, 3, h, w, ClipData::F32(data)).unwrap()
    }

    fn u8_clip(n: usize, h: usize, w: usize, seed: u64) -> VideoClip {
        let mut rng = SplitRng::new(seed);
        let data: Vec<u8> = (0..n * 3 * h * w).map(|_| (rng.next_u64() & 0xFF) as u8).collect();
        VideoClip::new(n, 3, h, w, ClipData::U8(data)).unwrap()
    }

    #[test]
    fn negate_is_an_involution_on_u8() {
        let clip = u8_clip(2, 6, 6, 1);
        let once = apply_degradation(&clip, &DegradeKind::Negate, 0).unwrap().clip;
        let twice = apply_degradation(&once, &DegradeKind::Negate, 0).unwrap().clip;
        assert_eq!(twice, clip);
    }

    #[test]
    fn grayscale_equalizes_channels_and_is_idempotent() {
        for clip in [ramp_clip(2, 5, 5), u8_clip(2, 5, 5, 2)] {
            let once = apply_degradation(&clip, &DegradeKind::Grayscale, 0).unwrap().clip;
            let plane = 25;
            for k in 0..2 {
                for p in 0..plane {
                    let r = once.value(k, 0, p / 5, p % 5);
                    let g = once.value(k, 1, p / 5, p % 5);
                    let b = once.value(k, 2, p / 5, p % 5);
                    assert_eq!(r, g);
                    assert_eq!(g, b);
                }
            }
            let twice = apply_degradation(&once, &DegradeKind::Grayscale, 0).unwrap().clip;
            assert_eq!(twice, once);
        }
    }

    #[test]
    fn posterize_two_levels_is_binary_and_idempotent() {
        let clip = ramp_clip(1, 8, 8);
        let kind = DegradeKind::Posterize { levels: 2 };
        let once = apply_degradation(&clip, &kind, 0).unwrap().clip;
        assert!(once
            .to_unit_samples()
            .iter()
            .all(|&v| v == 0.0 || v == 1.0));
        let twice = apply_degradation(&once, &kind, 0).unwrap().clip;
        assert_eq!(twice, once);
    }

    #[test]
    fn pixelate_blocks_are_constant() {
        let clip = ramp_clip(1, 8, 12);
        let out = apply_degradation(&clip, &DegradeKind::Pixelate { block: 4 }, 0)
            .unwrap()
            .clip;
        for c in 0..3 {
            for by in (0..8).step_by(4) {
                for bx in (0..12).step_by(4) {
                    let v0 = out.value(0, c, by, bx);
                    for y in by..by + 4 {
                        for x in bx..bx + 4 {
                            assert_eq!(out.value(0, c, y, x), v0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_sigma_noise_is_identity() {
        let clip = ramp_clip(2, 4, 4);
        let out = apply_degradation(&clip, &DegradeKind::GaussianNoise { sigma: 0.0 }, 7)
            .unwrap()
            .clip;
        assert_eq!(out.to_unit_samples(), clip.to_unit_samples());
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let clip = ramp_clip(2, 4, 4);
        let kind = DegradeKind::GaussianNoise { sigma: 0.1 };
        let a = apply_degradation(&clip, &kind, 7).unwrap().clip;
        let b = apply_degradation(&clip, &kind, 7).unwrap().clip;
        let c = apply_degradation(&clip, &kind, 8).unwrap().clip;
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn canny_output_is_binary_and_finds_a_step_edge() {
        // Vertical step: left black, right white.
        let mut data = Vec::new();
        for _c in 0..3 {
            for _y in 0..16 {
                for x in 0..16 {
                    data.push(if x < 8 { 0.0 } else { 1.0 });
                }
            }
        }
        let clip = VideoClip::new(1, 3, 16, 16, ClipData::F32(data)).unwrap();
        let out = apply_degradation(&clip, &DegradeKind::CannyEdges { low: 0.1, high: 0.3 }, 0)
            .unwrap()
            .clip;
        let samples = out.to_unit_samples();
        assert!(samples.iter().all(|&v| v == 0.0 || v == 1.0));
        let edges: usize = samples[0..256].iter().filter(|&&v| v == 1.0).count();
        assert!(edges > 0, "step edge not detected");
        // Edge stays near the step column.
        for y in 0..16 {
            for x in 0..16 {
                if out.value(0, 0, y, x) == 1.0 {
                    assert!((6..=9).contains(&x), "edge at x={x}");
                }
            }
        }
    }

    #[test]
    fn rect_mask_blackens_box_and_reports_it() {
        let clip = ramp_clip(2, 8, 8);
        let boxes = vec![BoxPx { x: 2, y: 3, w: 4, h: 2 }];
        let out = apply_degradation(&clip, &DegradeKind::RectMask { boxes }, 0).unwrap();
        let mask = out.mask.expect("rect mask emits a mask");
        for k in 0..2 {
            for y in 0..8 {
                for x in 0..8 {
                    let inside = (2..6).contains(&x) && (3..5).contains(&y);
                    assert_eq!(mask.is_set(k, y, x), inside);
                    for c in 0..3 {
                        if inside {
                            assert_eq!(out.clip.value(k, c, y, x), 0.0);
                        } else {
                            assert_eq!(out.clip.value(k, c, y, x), clip.value(k, c, y, x));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn border_mask_covers_only_the_border() {
        let clip = ramp_clip(1, 6, 6);
        let out = apply_degradation(&clip, &DegradeKind::BorderMask { px: 1 }, 0).unwrap();
        let mask = out.mask.unwrap();
        for y in 0..6 {
            for x in 0..6 {
                let border = y == 0 || y == 5 || x == 0 || x == 5;
                assert_eq!(mask.is_set(0, y, x), border);
            }
        }
    }

    #[test]
    fn all_kinds_preserve_shape() {
        let clip = ramp_clip(3, 8, 8);
        let kinds = vec![
            DegradeKind::Grayscale,
            DegradeKind::GaussianBlur { sigma: 1.0 },
            DegradeKind::Negate,
            DegradeKind::Saturation { factor: 0.5 },
            DegradeKind::Contrast { factor: 1.2 },
            DegradeKind::Brightness { delta: 0.1 },
            DegradeKind::Pixelate { block: 3 },
            DegradeKind::WaveWarp { amplitude: 1.5, period: 4.0 },
            DegradeKind::Posterize { levels: 4 },
            DegradeKind::GaussianNoise { sigma: 0.05 },
            DegradeKind::ColorOverlay { rgba: [1.0, 0.0, 0.0, 0.3] },
            DegradeKind::CannyEdges { low: 0.1, high: 0.3 },
            DegradeKind::RectMask { boxes: vec![BoxPx { x: 0, y: 0, w: 2, h: 2 }] },
            DegradeKind::BorderMask { px: 2 },
        ];
        for kind in kinds {
            let out = apply_degradation(&clip, &kind, 3).unwrap();
            assert_eq!(out.clip.shape(), clip.shape(), "{kind:?}");
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let clip = ramp_clip(1, 4, 4);
        for kind in [
            DegradeKind::GaussianBlur { sigma: 0.0 },
            DegradeKind::Posterize { levels: 1 },
            DegradeKind::Pixelate { block: 0 },
            DegradeKind::CannyEdges { low: 0.3, high: 0.1 },
        ] {
            assert!(apply_degradation(&clip, &kind, 0).is_err(), "{kind:?}");
        }
    }

    #[test]
    fn sampled_boxes_are_deterministic_and_in_bounds() {
        let a = sample_rect_boxes((32, 48), 5, 9, 0.2, 0.5);
        let b = sample_rect_boxes((32, 48), 5, 9, 0.2, 0.5);
        assert_eq!(a, b);
        for bx in &a {
            assert!(bx.x + bx.w <= 48 && bx.y + bx.h <= 32);
        }
    }
}
