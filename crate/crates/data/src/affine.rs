//! Shared affine camera trajectories over image edit pairs.
//!
//! The camera samples a rotated, zoomed, translated window from the still
//! image; zoom <= 1 keeps the window inside the frame. Geometry uses
//! continuous pixel-area coordinates: the image spans `[0,W] x [0,H]` and
//! pixel centers sit at half-integers, so the window half-extents are
//! exactly `hx = z(W|cos| + H|sin|)/2`, `hy = z(W|sin| + H|cos|)/2`.

use serde::{Deserialize, Serialize};
use v2vforge_media::{ClipData, Image, VideoClip};
use v2vforge_tensor::SplitRng;

use crate::{DataError, Result};

pub const ROTATION_MAX_DEG: f64 = 15.0;
pub const ZOOM_MIN: f64 = 0.66;
pub const ZOOM_MAX: f64 = 1.0;
pub const TRANSLATION_MAX: f64 = 0.33;

/// One camera pose: rotation in degrees, window-scale zoom, and translation
/// as a fraction of frame width/height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinePose {
    pub rotation_deg: f64,
    pub zoom: f64,
    pub tx: f64,
    pub ty: f64,
}

impl AffinePose {
    pub const NEUTRAL: AffinePose = AffinePose {
        rotation_deg: 0.0,
        zoom: 1.0,
        tx: 0.0,
        ty: 0.0,
    };

    fn lerp(from: &AffinePose, to: &AffinePose, frac: f64) -> AffinePose {
        AffinePose {
            rotation_deg: from.rotation_deg + frac * (to.rotation_deg - from.rotation_deg),
            zoom: from.zoom + frac * (to.zoom - from.zoom),
            tx: from.tx + frac * (to.tx - from.tx),
            ty: from.ty + frac * (to.ty - from.ty),
        }
    }
}

/// Per-frame pose sequence; pose 0 is neutral unless reversed, in which
/// case the final pose is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineTrajectory {
    pub poses: Vec<AffinePose>,
    pub reversed: bool,
}

/// The four window corners in pixel-area coordinates.
pub fn window_corners(pose: &AffinePose, width: usize, height: usize) -> [(f64, f64); 4] {
    let (w, h) = (width as f64, height as f64);
    let theta = pose.rotation_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let cx = w / 2.0 + pose.tx * w;
    let cy = h / 2.0 + pose.ty * h;
    let ex = pose.zoom * w / 2.0;
    let ey = pose.zoom * h / 2.0;
    let mut corners = [(0.0, 0.0); 4];
    for (i, (sx, sy)) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)]
        .into_iter()
        .enumerate()
    {
        let ox = sx * ex;
        let oy = sy * ey;
        corners[i] = (cx + cos * ox - sin * oy, cy + sin * ox + cos * oy);
    }
    corners
}

/// Clamp a pose so the sampling window stays inside the frame.
///
/// Zoom is reduced first (preserving the sampled rotation), then the
/// translation is clamped into the remaining slack.
pub fn constrain_pose(pose: &AffinePose, width: usize, height: usize) -> AffinePose {
    let (w, h) = (width as f64, height as f64);
    let theta = pose.rotation_deg.to_radians();
    let (abs_sin, abs_cos) = (theta.sin().abs(), theta.cos().abs());

    let zx = w / (w * abs_cos + h * abs_sin);
    let zy = h / (w * abs_sin + h * abs_cos);
    let zoom = pose.zoom.min(zx).min(zy);

    let hx = zoom * (w * abs_cos + h * abs_sin) / 2.0;
    let hy = zoom * (w * abs_sin + h * abs_cos) / 2.0;
    let slack_x = ((w / 2.0 - hx) / w).max(0.0);
    let slack_y = ((h / 2.0 - hy) / h).max(0.0);

    AffinePose {
        rotation_deg: pose.rotation_deg,
        zoom,
        tx: pose.tx.clamp(-slack_x, slack_x),
        ty: pose.ty.clamp(-slack_y, slack_y),
    }
}

/// Maximum distance any window corner lies outside the frame, in pixels.
pub fn corner_violation(pose: &AffinePose, width: usize, height: usize) -> f64 {
    let (w, h) = (width as f64, height as f64);
    window_corners(pose, width, height)
        .iter()
        .map(|&(x, y)| {
            let dx = (-x).max(x - w).max(0.0);
            let dy = (-y).max(y - h).max(0.0);
            dx.max(dy)
        })
        .fold(0.0, f64::max)
}

/// Per-frame poses linearly interpolated from neutral to the target,
/// before any feasibility clamping.
pub fn interpolate_poses(target: &AffinePose, n_frames: usize) -> Vec<AffinePose> {
    assert!(n_frames >= 1, "trajectory needs at least one frame");
    (0..n_frames)
        .map(|k| {
            let frac = if n_frames == 1 {
                0.0
            } else {
                k as f64 / (n_frames - 1) as f64
            };
            AffinePose::lerp(&AffinePose::NEUTRAL, target, frac)
        })
        .collect()
}

/// Draw a target pose uniformly within bounds, interpolate per frame from
/// neutral, constrain every interpolated pose, and reverse with p=0.5.
pub fn sample_trajectory(n_frames: usize, dims: (usize, usize), seed: u64) -> AffineTrajectory {
    let (width, height) = dims;
    let mut rng = SplitRng::new(seed);
    let target = AffinePose {
        rotation_deg: rng.uniform_in(-ROTATION_MAX_DEG, ROTATION_MAX_DEG),
        zoom: rng.uniform_in(ZOOM_MIN, ZOOM_MAX),
        tx: rng.uniform_in(-TRANSLATION_MAX, TRANSLATION_MAX),
        ty: rng.uniform_in(-TRANSLATION_MAX, TRANSLATION_MAX),
    };
    let reversed = rng.bernoulli(0.5);

    let mut poses: Vec<AffinePose> = interpolate_poses(&target, n_frames)
        .iter()
        .map(|pose| constrain_pose(pose, width, height))
        .collect();
    if reversed {
        poses.reverse();
    }
    AffineTrajectory { poses, reversed }
}

#[inline]
fn bilinear(samples: &[f32], width: usize, height: usize, plane: usize, x: f64, y: f64) -> f32 {
    // x, y in pixel-center coordinates; clamp-to-edge absorbs the
    // half-pixel fringe of the area-coordinate window.
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let fx = (x - x0 as f64) as f32;
    let fy = (y - y0 as f64) as f32;
    let p00 = samples[plane + y0 * width + x0];
    let p10 = samples[plane + y0 * width + x1];
    let p01 = samples[plane + y1 * width + x0];
    let p11 = samples[plane + y1 * width + x1];
    let top = p00 + fx * (p10 - p00);
    let bottom = p01 + fx * (p11 - p01);
    top + fy * (bottom - top)
}

/// Resample an image through a pose window. Output keeps the input
/// dimensions; the pose must be feasible (corners inside by 1e-6 px).
pub fn warp_image(image: &Image, pose: &AffinePose) -> Result<Image> {
    let clip = image.clip();
    let (width, height, channels) = (clip.width(), clip.height(), clip.channels());
    let violation = corner_violation(pose, width, height);
    if violation > 1e-6 {
        let worst = window_corners(pose, width, height)
            .into_iter()
            .max_by(|a, b| {
                let va = (-a.0).max(a.0 - width as f64).max(-a.1).max(a.1 - height as f64);
                let vb = (-b.0).max(b.0 - width as f64).max(-b.1).max(b.1 - height as f64);
                va.total_cmp(&vb)
            })
            .unwrap();
        return Err(DataError::InfeasiblePose {
            x: worst.0,
            y: worst.1,
            width,
            height,
        });
    }

    let identity = *pose == AffinePose::NEUTRAL;
    let samples = clip.to_unit_samples();
    if identity {
        // Exact passthrough at the integer grid.
        let out = VideoClip::new(1, channels, height, width, ClipData::F32(samples))?;
        return Ok(Image::new(out)?);
    }

    let (w, h) = (width as f64, height as f64);
    let theta = pose.rotation_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let cx = w / 2.0 + pose.tx * w;
    let cy = h / 2.0 + pose.ty * h;

    let mut out = vec![0.0f32; channels * height * width];
    for c in 0..channels {
        let plane = c * height * width;
        for v in 0..height {
            let oy = pose.zoom * ((v as f64 + 0.5) - h / 2.0);
            for u in 0..width {
                let ox = pose.zoom * ((u as f64 + 0.5) - w / 2.0);
                let sx = cx + cos * ox - sin * oy;
                let sy = cy + sin * ox + cos * oy;
                out[plane + v * width + u] =
                    bilinear(&samples, width, height, plane, sx - 0.5, sy - 0.5);
            }
        }
    }
    Ok(Image::new(VideoClip::new(1, channels, height, width, ClipData::F32(out))?)?)
}

/// An I2I pair lifted to a pseudo V2V pair, with per-clip pose records.
#[derive(Debug, Clone)]
pub struct LiftedPair {
    pub source: VideoClip,
    pub target: VideoClip,
    pub source_poses: Vec<AffinePose>,
    pub target_poses: Vec<AffinePose>,
}

/// Apply one trajectory to both images of an edit pair.
pub fn lift_pair(src: &Image, tgt: &Image, trajectory: &AffineTrajectory) -> Result<LiftedPair> {
    if src.width() != tgt.width() || src.height() != tgt.height() || src.channels() != tgt.channels()
    {
        return Err(DataError::DimMismatch(format!(
            "source {}x{}x{} vs target {}x{}x{}",
            src.channels(),
            src.height(),
            src.width(),
            tgt.channels(),
            tgt.height(),
            tgt.width()
        )));
    }
    let (channels, height, width) = (src.channels(), src.height(), src.width());
    let n = trajectory.poses.len();
    let mut src_data = Vec::with_capacity(n * channels * height * width);
    let mut tgt_data = Vec::with_capacity(n * channels * height * width);
    for pose in &trajectory.poses {
        let ws = warp_image(src, pose)?;
        let wt = warp_image(tgt, pose)?;
        src_data.extend_from_slice(match ws.clip().data() {
            ClipData::F32(v) => v.as_slice(),
            ClipData::U8(_) => unreachable!("warp always emits f32"),
        });
        tgt_data.extend_from_slice(match wt.clip().data() {
            ClipData::F32(v) => v.as_slice(),
            ClipData::U8(_) => unreachable!("warp always emits f32"),
        });
    }
    Ok(LiftedPair {
        source: VideoClip::new(n, channels, height, width, ClipData::F32(src_data))?,
        target: VideoClip::new(n, channels, height, width, ClipData::F32(tgt_data))?,
        source_poses: trajectory.poses.clone(),
        target_poses: trajectory.poses.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image_from(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Image {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Image::new(VideoClip::new(1, 1, height, width, ClipData::F32(data)).unwrap()).unwrap()
    }

    #[test]
    fn neutral_pose_has_no_translation_slack() {
        let pose = AffinePose {
            tx: 0.2,
            ty: -0.1,
            ..AffinePose::NEUTRAL
        };
        let c = constrain_pose(&pose, 64, 48);
        assert_eq!(c.tx, 0.0);
        assert_eq!(c.ty, 0.0);
    }

    #[test]
    fn zoomed_out_translation_clamps_to_half_margin() {
        let pose = AffinePose {
            zoom: 0.66,
            tx: 0.33,
            ty: 0.33,
            ..AffinePose::NEUTRAL
        };
        let c = constrain_pose(&pose, 100, 100);
        assert!((c.tx - 0.17).abs() < 1e-12, "tx = {}", c.tx);
        assert!((c.ty - 0.17).abs() < 1e-12);
    }

    #[test]
    fn rotation_on_square_image_reduces_zoom() {
        let pose = AffinePose {
            rotation_deg: 15.0,
            ..AffinePose::NEUTRAL
        };
        let c = constrain_pose(&pose, 64, 64);
        let theta = 15f64.to_radians();
        let expected = 1.0 / (theta.cos() + theta.sin());
        assert!((c.zoom - expected).abs() < 1e-12, "zoom = {}", c.zoom);
        // That is ~0.8165 for a square frame.
        assert!((c.zoom - 0.8165).abs() < 1e-3);
        assert!(corner_violation(&c, 64, 64) <= 1e-9);
    }

    #[test]
    fn single_frame_trajectory_is_neutral() {
        let traj = sample_trajectory(1, (64, 48), 5);
        assert_eq!(traj.poses.len(), 1);
        assert_eq!(traj.poses[0], AffinePose::NEUTRAL);
    }

    #[test]
    fn trajectory_is_deterministic_and_feasible() {
        let a = sample_trajectory(81, (832, 480), 42);
        let b = sample_trajectory(81, (832, 480), 42);
        assert_eq!(a, b);
        for pose in &a.poses {
            assert!(corner_violation(pose, 832, 480) <= 1e-9);
        }
    }

    #[test]
    fn neutral_endpoint_respects_reversal() {
        for seed in 0..32 {
            let traj = sample_trajectory(9, (64, 48), seed);
            let neutral_at = if traj.reversed { 8 } else { 0 };
            assert_eq!(traj.poses[neutral_at], AffinePose::NEUTRAL, "seed {seed}");
        }
        // Both branches occur.
        let reversals: Vec<bool> = (0..32)
            .map(|s| sample_trajectory(9, (64, 48), s).reversed)
            .collect();
        assert!(reversals.iter().any(|&r| r));
        assert!(reversals.iter().any(|&r| !r));
    }

    #[test]
    fn neutral_warp_is_identity() {
        let img = image_from(7, 5, |x, y| ((x * 31 + y * 17) % 256) as f32 / 255.0);
        let out = warp_image(&img, &AffinePose::NEUTRAL).unwrap();
        assert_eq!(out.clip().to_unit_samples(), img.clip().to_unit_samples());
    }

    #[test]
    fn half_zoom_matches_direct_geometric_construction() {
        // 4x4 image, z = 0.5: the window is the centered 2x2-pixel area.
        // Independent construction: output pixel (u,v) samples the source at
        // area point (u+0.5)*0.5 + 1 = pixel-center coords below.
        let img = image_from(4, 4, |x, y| (y * 4 + x) as f32 / 16.0);
        let pose = AffinePose {
            zoom: 0.5,
            ..AffinePose::NEUTRAL
        };
        let out = warp_image(&img, &pose).unwrap();
        let src = img.clip().to_unit_samples();
        let expect = |u: usize, v: usize| -> f32 {
            let sx = (0.5 * ((u as f64 + 0.5) - 2.0) + 2.0 - 0.5).clamp(0.0, 3.0);
            let sy = (0.5 * ((v as f64 + 0.5) - 2.0) + 2.0 - 0.5).clamp(0.0, 3.0);
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(3), (y0 + 1).min(3));
            let (fx, fy) = ((sx - x0 as f64) as f32, (sy - y0 as f64) as f32);
            let top = src[y0 * 4 + x0] + fx * (src[y0 * 4 + x1] - src[y0 * 4 + x0]);
            let bot = src[y1 * 4 + x0] + fx * (src[y1 * 4 + x1] - src[y1 * 4 + x0]);
            top + fy * (bot - top)
        };
        for v in 0..4 {
            for u in 0..4 {
                assert_eq!(out.value(0, v, u), expect(u, v), "pixel ({u},{v})");
            }
        }
    }

    #[test]
    fn constant_image_invariant_under_any_feasible_warp() {
        let img = image_from(8, 6, |_, _| 0.375);
        for seed in 0..8 {
            let traj = sample_trajectory(5, (8, 6), seed);
            for pose in &traj.poses {
                let out = warp_image(&img, pose).unwrap();
                assert!(out.clip().to_unit_samples().iter().all(|&v| v == 0.375));
            }
        }
    }

    #[test]
    fn infeasible_pose_rejected() {
        let pose = AffinePose {
            tx: 0.2,
            ..AffinePose::NEUTRAL
        };
        let img = image_from(4, 4, |_, _| 0.0);
        assert!(matches!(
            warp_image(&img, &pose),
            Err(DataError::InfeasiblePose { .. })
        ));
    }

    #[test]
    fn lift_pair_shares_motion_exactly() {
        let img = image_from(16, 12, |x, y| ((x ^ y) % 7) as f32 / 7.0);
        let traj = sample_trajectory(6, (16, 12), 9);
        let pair = lift_pair(&img, &img, &traj).unwrap();
        assert_eq!(pair.source, pair.target);
        assert_eq!(pair.source_poses, pair.target_poses);
    }

    #[test]
    fn all_neutral_trajectory_repeats_the_stills() {
        let src = image_from(6, 6, |x, _| x as f32 / 6.0);
        let tgt = image_from(6, 6, |_, y| y as f32 / 6.0);
        let traj = AffineTrajectory {
            poses: vec![AffinePose::NEUTRAL; 4],
            reversed: false,
        };
        let pair = lift_pair(&src, &tgt, &traj).unwrap();
        let src_unit = src.clip().to_unit_samples();
        let tgt_unit = tgt.clip().to_unit_samples();
        for k in 0..4 {
            assert_eq!(pair.source.frame_unit_samples(k), src_unit);
            assert_eq!(pair.target.frame_unit_samples(k), tgt_unit);
        }
    }

    #[test]
    fn lifted_videos_differ_only_where_images_differ() {
        // Recolored target: bump one interior region; warped diffs must be
        // contained in the warped support of the image diff.
        let src = image_from(16, 16, |x, y| ((x * 5 + y * 3) % 11) as f32 / 11.0);
        let tgt_clip = {
            let mut data = src.clip().to_unit_samples();
            for y in 4..9 {
                for x in 6..12 {
                    data[y * 16 + x] = (data[y * 16 + x] + 0.43).min(1.0);
                }
            }
            VideoClip::new(1, 1, 16, 16, ClipData::F32(data)).unwrap()
        };
        let tgt = Image::new(tgt_clip).unwrap();
        let diff_support = image_from(16, 16, |x, y| {
            if (4..9).contains(&y) && (6..12).contains(&x) {
                1.0
            } else {
                0.0
            }
        });

        let traj = sample_trajectory(5, (16, 16), 42);
        let pair = lift_pair(&src, &tgt, &traj).unwrap();
        for (k, pose) in traj.poses.iter().enumerate() {
            let warped_support = warp_image(&diff_support, pose).unwrap();
            let s = pair.source.frame_unit_samples(k);
            let t = pair.target.frame_unit_samples(k);
            for (i, (&a, &b)) in s.iter().zip(&t).enumerate() {
                if a != b {
                    // Any differing pixel must touch the warped edit support.
                    assert!(
                        warped_support.clip().to_unit_samples()[i] > 0.0,
                        "frame {k} pixel {i} differs outside the warped edit support"
                    );
                }
            }
        }
    }
}
