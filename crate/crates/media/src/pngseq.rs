//! PNG-sequence directories (`frame_%05d.png`) for human inspection.
//!
//! Lossy relative to f32 clips (8-bit quantization); the RVID container is
//! the bit-exact interchange format.

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use crate::{ClipData, MediaError, Result, VideoClip};

fn frame_name(index: usize) -> String {
    format!("frame_{index:05}.png")
}

pub fn export_png_sequence(clip: &VideoClip, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| MediaError::io(dir, e))?;
    if clip.channels() != 1 && clip.channels() != 3 {
        return Err(MediaError::PngSequence(format!(
            "png export supports 1 or 3 channels, got {}",
            clip.channels()
        )));
    }
    let quantized = clip.to_u8();
    let bytes = match quantized.data() {
        ClipData::U8(v) => v,
        ClipData::F32(_) => unreachable!("to_u8 always yields u8 data"),
    };
    let (h, w) = (clip.height() as u32, clip.width() as u32);
    let plane = (h * w) as usize;
    for frame in 0..clip.frames() {
        let path = dir.join(frame_name(frame));
        let base = frame * clip.channels() * plane;
        if clip.channels() == 1 {
            let img = GrayImage::from_raw(w, h, bytes[base..base + plane].to_vec())
                .expect("buffer sized from clip dims");
            img.save(&path)?;
        } else {
            // Channel-major clip to interleaved RGB rows.
            let mut interleaved = Vec::with_capacity(plane * 3);
            for p in 0..plane {
                for c in 0..3 {
                    interleaved.push(bytes[base + c * plane + p]);
                }
            }
            let img = RgbImage::from_raw(w, h, interleaved).expect("buffer sized from clip dims");
            img.save(&path)?;
        }
    }
    Ok(())
}

pub fn import_png_sequence(dir: impl AsRef<Path>) -> Result<VideoClip> {
    let dir = dir.as_ref();
    let mut frames = Vec::new();
    for index in 0.. {
        let path = dir.join(frame_name(index));
        if !path.exists() {
            break;
        }
        frames.push(image::open(&path)?);
    }
    if frames.is_empty() {
        return Err(MediaError::PngSequence(format!(
            "no frame_00000.png under {}",
            dir.display()
        )));
    }
    let grayscale = frames
        .iter()
        .all(|f| matches!(f, DynamicImage::ImageLuma8(_)));
    let (w, h) = (frames[0].width(), frames[0].height());
    let channels = if grayscale { 1 } else { 3 };
    let plane = (w * h) as usize;
    let mut data = Vec::with_capacity(frames.len() * channels * plane);
    for frame in &frames {
        if frame.width() != w || frame.height() != h {
            return Err(MediaError::PngSequence(
                "frames disagree on dimensions".to_string(),
            ));
        }
        if grayscale {
            data.extend_from_slice(frame.to_luma8().as_raw());
        } else {
            let rgb = frame.to_rgb8();
            let raw = rgb.as_raw();
            for c in 0..3 {
                data.extend(raw.chunks_exact(3).map(|px| px[c]));
            }
        }
    }
    VideoClip::new(
        frames.len(),
        channels,
        h as usize,
        w as usize,
        ClipData::U8(data),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn rgb_sequence_roundtrip() {
        let dir = tempdir().unwrap();
        let clip = VideoClip::new(2, 3, 2, 3, ClipData::U8((0u8..36).collect())).unwrap();
        export_png_sequence(&clip, dir.path()).unwrap();
        assert_eq!(import_png_sequence(dir.path()).unwrap(), clip);
    }

    #[test]
    fn mask_sequence_roundtrip_as_grayscale() {
        let dir = tempdir().unwrap();
        let clip = VideoClip::new(1, 1, 2, 2, ClipData::U8(vec![0, 255, 255, 0])).unwrap();
        export_png_sequence(&clip, dir.path()).unwrap();
        assert_eq!(import_png_sequence(dir.path()).unwrap(), clip);
    }
}
