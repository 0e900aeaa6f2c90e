use crate::{MediaError, Result};

/// Sample storage for a clip: 8-bit integers in `[0,255]` or unit-interval reals.
#[derive(Debug, Clone, PartialEq)]
pub enum ClipData {
    U8(Vec<u8>),
    F32(Vec<f32>),
}

/// Tag for the two sample encodings, matching the container's encoding byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleEncoding {
    U8 = 0,
    F32 = 1,
}

impl ClipData {
    pub fn len(&self) -> usize {
        match self {
            ClipData::U8(v) => v.len(),
            ClipData::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn encoding(&self) -> SampleEncoding {
        match self {
            ClipData::U8(_) => SampleEncoding::U8,
            ClipData::F32(_) => SampleEncoding::F32,
        }
    }
}

/// Dense frame tensor with pixel-space semantics.
///
/// `data` is row-major over (frame, channel, row, column). Unit-interval
/// clips must hold finite samples in `[0,1]`; both invariants are enforced
/// at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    frames: usize,
    channels: usize,
    height: usize,
    width: usize,
    data: ClipData,
}

impl VideoClip {
    pub fn new(
        frames: usize,
        channels: usize,
        height: usize,
        width: usize,
        data: ClipData,
    ) -> Result<Self> {
        if frames < 1 || height < 1 || width < 1 || channels < 1 {
            return Err(MediaError::InvalidClip(format!(
                "dimensions must be >= 1, got {frames}x{channels}x{height}x{width}"
            )));
        }
        let expected = frames * channels * height * width;
        if data.len() != expected {
            return Err(MediaError::InvalidClip(format!(
                "data length {} != N*C*H*W = {expected}",
                data.len()
            )));
        }
        if let ClipData::F32(samples) = &data {
            for (i, &s) in samples.iter().enumerate() {
                if !s.is_finite() || !(0.0..=1.0).contains(&s) {
                    return Err(MediaError::InvalidClip(format!(
                        "unit-interval sample {s} out of [0,1] at index {i}"
                    )));
                }
            }
        }
        Ok(VideoClip {
            frames,
            channels,
            height,
            width,
            data,
        })
    }

    /// All-zero f32 clip of the given shape.
    pub fn zeros(frames: usize, channels: usize, height: usize, width: usize) -> Self {
        VideoClip::new(
            frames,
            channels,
            height,
            width,
            ClipData::F32(vec![0.0; frames * channels * height * width]),
        )
        .expect("zero clip is always valid")
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &ClipData {
        &self.data
    }

    pub fn encoding(&self) -> SampleEncoding {
        self.data.encoding()
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.frames, self.channels, self.height, self.width)
    }

    pub fn same_spatial_extent(&self, other: &VideoClip) -> bool {
        self.frames == other.frames && self.height == other.height && self.width == other.width
    }

    #[inline]
    pub fn index(&self, frame: usize, channel: usize, y: usize, x: usize) -> usize {
        ((frame * self.channels + channel) * self.height + y) * self.width + x
    }

    /// Sample value on the unit interval regardless of storage encoding.
    #[inline]
    pub fn value(&self, frame: usize, channel: usize, y: usize, x: usize) -> f32 {
        let i = self.index(frame, channel, y, x);
        match &self.data {
            ClipData::U8(v) => v[i] as f32 / 255.0,
            ClipData::F32(v) => v[i],
        }
    }

    /// Unit-interval samples, converting from u8 when needed.
    pub fn to_unit_samples(&self) -> Vec<f32> {
        match &self.data {
            ClipData::U8(v) => v.iter().map(|&b| b as f32 / 255.0).collect(),
            ClipData::F32(v) => v.clone(),
        }
    }

    /// Re-encode as a unit-interval f32 clip.
    pub fn to_f32(&self) -> VideoClip {
        VideoClip {
            frames: self.frames,
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: ClipData::F32(self.to_unit_samples()),
        }
    }

    /// Quantize to 8-bit samples (round half up on the 0..255 scale).
    pub fn to_u8(&self) -> VideoClip {
        let data = match &self.data {
            ClipData::U8(v) => ClipData::U8(v.clone()),
            ClipData::F32(v) => ClipData::U8(
                v.iter()
                    .map(|&s| (s * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8)
                    .collect(),
            ),
        };
        VideoClip {
            frames: self.frames,
            channels: self.channels,
            height: self.height,
            width: self.width,
            data,
        }
    }

    /// Borrow one frame's samples as unit-interval values, channel-major.
    pub fn frame_unit_samples(&self, frame: usize) -> Vec<f32> {
        let per_frame = self.channels * self.height * self.width;
        let start = frame * per_frame;
        match &self.data {
            ClipData::U8(v) => v[start..start + per_frame]
                .iter()
                .map(|&b| b as f32 / 255.0)
                .collect(),
            ClipData::F32(v) => v[start..start + per_frame].to_vec(),
        }
    }
}

/// Binary spatiotemporal mask: a single-channel clip whose unit-interval
/// samples are exactly 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskVideo(VideoClip);

impl MaskVideo {
    pub fn new(clip: VideoClip) -> Result<Self> {
        if clip.channels() != 1 {
            return Err(MediaError::InvalidClip(format!(
                "mask must have 1 channel, got {}",
                clip.channels()
            )));
        }
        match clip.data() {
            ClipData::U8(v) => {
                for (i, &b) in v.iter().enumerate() {
                    if b != 0 && b != 255 {
                        return Err(MediaError::NotBinary {
                            index: i,
                            value: b as f64 / 255.0,
                        });
                    }
                }
            }
            ClipData::F32(v) => {
                for (i, &s) in v.iter().enumerate() {
                    if s != 0.0 && s != 1.0 {
                        return Err(MediaError::NotBinary {
                            index: i,
                            value: s as f64,
                        });
                    }
                }
            }
        }
        Ok(MaskVideo(clip))
    }

    /// Build from per-sample flags, stored as f32 0/1.
    pub fn from_flags(frames: usize, height: usize, width: usize, flags: &[bool]) -> Result<Self> {
        let data: Vec<f32> = flags.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        MaskVideo::new(VideoClip::new(frames, 1, height, width, ClipData::F32(data))?)
    }

    pub fn clip(&self) -> &VideoClip {
        &self.0
    }

    pub fn into_clip(self) -> VideoClip {
        self.0
    }

    #[inline]
    pub fn is_set(&self, frame: usize, y: usize, x: usize) -> bool {
        self.0.value(frame, 0, y, x) != 0.0
    }
}

/// Single-frame clip used for stills and reference images.
#[derive(Debug, Clone, PartialEq)]
pub struct Image(VideoClip);

impl Image {
    pub fn new(clip: VideoClip) -> Result<Self> {
        if clip.frames() != 1 {
            return Err(MediaError::InvalidClip(format!(
                "image must have exactly 1 frame, got {}",
                clip.frames()
            )));
        }
        Ok(Image(clip))
    }

    pub fn clip(&self) -> &VideoClip {
        &self.0
    }

    pub fn into_clip(self) -> VideoClip {
        self.0
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn channels(&self) -> usize {
        self.0.channels()
    }

    #[inline]
    pub fn value(&self, channel: usize, y: usize, x: usize) -> f32 {
        self.0.value(0, channel, y, x)
    }
}
