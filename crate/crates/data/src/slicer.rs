//! Slicing densely captioned videos into (source, target, instruction)
//! triples: temporal filters, a mean-abs-difference scene-cut detector,
//! and a rule-based imperative rewriter with an external-command hook.

use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use v2vforge_media::{ClipData, VideoClip};

use crate::{DataError, Result};

/// A caption localized to a temporal window of one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionSegment {
    pub video_id: String,
    pub caption: String,
    /// Window start, seconds.
    pub t_start: f64,
    /// Window end, seconds.
    pub t_end: f64,
    pub fps: f64,
    pub total_frames: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceParams {
    /// Clip frame count N for both source and target.
    pub clip_frames: usize,
    /// Downsample target rate, frames per second.
    pub fps_down: f64,
    /// Minimum downsampled total frames of the whole video.
    pub min_total_frames: usize,
    /// Segment duration must exceed this, seconds.
    pub min_duration_s: f64,
    /// Segment duration cap, seconds.
    pub max_duration_s: f64,
    /// Mean-abs frame-difference fraction flagged as a scene cut.
    pub cut_threshold: f64,
}

impl SliceParams {
    pub fn with_clip_frames(clip_frames: usize, fps_down: f64) -> Self {
        SliceParams {
            clip_frames,
            fps_down,
            min_total_frames: 2 * clip_frames,
            min_duration_s: 2.0,
            max_duration_s: 2.0 * clip_frames as f64 / fps_down,
            cut_threshold: 0.3,
        }
    }
}

impl Default for SliceParams {
    fn default() -> Self {
        SliceParams::with_clip_frames(81, 15.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    InsufficientTotalFrames,
    InsufficientPreamble,
    TooShort,
    TooLong,
    SceneCut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Accept,
    Reject(RejectReason),
}

/// Number of frames the video yields after downsampling to `fps_down`.
pub fn downsampled_total(total_frames: usize, fps: f64, fps_down: f64) -> usize {
    ((total_frames as f64) * fps_down / fps).floor() as usize
}

/// Original-frame index for each downsampled frame.
pub fn downsample_indices(total_frames: usize, fps: f64, fps_down: f64) -> Vec<usize> {
    let n = downsampled_total(total_frames, fps, fps_down);
    (0..n)
        .map(|j| (((j as f64) * fps / fps_down + 0.5).floor() as usize).min(total_frames - 1))
        .collect()
}

pub fn downsample_clip(clip: &VideoClip, fps: f64, fps_down: f64) -> VideoClip {
    let indices = downsample_indices(clip.frames(), fps, fps_down);
    let per_frame = clip.channels() * clip.height() * clip.width();
    let mut data = Vec::with_capacity(indices.len() * per_frame);
    for &idx in &indices {
        data.extend_from_slice(&clip.to_unit_samples()[idx * per_frame..(idx + 1) * per_frame]);
    }
    VideoClip::new(
        indices.len(),
        clip.channels(),
        clip.height(),
        clip.width(),
        ClipData::F32(data),
    )
    .expect("downsample preserves validity")
}

/// Onset frame index at the downsampled rate (round half up).
pub fn onset_frame(t_start: f64, fps_down: f64) -> usize {
    (t_start * fps_down + 0.5).floor() as usize
}

/// Apply the acceptance rules in order:
/// (a) downsampled total frames, (b) sufficient preamble before the onset,
/// (c) duration window, (d) no scene cut inside the segment.
/// `cuts` are downsampled frame indices, sorted.
pub fn filter_segment(seg: &CaptionSegment, cuts: &[usize], p: &SliceParams) -> FilterDecision {
    debug_assert!(cuts.windows(2).all(|w| w[0] <= w[1]), "cuts must be sorted");

    if downsampled_total(seg.total_frames, seg.fps, p.fps_down) < p.min_total_frames {
        return FilterDecision::Reject(RejectReason::InsufficientTotalFrames);
    }
    if seg.t_start < p.clip_frames as f64 / p.fps_down {
        return FilterDecision::Reject(RejectReason::InsufficientPreamble);
    }
    let duration = seg.t_end - seg.t_start;
    if duration <= p.min_duration_s {
        return FilterDecision::Reject(RejectReason::TooShort);
    }
    if duration > p.max_duration_s {
        return FilterDecision::Reject(RejectReason::TooLong);
    }
    let in_window = |&k: &usize| {
        let t = k as f64 / p.fps_down;
        t >= seg.t_start && t <= seg.t_end
    };
    if cuts.iter().any(in_window) {
        return FilterDecision::Reject(RejectReason::SceneCut);
    }
    FilterDecision::Accept
}

/// Frame k is a cut iff the mean absolute difference to frame k-1
/// (unit-interval scale, over all channels and pixels) exceeds `threshold`.
pub fn detect_scene_cuts(clip: &VideoClip, threshold: f64) -> Vec<usize> {
    assert!(
        threshold > 0.0 && threshold <= 1.0,
        "cut threshold must be in (0,1], got {threshold}"
    );
    let per_frame = clip.channels() * clip.height() * clip.width();
    let samples = clip.to_unit_samples();
    let mut cuts = Vec::new();
    for k in 1..clip.frames() {
        let prev = &samples[(k - 1) * per_frame..k * per_frame];
        let cur = &samples[k * per_frame..(k + 1) * per_frame];
        let mean: f64 = prev
            .iter()
            .zip(cur)
            .map(|(&a, &b)| (a as f64 - b as f64).abs())
            .sum::<f64>()
            / per_frame as f64;
        if mean > threshold {
            cuts.push(k);
        }
    }
    cuts
}

/// Slice the (raw-rate) video into contiguous, non-overlapping source and
/// target clips of N downsampled frames around the caption onset.
pub fn slice_triple(
    clip: &VideoClip,
    seg: &CaptionSegment,
    p: &SliceParams,
) -> Result<(VideoClip, VideoClip)> {
    let ds = downsample_clip(clip, seg.fps, p.fps_down);
    let k_i = onset_frame(seg.t_start, p.fps_down);
    let n = p.clip_frames;
    if k_i < n {
        return Err(DataError::SliceOutOfRange(format!(
            "onset {k_i} leaves fewer than {n} source frames"
        )));
    }
    if k_i + n > ds.frames() {
        return Err(DataError::SliceOutOfRange(format!(
            "target [{k_i}, {}) exceeds {} downsampled frames",
            k_i + n,
            ds.frames()
        )));
    }
    Ok((
        slice_frames(&ds, k_i - n, n),
        slice_frames(&ds, k_i, n),
    ))
}

fn slice_frames(clip: &VideoClip, start: usize, len: usize) -> VideoClip {
    let per_frame = clip.channels() * clip.height() * clip.width();
    let samples = clip.to_unit_samples();
    VideoClip::new(
        len,
        clip.channels(),
        clip.height(),
        clip.width(),
        ClipData::F32(samples[start * per_frame..(start + len) * per_frame].to_vec()),
    )
    .expect("frame slice preserves validity")
}

/// Subject pronouns mapped to the object form used after "make".
const PRONOUNS: [(&str, &str); 7] = [
    ("he", "him"),
    ("she", "her"),
    ("they", "them"),
    ("we", "us"),
    ("i", "me"),
    ("it", "it"),
    ("you", "you"),
];

/// Bundled third-person-singular -> base-form verb lexicon.
const VERBS: [(&str, &str); 120] = [
    ("sits", "sit"), ("runs", "run"), ("walks", "walk"), ("goes", "go"),
    ("does", "do"), ("sees", "see"), ("jumps", "jump"), ("stands", "stand"),
    ("falls", "fall"), ("eats", "eat"), ("drinks", "drink"), ("sleeps", "sleep"),
    ("opens", "open"), ("closes", "close"), ("turns", "turn"), ("looks", "look"),
    ("smiles", "smile"), ("laughs", "laugh"), ("cries", "cry"), ("dances", "dance"),
    ("sings", "sing"), ("picks", "pick"), ("puts", "put"), ("takes", "take"),
    ("gives", "give"), ("throws", "throw"), ("catches", "catch"), ("kicks", "kick"),
    ("holds", "hold"), ("waves", "wave"), ("points", "point"), ("climbs", "climb"),
    ("swims", "swim"), ("flies", "fly"), ("drives", "drive"), ("rides", "ride"),
    ("reads", "read"), ("writes", "write"), ("draws", "draw"), ("plays", "play"),
    ("starts", "start"), ("stops", "stop"), ("moves", "move"), ("enters", "enter"),
    ("leaves", "leave"), ("arrives", "arrive"), ("returns", "return"), ("grabs", "grab"),
    ("drops", "drop"), ("lifts", "lift"), ("pushes", "push"), ("pulls", "pull"),
    ("carries", "carry"), ("wears", "wear"), ("removes", "remove"), ("washes", "wash"),
    ("cleans", "clean"), ("cooks", "cook"), ("cuts", "cut"), ("builds", "build"),
    ("breaks", "break"), ("fixes", "fix"), ("paints", "paint"), ("watches", "watch"),
    ("listens", "listen"), ("speaks", "speak"), ("talks", "talk"), ("shouts", "shout"),
    ("whispers", "whisper"), ("nods", "nod"), ("shakes", "shake"), ("bends", "bend"),
    ("stretches", "stretch"), ("spins", "spin"), ("rolls", "roll"), ("slides", "slide"),
    ("crawls", "crawl"), ("hops", "hop"), ("skips", "skip"), ("marches", "march"),
    ("wanders", "wander"), ("hurries", "hurry"), ("waits", "wait"), ("rests", "rest"),
    ("wakes", "wake"), ("yawns", "yawn"), ("blinks", "blink"), ("stares", "stare"),
    ("glances", "glance"), ("frowns", "frown"), ("grins", "grin"), ("chews", "chew"),
    ("licks", "lick"), ("bites", "bite"), ("sniffs", "sniff"), ("hugs", "hug"),
    ("kisses", "kiss"), ("pats", "pat"), ("scratches", "scratch"), ("rubs", "rub"),
    ("taps", "tap"), ("knocks", "knock"), ("rings", "ring"), ("presses", "press"),
    ("types", "type"), ("clicks", "click"), ("folds", "fold"), ("wraps", "wrap"),
    ("ties", "tie"), ("pours", "pour"), ("stirs", "stir"), ("mixes", "mix"),
    ("shoots", "shoot"), ("scores", "score"), ("wins", "win"), ("begins", "begin"),
    ("finishes", "finish"), ("pauses", "pause"), ("tries", "try"), ("claps", "clap"),
];

/// Rule-based caption-to-instruction rewrite: prefix "make", normalize the
/// leading subject pronoun to its object form, de-conjugate the first
/// recognized verb. Returns an empty string when no verb rule applies,
/// which the pipeline treats as a discard.
pub fn imperativize(caption: &str) -> Result<String> {
    if caption.trim().is_empty() {
        return Err(DataError::EmptyCaption);
    }
    let mut tokens: Vec<String> = caption
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return Ok(String::new());
    }
    if let Some(&(_, object)) = PRONOUNS.iter().find(|&&(subj, _)| subj == tokens[0]) {
        tokens[0] = object.to_string();
    }
    let mut rewrote = false;
    for token in tokens.iter_mut() {
        if let Some(&(_, base)) = VERBS.iter().find(|&&(conj, _)| conj == token.as_str()) {
            *token = base.to_string();
            rewrote = true;
            break;
        }
    }
    if !rewrote {
        return Ok(String::new());
    }
    Ok(format!("make {}", tokens.join(" ")))
}

/// Replace the rule-based rewriter with an external command: the caption is
/// written to its stdin and the instruction read from its stdout.
pub fn imperativize_with_hook(caption: &str, command: &str) -> Result<String> {
    if caption.trim().is_empty() {
        return Err(DataError::EmptyCaption);
    }
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| DataError::HookIo(e.to_string()))?;
    child
        .stdin
        .as_mut()
        .expect("stdin piped")
        .write_all(caption.as_bytes())
        .map_err(|e| DataError::HookIo(e.to_string()))?;
    let output = child
        .wait_with_output()
        .map_err(|e| DataError::HookIo(e.to_string()))?;
    if !output.status.success() {
        return Err(DataError::HookFailed {
            status: output.status.code().unwrap_or(-1),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }
    Ok(String::from_utf8_lossy(&output.stdout).trim().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segment(t_start: f64, t_end: f64) -> CaptionSegment {
        CaptionSegment {
            video_id: "v".to_string(),
            caption: "he sits down".to_string(),
            t_start,
            t_end,
            fps: 15.0,
            total_frames: 200,
        }
    }

    fn params() -> SliceParams {
        SliceParams::default()
    }

    #[test]
    fn spec_example_accepts() {
        assert_eq!(
            filter_segment(&segment(6.0, 9.0), &[], &params()),
            FilterDecision::Accept
        );
    }

    #[test]
    fn insufficient_preamble_rejected() {
        // N=81 at 15 fps needs t_start >= 5.4 s.
        assert_eq!(
            filter_segment(&segment(3.0, 6.0), &[], &params()),
            FilterDecision::Reject(RejectReason::InsufficientPreamble)
        );
    }

    #[test]
    fn short_segment_rejected() {
        assert_eq!(
            filter_segment(&segment(6.0, 7.5), &[], &params()),
            FilterDecision::Reject(RejectReason::TooShort)
        );
    }

    #[test]
    fn cut_inside_window_rejected() {
        let cuts = vec![100]; // 100/15 = 6.67 s, inside [6, 9]
        assert_eq!(
            filter_segment(&segment(6.0, 9.0), &cuts, &params()),
            FilterDecision::Reject(RejectReason::SceneCut)
        );
        let outside = vec![200];
        assert_eq!(
            filter_segment(&segment(6.0, 9.0), &outside, &params()),
            FilterDecision::Accept
        );
    }

    fn flat_video(frames: usize, levels: &[f32]) -> VideoClip {
        let mut data = Vec::new();
        for k in 0..frames {
            data.extend(std::iter::repeat(levels[k.min(levels.len() - 1)]).take(4));
        }
        VideoClip::new(frames, 1, 2, 2, ClipData::F32(data)).unwrap()
    }

    #[test]
    fn constant_video_has_no_cuts() {
        let clip = flat_video(6, &[0.5]);
        assert!(detect_scene_cuts(&clip, 0.3).is_empty());
    }

    #[test]
    fn hard_cut_detected_at_right_frame() {
        let clip = flat_video(10, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(detect_scene_cuts(&clip, 0.3), vec![5]);
    }

    #[test]
    fn smooth_fade_not_flagged() {
        let levels: Vec<f32> = (0..30).map(|k| 0.01 * k as f32).collect();
        let clip = flat_video(30, &levels);
        assert!(detect_scene_cuts(&clip, 0.3).is_empty());
    }

    #[test]
    fn slice_boundary_case() {
        // k_i == N: source is exactly the head of the video.
        let p = SliceParams::with_clip_frames(4, 15.0);
        let mut seg = segment(4.0 / 15.0, 2.0);
        seg.total_frames = 10;
        let levels: Vec<f32> = (0..10).map(|k| k as f32 / 16.0).collect();
        let clip = flat_video(10, &levels);
        let (src, tgt) = slice_triple(&clip, &seg, &p).unwrap();
        assert_eq!(src.frames(), 4);
        assert_eq!(tgt.frames(), 4);
        assert_eq!(src.value(0, 0, 0, 0), 0.0);
        assert_eq!(tgt.value(0, 0, 0, 0), 4.0 / 16.0);
        // Contiguity: last source frame + 1 == first target frame.
        assert_eq!(src.value(3, 0, 0, 0), 3.0 / 16.0);
    }

    #[test]
    fn slice_index_arithmetic() {
        // k_i = 8, N = 3: source [5,8), target [8,11).
        let p = SliceParams::with_clip_frames(3, 15.0);
        let mut seg = segment(8.0 / 15.0, 2.0);
        seg.total_frames = 12;
        let levels: Vec<f32> = (0..12).map(|k| k as f32 / 16.0).collect();
        let clip = flat_video(12, &levels);
        let (src, tgt) = slice_triple(&clip, &seg, &p).unwrap();
        assert_eq!(src.value(0, 0, 0, 0), 5.0 / 16.0);
        assert_eq!(tgt.value(0, 0, 0, 0), 8.0 / 16.0);
    }

    #[test]
    fn overrun_is_an_error() {
        let p = SliceParams::with_clip_frames(4, 15.0);
        let mut seg = segment(8.0 / 15.0, 2.0);
        seg.total_frames = 10;
        let clip = flat_video(10, &[0.1]);
        assert!(matches!(
            slice_triple(&clip, &seg, &p),
            Err(DataError::SliceOutOfRange(_))
        ));
    }

    #[test]
    fn paper_example_rewrite() {
        assert_eq!(imperativize("he sits down").unwrap(), "make him sit down");
    }

    #[test]
    fn lexicon_deconjugation() {
        assert_eq!(
            imperativize("the dog runs away").unwrap(),
            "make the dog run away"
        );
    }

    #[test]
    fn empty_caption_is_a_precondition_violation() {
        assert!(matches!(imperativize(""), Err(DataError::EmptyCaption)));
        assert!(matches!(imperativize("   "), Err(DataError::EmptyCaption)));
    }

    #[test]
    fn no_rule_returns_empty_for_discard() {
        assert_eq!(imperativize("blue sky above").unwrap(), "");
    }

    #[test]
    fn hook_replaces_rules() {
        let out = imperativize_with_hook("he sits down", "tr a-z A-Z").unwrap();
        assert_eq!(out, "HE SITS DOWN");
    }

    #[test]
    fn hook_failure_is_reported() {
        match imperativize_with_hook("x", "exit 3") {
            Err(DataError::HookFailed { status, .. }) => assert_eq!(status, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn downsampling_halves_a_30fps_video() {
        assert_eq!(downsampled_total(200, 30.0, 15.0), 100);
        let idx = downsample_indices(10, 30.0, 15.0);
        assert_eq!(idx, vec![0, 2, 4, 6, 8]);
    }
}
