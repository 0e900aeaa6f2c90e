//! JSON-lines manifests of edit triples.
//!
//! One JSON object per line with fixed field names
//! (`id`, `src`, `tgt`, `mask`, `ref`, `instruction`, `edit_type`, `origin`);
//! streamable and diff-friendly. Paths are stored relative to the manifest's
//! directory.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{read_container_header, MediaError, Result};

/// Coarse tag describing what kind of edit a triple supervises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditType {
    Recolor,
    Remove,
    ShapeSwap,
    GrayscaleStyle,
    Control,
    Transition,
    Lifted,
    Continuation,
    Other,
}

impl fmt::Display for EditType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EditType::Recolor => "recolor",
            EditType::Remove => "remove",
            EditType::ShapeSwap => "shape_swap",
            EditType::GrayscaleStyle => "grayscale_style",
            EditType::Control => "control",
            EditType::Transition => "transition",
            EditType::Lifted => "lifted",
            EditType::Continuation => "continuation",
            EditType::Other => "other",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for EditType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "recolor" => Ok(EditType::Recolor),
            "remove" => Ok(EditType::Remove),
            "shape_swap" => Ok(EditType::ShapeSwap),
            "grayscale_style" => Ok(EditType::GrayscaleStyle),
            "control" => Ok(EditType::Control),
            "transition" => Ok(EditType::Transition),
            "lifted" => Ok(EditType::Lifted),
            "continuation" => Ok(EditType::Continuation),
            "other" => Ok(EditType::Other),
            other => Err(format!("unknown edit type {other:?}")),
        }
    }
}

/// The canonical training record: source/target clip paths, instruction,
/// and optional mask video and reference image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditTriple {
    pub id: String,
    pub src: String,
    pub tgt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
    #[serde(rename = "ref", default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub instruction: String,
    pub edit_type: EditType,
    pub origin: String,
}

pub type Manifest = Vec<EditTriple>;

/// One rule violation found during validation; names the field and the rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

impl Violation {
    fn new(field: &str, rule: impl Into<String>) -> Self {
        Violation {
            field: field.to_string(),
            rule: rule.into(),
        }
    }
}

pub fn write_manifest(manifest: &[EditTriple], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| MediaError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for triple in manifest {
        let line = serde_json::to_string(triple).expect("triple serialization cannot fail");
        writeln!(w, "{line}").map_err(|e| MediaError::io(path, e))?;
    }
    w.flush().map_err(|e| MediaError::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| MediaError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut manifest = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| MediaError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let triple: EditTriple = serde_json::from_str(&line).map_err(|e| {
            MediaError::ManifestParse {
                line: lineno + 1,
                source: e,
            }
        })?;
        manifest.push(triple);
    }
    Ok(manifest)
}

/// Check a single triple against its invariants. Violations are data, not
/// failures; an unreadable referenced file is itself reported as a violation.
pub fn validate_triple(triple: &EditTriple, base_dir: &Path) -> Vec<Violation> {
    let mut violations = Vec::new();

    if triple.instruction.trim().is_empty() {
        violations.push(Violation::new("instruction", "instruction empty"));
    }
    if triple.id.is_empty() {
        violations.push(Violation::new("id", "id empty"));
    }

    let header_of = |field: &str, rel: &str, violations: &mut Vec<Violation>| {
        match read_container_header(base_dir.join(rel)) {
            Ok(h) => Some(h),
            Err(e) => {
                violations.push(Violation::new(field, format!("unresolvable: {e}")));
                None
            }
        }
    };

    let src = header_of("src", &triple.src, &mut violations);
    let tgt = header_of("tgt", &triple.tgt, &mut violations);
    if let (Some(src), Some(tgt)) = (src, tgt) {
        if src.frames != tgt.frames {
            violations.push(Violation::new("tgt", "target frame count mismatch"));
        }
        if src.height != tgt.height || src.width != tgt.width {
            violations.push(Violation::new("tgt", "target frame size mismatch"));
        }
    }
    if let Some(mask_rel) = &triple.mask {
        if let Some(mask) = header_of("mask", mask_rel, &mut violations) {
            if let Some(src) = src {
                if mask.frames != src.frames {
                    violations.push(Violation::new("mask", "mask frame count mismatch"));
                }
                if mask.height != src.height || mask.width != src.width {
                    violations.push(Violation::new("mask", "mask frame size mismatch"));
                }
            }
            if mask.channels != 1 {
                violations.push(Violation::new("mask", "mask must have 1 channel"));
            }
        }
    }
    if let Some(ref_rel) = &triple.reference {
        if let Some(r) = header_of("ref", ref_rel, &mut violations) {
            if r.frames != 1 {
                violations.push(Violation::new("ref", "reference must be a single frame"));
            }
        }
    }
    violations
}

/// Validate every triple plus the manifest-level uniqueness rule.
pub fn validate_manifest(manifest: &[EditTriple], base_dir: &Path) -> Vec<(String, Violation)> {
    let mut all = Vec::new();
    let mut seen = HashSet::new();
    for triple in manifest {
        if !seen.insert(triple.id.clone()) {
            all.push((
                triple.id.clone(),
                Violation::new("id", "duplicate id in manifest"),
            ));
        }
        for v in validate_triple(triple, base_dir) {
            all.push((triple.id.clone(), v));
        }
    }
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{write_container, VideoClip};
    use tempfile::tempdir;

    fn triple(id: &str) -> EditTriple {
        EditTriple {
            id: id.to_string(),
            src: format!("{id}_src.rvid"),
            tgt: format!("{id}_tgt.rvid"),
            mask: None,
            reference: None,
            instruction: "make the square red".to_string(),
            edit_type: EditType::Recolor,
            origin: "test".to_string(),
        }
    }

    #[test]
    fn manifest_roundtrip_preserves_order() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let manifest = vec![triple("b"), triple("a"), triple("c")];
        write_manifest(&manifest, &path).unwrap();
        assert_eq!(read_manifest(&path).unwrap(), manifest);
    }

    #[test]
    fn ref_field_serializes_with_short_name() {
        let mut t = triple("x");
        t.reference = Some("r.rvid".to_string());
        let line = serde_json::to_string(&t).unwrap();
        assert!(line.contains("\"ref\":\"r.rvid\""));
        assert!(!line.contains("reference"));
    }

    #[test]
    fn well_formed_triple_validates_clean() {
        let dir = tempdir().unwrap();
        let clip = VideoClip::zeros(4, 3, 2, 2);
        write_container(&clip, dir.path().join("t_src.rvid")).unwrap();
        write_container(&clip, dir.path().join("t_tgt.rvid")).unwrap();
        assert!(validate_triple(&triple("t"), dir.path()).is_empty());
    }

    #[test]
    fn frame_count_mismatch_reported() {
        let dir = tempdir().unwrap();
        write_container(&VideoClip::zeros(16, 3, 2, 2), dir.path().join("t_src.rvid")).unwrap();
        write_container(&VideoClip::zeros(16, 3, 2, 2), dir.path().join("t_tgt.rvid")).unwrap();
        write_container(&VideoClip::zeros(8, 1, 2, 2), dir.path().join("m.rvid")).unwrap();
        let mut t = triple("t");
        t.mask = Some("m.rvid".to_string());
        let violations = validate_triple(&t, dir.path());
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].rule, "mask frame count mismatch");
    }

    #[test]
    fn empty_instruction_reported() {
        let dir = tempdir().unwrap();
        let clip = VideoClip::zeros(2, 3, 2, 2);
        write_container(&clip, dir.path().join("t_src.rvid")).unwrap();
        write_container(&clip, dir.path().join("t_tgt.rvid")).unwrap();
        let mut t = triple("t");
        t.instruction = "  ".to_string();
        let violations = validate_triple(&t, dir.path());
        assert!(violations.iter().any(|v| v.rule == "instruction empty"));
    }

    #[test]
    fn duplicate_ids_reported_at_manifest_level() {
        let dir = tempdir().unwrap();
        let clip = VideoClip::zeros(2, 3, 2, 2);
        write_container(&clip, dir.path().join("t_src.rvid")).unwrap();
        write_container(&clip, dir.path().join("t_tgt.rvid")).unwrap();
        let manifest = vec![triple("t"), triple("t")];
        let all = validate_manifest(&manifest, dir.path());
        assert!(all.iter().any(|(_, v)| v.rule == "duplicate id in manifest"));
    }
}
