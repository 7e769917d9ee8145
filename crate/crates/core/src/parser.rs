//! Splits raw completions into rationale and transferred text.
//!
//! Parsing never fails; anything unexpected is reported as a
//! [`QualityFlag`]. Filtering decisions are made later by the dataset
//! builder.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::backend::RawCompletion;
use crate::prompt::{
    StyleDirection, EXPLANATION_MARKER, TRANSFERRED_MARKER, TRANSFERRED_MARKER_ALT,
};

/// Accepted spellings of the transferred-text marker, in match order.
pub const TRANSFERRED_MARKERS: [&str; 2] = [TRANSFERRED_MARKER_ALT, TRANSFERRED_MARKER];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QualityFlag {
    MissingMarker,
    EmptyCot,
    EmptyTransferred,
    CopiedSource,
    MultipleMarkers,
    TruncatedOutput,
}

impl QualityFlag {
    pub const ALL: [QualityFlag; 6] = [
        QualityFlag::MissingMarker,
        QualityFlag::EmptyCot,
        QualityFlag::EmptyTransferred,
        QualityFlag::CopiedSource,
        QualityFlag::MultipleMarkers,
        QualityFlag::TruncatedOutput,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QualityFlag::MissingMarker => "MissingMarker",
            QualityFlag::EmptyCot => "EmptyCot",
            QualityFlag::EmptyTransferred => "EmptyTransferred",
            QualityFlag::CopiedSource => "CopiedSource",
            QualityFlag::MultipleMarkers => "MultipleMarkers",
            QualityFlag::TruncatedOutput => "TruncatedOutput",
        }
    }
}

pub type Flags = BTreeSet<QualityFlag>;

/// Generation setting a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    TargetBlind,
    TargetAware,
}

/// Result of [`parse_tb`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TbParse {
    pub cot: String,
    pub transferred: Option<String>,
    pub flags: Flags,
}

/// If `line` (after leading-whitespace trim) starts with a transferred
/// marker, returns the text after the marker.
fn strip_transferred_marker(line: &str) -> Option<&str> {
    let line = line.trim_start();
    TRANSFERRED_MARKERS
        .iter()
        .find_map(|m| line.strip_prefix(m))
}

fn is_marker_line(line: &str) -> bool {
    strip_transferred_marker(line).is_some()
}

/// Number of lines that open with an accepted transferred marker.
pub fn count_marker_lines(raw: &str) -> usize {
    raw.lines().filter(|l| is_marker_line(l)).count()
}

/// Splits a target-blind completion at its first marker line.
///
/// The transferred text runs from the marker to the end of the completion,
/// or to the next marker line if the model kept going.
pub fn parse_tb(raw: &str) -> TbParse {
    let lines: Vec<&str> = raw.lines().collect();
    let mut flags = Flags::new();

    let Some(split) = lines.iter().position(|l| is_marker_line(l)) else {
        let cot = raw.trim().to_owned();
        flags.insert(QualityFlag::MissingMarker);
        if cot.is_empty() {
            flags.insert(QualityFlag::EmptyCot);
        }
        return TbParse {
            cot,
            transferred: None,
            flags,
        };
    };

    let cot = lines[..split].join("\n").trim().to_owned();
    let first = strip_transferred_marker(lines[split]).unwrap_or_default();
    let end = lines[split + 1..]
        .iter()
        .position(|l| is_marker_line(l))
        .map_or(lines.len(), |p| split + 1 + p);
    let mut transferred = first.to_owned();
    for line in &lines[split + 1..end] {
        transferred.push('\n');
        transferred.push_str(line);
    }
    let transferred = transferred.trim().to_owned();

    if cot.is_empty() {
        flags.insert(QualityFlag::EmptyCot);
    }
    TbParse {
        cot,
        transferred: Some(transferred),
        flags,
    }
}

/// Strips the leading explanation marker from a target-aware completion.
pub fn parse_ta(raw: &str) -> (String, Flags) {
    let mut flags = Flags::new();
    let trimmed = raw.trim_start();
    let cot = match trimmed.strip_prefix(EXPLANATION_MARKER) {
        Some(rest) => rest.trim().to_owned(),
        None => {
            flags.insert(QualityFlag::MissingMarker);
            raw.trim().to_owned()
        }
    };
    if cot.is_empty() {
        flags.insert(QualityFlag::EmptyCot);
    }
    (cot, flags)
}

/// One parsed generation with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub source_id: String,
    pub source: String,
    pub style: StyleDirection,
    pub mode: GenerationMode,
    pub cot: String,
    pub transferred: Option<String>,
    pub raw: RawCompletion,
    pub flags: Flags,
    pub sample_index: u32,
}

impl GenerationRecord {
    /// Parses `raw` according to `mode` and runs [`assess`].
    pub fn from_completion(
        source_id: impl Into<String>,
        source: impl Into<String>,
        style: StyleDirection,
        mode: GenerationMode,
        raw: RawCompletion,
        sample_index: u32,
    ) -> Self {
        let (cot, transferred, flags) = match mode {
            GenerationMode::TargetBlind => {
                let p = parse_tb(&raw.text);
                (p.cot, p.transferred, p.flags)
            }
            GenerationMode::TargetAware => {
                let (cot, flags) = parse_ta(&raw.text);
                (cot, None, flags)
            }
        };
        let mut record = GenerationRecord {
            source_id: source_id.into(),
            source: source.into(),
            style,
            mode,
            cot,
            transferred,
            raw,
            flags,
            sample_index,
        };
        let extra = assess(&record);
        record.flags.extend(extra);
        record
    }

    pub fn to_line(&self) -> RecordLine {
        RecordLine {
            source_id: self.source_id.clone(),
            source: self.source.clone(),
            source_style: self.style.source_style.clone(),
            target_style: self.style.target_style.clone(),
            mode: self.mode,
            cot: self.cot.clone(),
            transferred: self.transferred.clone(),
            flags: self.flags.iter().copied().collect(),
            sample_index: self.sample_index,
            request_digest: self.raw.request_digest.clone(),
        }
    }
}

/// JSONL form of a [`GenerationRecord`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordLine {
    pub source: String,
    pub target_style: String,
    pub cot: String,
    pub transferred: Option<String>,
    pub flags: Vec<QualityFlag>,
    pub sample_index: u32,
    pub request_digest: String,
    pub source_id: String,
    #[serde(default)]
    pub source_style: String,
    pub mode: GenerationMode,
}

fn normalize_for_copy(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Post-parse checks that need the whole record.
pub fn assess(record: &GenerationRecord) -> Flags {
    let mut flags = Flags::new();
    if record.raw.truncated {
        flags.insert(QualityFlag::TruncatedOutput);
    }
    if record.mode == GenerationMode::TargetAware {
        return flags;
    }
    if count_marker_lines(&record.raw.text) > 1 {
        flags.insert(QualityFlag::MultipleMarkers);
    }
    if let Some(t) = &record.transferred {
        if t.trim().is_empty() {
            flags.insert(QualityFlag::EmptyTransferred);
        } else if normalize_for_copy(t) == normalize_for_copy(&record.source) {
            flags.insert(QualityFlag::CopiedSource);
        }
    }
    flags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{tb_completion_body, StylePreset};

    fn raw(text: &str) -> RawCompletion {
        RawCompletion {
            text: text.into(),
            backend_id: "test".into(),
            cached: false,
            request_digest: "d".into(),
            truncated: false,
        }
    }

    fn record(source: &str, completion: &str) -> GenerationRecord {
        GenerationRecord::from_completion(
            "id",
            source,
            StylePreset::Formality.direction(),
            GenerationMode::TargetBlind,
            raw(completion),
            0,
        )
    }

    #[test]
    fn case_study_completion() {
        let text = "The original text is informal.\nThe use of all caps and the absence of punctuation are informal. The use of \"DOC\" is a misspelling of \"doctor\".\n[[Transferred]]: I just want to know if you have been to the doctor yet.";
        let p = parse_tb(text);
        assert_eq!(
            p.cot,
            "The original text is informal.\nThe use of all caps and the absence of punctuation are informal. The use of \"DOC\" is a misspelling of \"doctor\"."
        );
        assert_eq!(
            p.transferred.as_deref(),
            Some("I just want to know if you have been to the doctor yet.")
        );
        assert!(p.flags.is_empty());
    }

    #[test]
    fn marker_first() {
        let p = parse_tb("[Transferred]: Hello.");
        assert_eq!(p.cot, "");
        assert_eq!(p.transferred.as_deref(), Some("Hello."));
        assert_eq!(p.flags, Flags::from([QualityFlag::EmptyCot]));
    }

    #[test]
    fn missing_marker_keeps_whole_text() {
        let p = parse_tb("  just reasoning\nno answer ");
        assert_eq!(p.cot, "just reasoning\nno answer");
        assert_eq!(p.transferred, None);
        assert_eq!(p.flags, Flags::from([QualityFlag::MissingMarker]));
        assert!(parse_tb("").flags.contains(&QualityFlag::EmptyCot));
    }

    #[test]
    fn marker_matching_is_exact() {
        assert!(parse_tb("x\n[transferred]: y")
            .flags
            .contains(&QualityFlag::MissingMarker));
        assert!(parse_tb("x\nTransferred: y")
            .flags
            .contains(&QualityFlag::MissingMarker));
        let p = parse_tb("x\n   [Transferred]:y\nmore");
        assert_eq!(p.transferred.as_deref(), Some("y\nmore"));
    }

    #[test]
    fn multiple_markers_split_at_first() {
        let text = "reason\n[Transferred]: First.\nSource: hallucinated\n[Transferred]: Second.";
        let rec = record("src", text);
        assert_eq!(
            rec.transferred.as_deref(),
            Some("First.\nSource: hallucinated")
        );
        assert!(rec.flags.contains(&QualityFlag::MultipleMarkers));
        // independent scan
        let n = text
            .split('\n')
            .filter(|l| {
                l.trim_start().starts_with("[Transferred]:")
                    || l.trim_start().starts_with("[[Transferred]]:")
            })
            .count();
        assert_eq!(n, 2);
        assert_eq!(count_marker_lines(text), n);
    }

    #[test]
    fn ta_parsing() {
        assert_eq!(
            parse_ta("[EXPLANATION]: The source uses slang; the target replaces it."),
            (
                "The source uses slang; the target replaces it.".to_string(),
                Flags::new()
            )
        );
        assert_eq!(
            parse_ta("[EXPLANATION]:"),
            (String::new(), Flags::from([QualityFlag::EmptyCot]))
        );
        assert_eq!(
            parse_ta("plain text"),
            (
                "plain text".to_string(),
                Flags::from([QualityFlag::MissingMarker])
            )
        );
    }

    #[test]
    fn assess_flags() {
        let rec = record("hello", "greeting\n[Transferred]: Hello");
        assert_eq!(rec.flags, Flags::from([QualityFlag::CopiedSource]));
        let rec = record("hello", "greeting\n[Transferred]:    ");
        assert_eq!(rec.flags, Flags::from([QualityFlag::EmptyTransferred]));
        let mut r = raw("why\n[Transferred]: x");
        r.truncated = true;
        let rec = GenerationRecord::from_completion(
            "id",
            "s",
            StylePreset::Formality.direction(),
            GenerationMode::TargetBlind,
            r,
            0,
        );
        assert_eq!(rec.flags, Flags::from([QualityFlag::TruncatedOutput]));
    }

    #[test]
    fn roundtrip_simple() {
        let body = tb_completion_body("Because.", "Fine.", TRANSFERRED_MARKER);
        let p = parse_tb(&body);
        assert_eq!(
            (p.cot.as_str(), p.transferred.as_deref()),
            ("Because.", Some("Fine."))
        );
        assert!(p.flags.is_empty());
    }
}
