//! Trainer-facing file formats.
//!
//! `jsonl-pairs`: one `{input, supervision, provenance, source_id,
//! sample_index}` object per line (plus `tags` when non-empty).
//!
//! `tsv-pairs`: `input<TAB>supervision<TAB>provenance<TAB>source_id<TAB>sample_index<TAB>tags`
//! with no header. Backslash, tab, newline and carriage return inside
//! fields are written as `\\`, `\t`, `\n` and `\r`.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{DatasetError, Provenance, TrainingExample};
use crate::io::write_atomic;
use crate::parser::QualityFlag;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    JsonlPairs,
    TsvPairs { escape: bool },
}

impl FromStr for ExportFormat {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl-pairs" | "jsonl" => Ok(ExportFormat::JsonlPairs),
            "tsv-pairs" | "tsv" => Ok(ExportFormat::TsvPairs { escape: true }),
            other => Err(DatasetError::Malformed {
                line: 0,
                message: format!("unknown export format `{other}`"),
            }),
        }
    }
}

fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_field(s: &str, line: usize) -> Result<String, DatasetError> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(DatasetError::Malformed {
                    line,
                    message: format!(
                        "bad escape sequence \\{}",
                        other.map(String::from).unwrap_or_default()
                    ),
                })
            }
        }
    }
    Ok(out)
}

fn provenance_name(p: Provenance) -> &'static str {
    match p {
        Provenance::TargetBlind => "TargetBlind",
        Provenance::TargetAware => "TargetAware",
    }
}

fn raw_field(s: &str, line: usize) -> Result<String, DatasetError> {
    if s.contains(['\t', '\n', '\r']) {
        return Err(DatasetError::UnescapableField { line });
    }
    Ok(s.to_owned())
}

/// Encodes examples in `format`.
pub fn encode(examples: &[TrainingExample], format: ExportFormat) -> Result<String, DatasetError> {
    let mut out = String::new();
    match format {
        ExportFormat::JsonlPairs => {
            for e in examples {
                out.push_str(
                    &serde_json::to_string(e)
                        .map_err(|err| DatasetError::IoFailure(err.to_string()))?,
                );
                out.push('\n');
            }
        }
        ExportFormat::TsvPairs { escape } => {
            for (idx, e) in examples.iter().enumerate() {
                let field = |s: &str| {
                    if escape {
                        Ok(escape_field(s))
                    } else {
                        raw_field(s, idx + 1)
                    }
                };
                let tags: Vec<&str> = e.tags.iter().map(|t| t.name()).collect();
                let cols = [
                    field(&e.input)?,
                    field(&e.supervision)?,
                    provenance_name(e.provenance).to_owned(),
                    field(&e.source_id)?,
                    e.sample_index.to_string(),
                    tags.join(","),
                ];
                out.push_str(&cols.join("\t"));
                out.push('\n');
            }
        }
    }
    Ok(out)
}

fn parse_flag(name: &str, line: usize) -> Result<QualityFlag, DatasetError> {
    QualityFlag::ALL
        .into_iter()
        .find(|f| f.name() == name)
        .ok_or_else(|| DatasetError::Malformed {
            line,
            message: format!("unknown tag `{name}`"),
        })
}

/// Decodes text produced by [`encode`].
pub fn decode(text: &str, format: ExportFormat) -> Result<Vec<TrainingExample>, DatasetError> {
    match format {
        ExportFormat::JsonlPairs => {
            crate::io::parse_jsonl(text).map_err(|e| DatasetError::Malformed {
                line: e.line,
                message: e.source.to_string(),
            })
        }
        ExportFormat::TsvPairs { escape } => {
            let mut out = Vec::new();
            for (idx, row) in text.split('\n').enumerate() {
                let line = idx + 1;
                if row.is_empty() {
                    continue;
                }
                let cols: Vec<&str> = row.split('\t').collect();
                if cols.len() != 6 {
                    return Err(DatasetError::Malformed {
                        line,
                        message: format!("expected 6 columns, found {}", cols.len()),
                    });
                }
                let field = |s: &str| {
                    if escape {
                        unescape_field(s, line)
                    } else {
                        Ok(s.to_owned())
                    }
                };
                let provenance = match cols[2] {
                    "TargetBlind" => Provenance::TargetBlind,
                    "TargetAware" => Provenance::TargetAware,
                    other => {
                        return Err(DatasetError::Malformed {
                            line,
                            message: format!("unknown provenance `{other}`"),
                        })
                    }
                };
                let sample_index = cols[4].parse().map_err(|_| DatasetError::Malformed {
                    line,
                    message: format!("bad sample index `{}`", cols[4]),
                })?;
                let tags = if cols[5].is_empty() {
                    Vec::new()
                } else {
                    cols[5]
                        .split(',')
                        .map(|n| parse_flag(n, line))
                        .collect::<Result<_, _>>()?
                };
                out.push(TrainingExample {
                    input: field(cols[0])?,
                    supervision: field(cols[1])?,
                    provenance,
                    source_id: field(cols[3])?,
                    sample_index,
                    tags,
                });
            }
            Ok(out)
        }
    }
}

/// Writes examples to `path` atomically.
pub fn export(
    examples: &[TrainingExample],
    path: &Path,
    format: ExportFormat,
) -> Result<(), DatasetError> {
    let body = encode(examples, format)?;
    write_atomic(path, body.as_bytes())?;
    Ok(())
}

pub fn import(path: &Path, format: ExportFormat) -> Result<Vec<TrainingExample>, DatasetError> {
    let text = fs::read_to_string(path)?;
    decode(&text, format)
}

/// Reads an exported file, choosing the format from the extension
/// (`.tsv` or anything else for JSONL).
pub fn read_examples(path: &Path) -> Result<Vec<TrainingExample>, DatasetError> {
    let format = if path.extension().is_some_and(|e| e == "tsv") {
        ExportFormat::TsvPairs { escape: true }
    } else {
        ExportFormat::JsonlPairs
    };
    import(path, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(input: &str, sup: &str) -> TrainingExample {
        TrainingExample {
            input: input.into(),
            supervision: sup.into(),
            provenance: Provenance::TargetAware,
            source_id: "abc".into(),
            sample_index: 2,
            tags: vec![QualityFlag::CopiedSource, QualityFlag::MultipleMarkers],
        }
    }

    #[test]
    fn tab_is_escaped_and_recovered() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.tsv");
        let items = vec![ex("a\nb", "c\td\\n\n[Transferred]: e")];
        export(&items, &path, ExportFormat::TsvPairs { escape: true }).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("c\\td\\\\n\\n[Transferred]: e"));
        assert_eq!(text.lines().count(), 1);
        assert_eq!(
            import(&path, ExportFormat::TsvPairs { escape: true }).unwrap(),
            items
        );
    }

    #[test]
    fn unescaped_tab_is_an_error() {
        let items = vec![ex("a", "has\ttab")];
        assert_eq!(
            encode(&items, ExportFormat::TsvPairs { escape: false }),
            Err(DatasetError::UnescapableField { line: 1 })
        );
    }

    #[test]
    fn empty_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        for (name, fmt) in [
            ("e.jsonl", ExportFormat::JsonlPairs),
            ("e.tsv", ExportFormat::TsvPairs { escape: true }),
        ] {
            let path = dir.path().join(name);
            export(&[], &path, fmt).unwrap();
            assert_eq!(fs::read_to_string(&path).unwrap(), "");
            assert!(import(&path, fmt).unwrap().is_empty());
        }
    }

    #[test]
    fn jsonl_field_names() {
        let text = encode(&[ex("i", "s")], ExportFormat::JsonlPairs).unwrap();
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        for key in [
            "input",
            "supervision",
            "provenance",
            "source_id",
            "sample_index",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
