//! Scoring of output files, best-candidate selection, sentence-level
//! ranking and comparison tables.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bleu::{corpus_bleu, sentence_bleu, BleuConfig, BleuError, BleuReport};
use crate::io::{read_lines, sha256_hex, write_atomic};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HarnessError {
    #[error("line count mismatch: hypothesis has {hyp} lines, reference has {reference}")]
    LengthMismatch { hyp: usize, reference: usize },
    #[error("file not found: {0}")]
    FileMissing(String),
    #[error("no candidates to select from")]
    NoCandidates,
    #[error("no reports to tabulate")]
    NoReports,
    #[error("reports use different BLEU configurations: {expected} vs {found}")]
    SignatureMismatch { expected: String, found: String },
    #[error("duplicate run id `{0}`")]
    DuplicateRunId(String),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error(transparent)]
    Bleu(#[from] BleuError),
    #[error("i/o failure: {0}")]
    IoFailure(String),
}

/// Training-set size of a run: a count or the full corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RunSize {
    Count(usize),
    Full,
}

impl Serialize for RunSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            RunSize::Count(n) => s.serialize_u64(*n as u64),
            RunSize::Full => s.serialize_str("full"),
        }
    }
}

impl<'de> Deserialize<'de> for RunSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(RunSize::Count(n)),
            Raw::Text(t) if t == "full" => Ok(RunSize::Full),
            Raw::Text(t) => t.parse().map(RunSize::Count).map_err(|_| {
                serde::de::Error::custom(format!("size must be a number or \"full\", got `{t}`"))
            }),
        }
    }
}

impl std::fmt::Display for RunSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunSize::Count(n) => write!(f, "{n}"),
            RunSize::Full => f.write_str("full"),
        }
    }
}

/// One set of outputs to score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    #[serde(default)]
    pub dataset: String,
    pub method_label: String,
    #[serde(default = "full_size")]
    pub size: RunSize,
    pub hyp_path: PathBuf,
    pub ref_path: PathBuf,
    #[serde(default)]
    pub config: BleuConfig,
}

fn full_size() -> RunSize {
    RunSize::Full
}

impl RunManifest {
    /// Reads a manifest file; relative paths are resolved against its
    /// directory. The file holds one manifest object or an array of them.
    pub fn load_all(path: &Path) -> Result<Vec<RunManifest>, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|_| HarnessError::FileMissing(path.display().to_string()))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| HarnessError::InvalidManifest(e.to_string()))?;
        let mut manifests: Vec<RunManifest> = match value {
            serde_json::Value::Array(_) => serde_json::from_value(value),
            _ => serde_json::from_value(value).map(|m| vec![m]),
        }
        .map_err(|e| HarnessError::InvalidManifest(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut ids = HashSet::new();
        for m in &mut manifests {
            if !ids.insert(m.run_id.clone()) {
                return Err(HarnessError::DuplicateRunId(m.run_id.clone()));
            }
            if m.hyp_path.is_relative() {
                m.hyp_path = base.join(&m.hyp_path);
            }
            if m.ref_path.is_relative() {
                m.ref_path = base.join(&m.ref_path);
            }
        }
        Ok(manifests)
    }

    /// Where [`evaluate_run`] persists its report.
    pub fn report_path(&self) -> PathBuf {
        let mut name = self.hyp_path.file_name().unwrap_or_default().to_os_string();
        name.push(".bleu.json");
        self.hyp_path.with_file_name(name)
    }
}

fn read_aligned(
    hyp: &Path,
    reference: &Path,
) -> Result<(Vec<String>, Vec<String>, String), HarnessError> {
    let read = |p: &Path| -> Result<(Vec<u8>, Vec<String>), HarnessError> {
        let bytes = fs::read(p).map_err(|_| HarnessError::FileMissing(p.display().to_string()))?;
        let lines = read_lines(p).map_err(|e| HarnessError::IoFailure(e.to_string()))?;
        Ok((bytes, lines))
    };
    let (hb, hl) = read(hyp)?;
    let (rb, rl) = read(reference)?;
    if hl.len() != rl.len() {
        return Err(HarnessError::LengthMismatch {
            hyp: hl.len(),
            reference: rl.len(),
        });
    }
    let digest = sha256_hex([sha256_hex(&hb), sha256_hex(&rb)].concat());
    Ok((hl, rl, digest))
}

/// Report persisted next to a hypothesis file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistedReport {
    pub run_id: String,
    pub method_label: String,
    pub size: RunSize,
    /// Digest of the hypothesis and reference bytes; a mismatch means the
    /// report is stale.
    pub input_digest: String,
    pub report: BleuReport,
}

/// Scores a run without writing anything.
pub fn score_run(manifest: &RunManifest) -> Result<(BleuReport, String), HarnessError> {
    let (hyps, refs, digest) = read_aligned(&manifest.hyp_path, &manifest.ref_path)?;
    if hyps.is_empty() {
        return Err(HarnessError::Bleu(BleuError::EmptyCorpus));
    }
    Ok((corpus_bleu(&hyps, &refs, &manifest.config)?, digest))
}

/// Scores a run and persists the report beside the hypothesis file.
pub fn evaluate_run(manifest: &RunManifest) -> Result<BleuReport, HarnessError> {
    let (report, digest) = score_run(manifest)?;
    let persisted = PersistedReport {
        run_id: manifest.run_id.clone(),
        method_label: manifest.method_label.clone(),
        size: manifest.size,
        input_digest: digest,
        report: report.clone(),
    };
    let body = serde_json::to_vec_pretty(&persisted)
        .map_err(|e| HarnessError::IoFailure(e.to_string()))?;
    write_atomic(&manifest.report_path(), &body)
        .map_err(|e| HarnessError::IoFailure(e.to_string()))?;
    Ok(report)
}

/// True when a persisted report exists and matches the current inputs.
pub fn report_is_fresh(manifest: &RunManifest) -> Result<bool, HarnessError> {
    let Ok(bytes) = fs::read(manifest.report_path()) else {
        return Ok(false);
    };
    let Ok(stored) = serde_json::from_slice::<PersistedReport>(&bytes) else {
        return Ok(false);
    };
    let (_, _, digest) = read_aligned(&manifest.hyp_path, &manifest.ref_path)?;
    Ok(stored.input_digest == digest && stored.report.signature == manifest.config.signature())
}

/// The persisted report when it is fresh, otherwise a new evaluation.
/// The flag is true when the persisted report was reused.
pub fn evaluate_cached(manifest: &RunManifest) -> Result<(BleuReport, bool), HarnessError> {
    if report_is_fresh(manifest)? {
        let bytes =
            fs::read(manifest.report_path()).map_err(|e| HarnessError::IoFailure(e.to_string()))?;
        let stored: PersistedReport =
            serde_json::from_slice(&bytes).map_err(|e| HarnessError::IoFailure(e.to_string()))?;
        return Ok((stored.report, true));
    }
    Ok((evaluate_run(manifest)?, false))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub best_index: usize,
    pub best: RunManifest,
    pub scores: Vec<f64>,
    /// Indices of other candidates that tied with the winner.
    pub tied_with: Vec<usize>,
}

/// Picks the candidate with the highest validation BLEU; ties go to the
/// earliest candidate. Each candidate's `hyp_path` holds its validation
/// outputs and `validation_refs` the shared references.
pub fn select_best(
    candidates: &[RunManifest],
    validation_refs: &Path,
) -> Result<Selection, HarnessError> {
    if candidates.is_empty() {
        return Err(HarnessError::NoCandidates);
    }
    let mut scores = Vec::with_capacity(candidates.len());
    for c in candidates {
        let m = RunManifest {
            ref_path: validation_refs.to_path_buf(),
            ..c.clone()
        };
        scores.push(score_run(&m)?.0.score);
    }
    let mut best_index = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best_index] {
            best_index = i;
        }
    }
    let tied_with = scores
        .iter()
        .enumerate()
        .filter(|&(i, &s)| i != best_index && s == scores[best_index])
        .map(|(i, _)| i)
        .collect();
    Ok(Selection {
        best_index,
        best: candidates[best_index].clone(),
        scores,
        tied_with,
    })
}

/// Sentence-BLEU ranking, best first; equal scores keep input order.
pub fn rank_outputs<H: AsRef<str>, R: AsRef<str>>(
    hyps: &[H],
    refs: &[R],
    config: &BleuConfig,
) -> Result<Vec<(usize, f64)>, HarnessError> {
    if hyps.len() != refs.len() {
        return Err(HarnessError::LengthMismatch {
            hyp: hyps.len(),
            reference: refs.len(),
        });
    }
    let mut ranked = Vec::with_capacity(hyps.len());
    for (i, (h, r)) in hyps.iter().zip(refs).enumerate() {
        let score = if r.as_ref().trim().is_empty() {
            0.0
        } else {
            sentence_bleu(h.as_ref(), r.as_ref(), config)?.score
        };
        ranked.push((i, score));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ranked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "md" | "markdown" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            other => Err(format!("unknown table format `{other}`")),
        }
    }
}

fn common_signature<'a>(mut sigs: impl Iterator<Item = &'a str>) -> Result<&'a str, HarnessError> {
    let first = sigs.next().ok_or(HarnessError::NoReports)?;
    for s in sigs {
        if s != first {
            return Err(HarnessError::SignatureMismatch {
                expected: first.to_owned(),
                found: s.to_owned(),
            });
        }
    }
    Ok(first)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// One row per label, ordered by label. In markdown the highest score is
/// bold (every row that reaches it, on ties).
pub fn compare_table(
    reports: &[(String, BleuReport)],
    format: TableFormat,
) -> Result<String, HarnessError> {
    let signature = common_signature(reports.iter().map(|(_, r)| r.signature.as_str()))?;
    let mut rows: Vec<(&str, f64)> = reports.iter().map(|(l, r)| (l.as_str(), r.score)).collect();
    rows.sort_by(|a, b| a.0.cmp(b.0));
    let best = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);

    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            out.push_str("| Method | BLEU |\n|:--|--:|\n");
            for (label, score) in rows {
                if score == best {
                    let _ = writeln!(out, "| **{label}** | **{score:.2}** |");
                } else {
                    let _ = writeln!(out, "| {label} | {score:.2} |");
                }
            }
            let _ = writeln!(out, "\nSignature: `{signature}`");
        }
        TableFormat::Csv => {
            out.push_str("label,bleu,signature\n");
            for (label, score) in rows {
                let _ = writeln!(out, "{},{score:.2},{}", csv_field(label), signature);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: RunSize,
    pub method_label: String,
    pub score: f64,
}

/// Low-resource sweep results in ascending size order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub signature: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn render(&self, format: TableFormat) -> String {
        let mut out = String::new();
        match format {
            TableFormat::Markdown => {
                out.push_str("| Size | Method | BLEU |\n|--:|:--|--:|\n");
                for r in &self.rows {
                    let _ = writeln!(out, "| {} | {} | {:.2} |", r.size, r.method_label, r.score);
                }
                let _ = writeln!(out, "\nSignature: `{}`", self.signature);
            }
            TableFormat::Csv => {
                out.push_str("size,method,bleu\n");
                for r in &self.rows {
                    let _ = writeln!(
                        out,
                        "{},{},{:.2}",
                        r.size,
                        csv_field(&r.method_label),
                        r.score
                    );
                }
            }
        }
        out
    }
}

/// Evaluates every manifest whose size is in `sizes` (all when `sizes` is
/// empty) and tabulates them by ascending size, then method label.
pub fn sweep(manifests: &[RunManifest], sizes: &[usize]) -> Result<SweepTable, HarnessError> {
    let selected: Vec<&RunManifest> = manifests
        .iter()
        .filter(|m| sizes.is_empty() || matches!(m.size, RunSize::Count(n) if sizes.contains(&n)))
        .collect();
    let signature = common_signature(
        selected
            .iter()
            .map(|m| m.config.signature())
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str),
    )?
    .to_owned();
    let mut rows = Vec::with_capacity(selected.len());
    for m in selected {
        let report = evaluate_run(m)?;
        rows.push(SweepRow {
            size: m.size,
            method_label: m.method_label.clone(),
            score: report.score,
        });
    }
    rows.sort_by(|a, b| (a.size, &a.method_label).cmp(&(b.size, &b.method_label)));
    Ok(SweepTable { signature, rows })
}
