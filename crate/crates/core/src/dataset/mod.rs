//! Training corpus construction from parsed generations.
//!
//! Supervision is the rationale, a newline, the canonical transferred
//! marker and a space, then the target text:
//!
//! ```text
//! <rationale>
//! [Transferred]: <target>
//! ```
//!
//! so the same parser reads both teacher completions and student targets.

mod export;
mod gold;
mod plan;
mod sample;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use export::{decode, encode, export, import, read_examples, ExportFormat};
pub use gold::{load_gold, load_gold_aligned, load_gold_jsonl, GoldCorpus, GoldPair};
pub use plan::{expand_plan, GenerationPlan, PlanSource, PlannedRequest, DEFAULT_Q_VALUES};
pub use sample::{sample_indices, SplitMix64};

use crate::io::sha256_hex;
use crate::parser::{GenerationMode, GenerationRecord, QualityFlag, TRANSFERRED_MARKERS};
use crate::prompt::{
    has_marker_line, render_student_input, PromptError, PromptTemplate, TRANSFERRED_MARKER,
};

/// Low-resource training set sizes.
pub const DEFAULT_SWEEP_SIZES: [usize; 5] = [1000, 2000, 5000, 10000, 20000];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error("every record was filtered out ({0})")]
    AllRecordsFiltered(DropReport),
    #[error("no gold target for source {0}")]
    MissingGoldTarget(String),
    #[error("sample size {requested} exceeds the {available} available examples")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("field contains a tab or newline and escaping is disabled (line {line})")]
    UnescapableField { line: usize },
    #[error("malformed dataset line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("gold corpus error: {0}")]
    Gold(String),
    #[error("unknown filter policy `{0}`")]
    UnknownPolicy(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("i/o failure: {0}")]
    IoFailure(String),
}

impl From<std::io::Error> for DatasetError {
    fn from(e: std::io::Error) -> Self {
        DatasetError::IoFailure(e.to_string())
    }
}

/// Stable identifier of a source text: the first 16 hex characters of the
/// SHA-256 of its whitespace-normalized form.
pub fn source_id(text: &str) -> String {
    let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
    sha256_hex(normalized)[..16].to_owned()
}

/// The supervision string for a rationale and a target.
pub fn compose_supervision(cot: &str, target: &str) -> String {
    format!("{cot}\n{TRANSFERRED_MARKER} {target}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    TargetBlind,
    TargetAware,
}

/// A trainer-ready (input, supervision) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainingExample {
    pub input: String,
    pub supervision: String,
    pub provenance: Provenance,
    pub source_id: String,
    pub sample_index: u32,
    /// Quality flags carried by a record that the policy kept.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<QualityFlag>,
}

/// Which flags cause a record to be dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub name: String,
    pub drop: BTreeSet<QualityFlag>,
}

impl FilterPolicy {
    /// Drops records whose supervision would be malformed; everything else
    /// is kept and tagged.
    pub fn default_policy() -> Self {
        FilterPolicy {
            name: "default".into(),
            drop: BTreeSet::from([
                QualityFlag::MissingMarker,
                QualityFlag::EmptyTransferred,
                QualityFlag::EmptyCot,
            ]),
        }
    }

    /// Drops any flagged record.
    pub fn strict() -> Self {
        FilterPolicy {
            name: "strict".into(),
            drop: QualityFlag::ALL.into_iter().collect(),
        }
    }
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self::default_policy()
    }
}

impl FromStr for FilterPolicy {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(Self::default_policy()),
            "strict" => Ok(Self::strict()),
            other => Err(DatasetError::UnknownPolicy(other.into())),
        }
    }
}

/// Counts of dropped records by reason.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropReport {
    pub input_records: usize,
    pub kept: usize,
    pub dropped: BTreeMap<String, usize>,
}

impl DropReport {
    pub fn total_dropped(&self) -> usize {
        self.dropped.values().sum()
    }

    fn drop(&mut self, reason: &str) {
        *self.dropped.entry(reason.to_owned()).or_default() += 1;
    }
}

impl std::fmt::Display for DropReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} of {} kept", self.kept, self.input_records)?;
        for (reason, n) in &self.dropped {
            write!(f, ", {reason}: {n}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildOutput {
    pub examples: Vec<TrainingExample>,
    pub report: DropReport,
}

/// Reason a record is dropped: the first policy flag it carries, in flag
/// order, so each record is counted once.
fn policy_drop_reason(record: &GenerationRecord, policy: &FilterPolicy) -> Option<&'static str> {
    record
        .flags
        .iter()
        .find(|f| policy.drop.contains(f))
        .map(|f| f.name())
}

fn sorted(records: &[GenerationRecord]) -> Vec<&GenerationRecord> {
    let mut refs: Vec<_> = records.iter().collect();
    refs.sort_by(|a, b| (&a.source_id, a.sample_index).cmp(&(&b.source_id, b.sample_index)));
    refs
}

fn kept_tags(record: &GenerationRecord) -> Vec<QualityFlag> {
    record.flags.iter().copied().collect()
}

fn finish(
    examples: Vec<TrainingExample>,
    mut report: DropReport,
) -> Result<BuildOutput, DatasetError> {
    report.kept = examples.len();
    if examples.is_empty() {
        return Err(DatasetError::AllRecordsFiltered(report));
    }
    Ok(BuildOutput { examples, report })
}

/// Target-blind corpus: rationale joined with the model's transferred text.
pub fn build_tb(
    records: &[GenerationRecord],
    policy: &FilterPolicy,
    student: &PromptTemplate,
) -> Result<BuildOutput, DatasetError> {
    let mut report = DropReport {
        input_records: records.len(),
        ..Default::default()
    };
    let mut examples = Vec::new();
    for record in sorted(records) {
        if let Some(reason) = policy_drop_reason(record, policy) {
            report.drop(reason);
            continue;
        }
        let (transferred, cot) = match (&record.transferred, record.cot.trim().is_empty()) {
            (Some(t), false) if !t.trim().is_empty() => (t, &record.cot),
            (None, _) => {
                report.drop(QualityFlag::MissingMarker.name());
                continue;
            }
            (Some(t), _) if t.trim().is_empty() => {
                report.drop(QualityFlag::EmptyTransferred.name());
                continue;
            }
            _ => {
                report.drop(QualityFlag::EmptyCot.name());
                continue;
            }
        };
        examples.push(TrainingExample {
            input: render_student_input(&record.source, &record.style, student)?,
            supervision: compose_supervision(cot, transferred),
            provenance: Provenance::TargetBlind,
            source_id: record.source_id.clone(),
            sample_index: record.sample_index,
            tags: kept_tags(record),
        });
    }
    finish(examples, report)
}

/// Target-aware corpus: generated explanation joined with the gold target.
/// The model's own transferred text is never consulted.
pub fn build_ta(
    records: &[GenerationRecord],
    gold: &HashMap<String, String>,
    policy: &FilterPolicy,
    student: &PromptTemplate,
) -> Result<BuildOutput, DatasetError> {
    if let Some(missing) = records.iter().find(|r| !gold.contains_key(&r.source_id)) {
        return Err(DatasetError::MissingGoldTarget(missing.source_id.clone()));
    }
    let mut report = DropReport {
        input_records: records.len(),
        ..Default::default()
    };
    let mut examples = Vec::new();
    for record in sorted(records) {
        if let Some(reason) = policy_drop_reason(record, policy) {
            report.drop(reason);
            continue;
        }
        let target = &gold[&record.source_id];
        if record.cot.trim().is_empty() {
            report.drop(QualityFlag::EmptyCot.name());
            continue;
        }
        if has_marker_line(&record.cot, &TRANSFERRED_MARKERS) {
            report.drop("MarkerInRationale");
            continue;
        }
        if target.trim().is_empty()
            || target.trim() != target
            || has_marker_line(target, &TRANSFERRED_MARKERS)
        {
            report.drop("UnusableGoldTarget");
            continue;
        }
        examples.push(TrainingExample {
            input: render_student_input(&record.source, &record.style, student)?,
            supervision: compose_supervision(&record.cot, target),
            provenance: Provenance::TargetAware,
            source_id: record.source_id.clone(),
            sample_index: record.sample_index,
            tags: kept_tags(record),
        });
    }
    finish(examples, report)
}

/// Uniform sample of `n` examples without replacement; see [`sample`] for
/// the exact recipe. Relative order is preserved.
pub fn subsample(
    examples: &[TrainingExample],
    n: usize,
    seed: u64,
) -> Result<Vec<TrainingExample>, DatasetError> {
    if n > examples.len() {
        return Err(DatasetError::SampleTooLarge {
            requested: n,
            available: examples.len(),
        });
    }
    Ok(sample_indices(examples.len(), n, seed)
        .into_iter()
        .map(|i| examples[i].clone())
        .collect())
}

/// Removes exact `(input, supervision)` duplicates, keeping the first.
pub fn dedup(examples: &[TrainingExample]) -> Vec<TrainingExample> {
    let mut seen = HashSet::new();
    examples
        .iter()
        .filter(|e| seen.insert((e.input.as_str(), e.supervision.as_str())))
        .cloned()
        .collect()
}

/// Which builder a mode uses.
pub fn provenance_for(mode: GenerationMode) -> Provenance {
    match mode {
        GenerationMode::TargetBlind => Provenance::TargetBlind,
        GenerationMode::TargetAware => Provenance::TargetAware,
    }
}
