//! Human rating of generated rationales on a four-level rubric.
//!
//! Items are shown one at a time; each gets exactly one rate from A (best)
//! to D. A and B count as acceptable. Sessions are persisted as
//! append-only event logs (see [`SessionStore`]).

mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use store::{SessionStore, DEFAULT_SESSION_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rate {
    A,
    B,
    C,
    D,
}

impl Rate {
    pub const ALL: [Rate; 4] = [Rate::A, Rate::B, Rate::C, Rate::D];

    pub fn is_acceptable(self) -> bool {
        matches!(self, Rate::A | Rate::B)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rate::A => "A",
            Rate::B => "B",
            Rate::C => "C",
            Rate::D => "D",
        })
    }
}

impl FromStr for Rate {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Rate::A),
            "B" | "b" => Ok(Rate::B),
            "C" | "c" => Ok(Rate::C),
            "D" | "d" => Ok(Rate::D),
            other => Err(EvalError::InvalidRate(other.to_owned())),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("session has no items")]
    EmptyItemList,
    #[error("duplicate item id `{0}`")]
    DuplicateItemId(String),
    #[error("item `{item_id}` has an empty `{field}` field")]
    InvalidItem {
        item_id: String,
        field: &'static str,
    },
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("item `{0}` is already rated")]
    AlreadyRated(String),
    #[error("invalid rate `{0}` (expected A, B, C or D)")]
    InvalidRate(String),
    #[error("no ratings match the filter")]
    NoRatings,
    #[error("invalid rubric: {0}")]
    InvalidRubric(String),
    #[error("corrupt session log {path}: {message}")]
    CorruptLog { path: String, message: String },
    #[error("storage failure: {0}")]
    Storage(String),
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Storage(e.to_string())
    }
}

/// One thing to rate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalItem {
    pub item_id: String,
    pub source: String,
    pub rationale: String,
    pub transferred: String,
    #[serde(default)]
    pub task_label: String,
    #[serde(default)]
    pub model_label: String,
}

impl EvalItem {
    fn validate(&self) -> Result<(), EvalError> {
        for (field, value) in [
            ("item_id", &self.item_id),
            ("source", &self.source),
            ("rationale", &self.rationale),
            ("transferred", &self.transferred),
        ] {
            if value.trim().is_empty() {
                return Err(EvalError::InvalidItem {
                    item_id: self.item_id.clone(),
                    field,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricLevel {
    pub label: Rate,
    pub criteria: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricDefinition {
    pub version: String,
    pub instruction: String,
    pub levels: Vec<RubricLevel>,
}

impl RubricDefinition {
    pub fn builtin() -> Self {
        let rubric: RubricDefinition =
            serde_json::from_str(include_str!("../../data/rubric_v1.json"))
                .expect("shipped rubric parses");
        rubric.validate().expect("shipped rubric is valid");
        rubric
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let labels: Vec<Rate> = self.levels.iter().map(|l| l.label).collect();
        if labels != Rate::ALL {
            return Err(EvalError::InvalidRubric(
                "levels must be exactly A, B, C, D in order".into(),
            ));
        }
        if self.levels.iter().any(|l| l.criteria.trim().is_empty()) {
            return Err(EvalError::InvalidRubric("criteria text is empty".into()));
        }
        Ok(())
    }
}

/// A fixed list of items assigned to one annotator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSession {
    pub session_id: String,
    pub annotator_id: String,
    pub items: Vec<EvalItem>,
    pub ratings: BTreeMap<String, Rate>,
    pub rubric_version: String,
    pub created_at: DateTime<Utc>,
}

impl AnnotationSession {
    pub fn is_complete(&self) -> bool {
        self.ratings.len() == self.items.len()
    }

    pub fn next_unrated(&self) -> Option<&EvalItem> {
        self.items
            .iter()
            .find(|i| !self.ratings.contains_key(&i.item_id))
    }

    pub fn progress(&self) -> Progress {
        Progress {
            rated: self.ratings.len(),
            total: self.items.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub rated: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextItem {
    Pending { item: EvalItem, progress: Progress },
    Done { progress: Progress },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingAck {
    pub session_id: String,
    pub item_id: String,
    pub rate: Rate,
    pub progress: Progress,
    pub complete: bool,
}

/// Counts per rate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "C")]
    pub c: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub total: usize,
    /// (A + B) / total.
    pub acceptable_rate: f64,
}

impl Distribution {
    pub fn from_counts(a: usize, b: usize, c: usize, d: usize) -> Self {
        let total = a + b + c + d;
        Distribution {
            a,
            b,
            c,
            d,
            total,
            acceptable_rate: if total == 0 {
                0.0
            } else {
                (a + b) as f64 / total as f64
            },
        }
    }

    pub fn from_rates(rates: impl IntoIterator<Item = Rate>) -> Self {
        let mut counts = [0usize; 4];
        for r in rates {
            counts[r as usize] += 1;
        }
        Self::from_counts(counts[0], counts[1], counts[2], counts[3])
    }

    pub fn count(&self, rate: Rate) -> usize {
        match rate {
            Rate::A => self.a,
            Rate::B => self.b,
            Rate::C => self.c,
            Rate::D => self.d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDistribution {
    pub model_label: String,
    pub task_label: String,
    #[serde(flatten)]
    pub distribution: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(flatten)]
    pub overall: Distribution,
    /// One entry per (model, task), ordered by model then task.
    pub groups: Vec<GroupDistribution>,
}

/// Restricts a summary to matching items; `None` matches everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryFilter {
    pub task: Option<String>,
    pub model: Option<String>,
}

impl SummaryFilter {
    fn matches(&self, item: &EvalItem) -> bool {
        self.task.as_deref().is_none_or(|t| t == item.task_label)
            && self.model.as_deref().is_none_or(|m| m == item.model_label)
    }
}

/// Aggregates submitted ratings across `sessions`.
pub fn summarize<'a>(
    sessions: impl IntoIterator<Item = &'a AnnotationSession>,
    filter: &SummaryFilter,
) -> Result<Summary, EvalError> {
    let mut groups: BTreeMap<(String, String), Vec<Rate>> = BTreeMap::new();
    let mut all = Vec::new();
    for session in sessions {
        for item in &session.items {
            let Some(&rate) = session.ratings.get(&item.item_id) else {
                continue;
            };
            if !filter.matches(item) {
                continue;
            }
            all.push(rate);
            groups
                .entry((item.model_label.clone(), item.task_label.clone()))
                .or_default()
                .push(rate);
        }
    }
    if all.is_empty() {
        return Err(EvalError::NoRatings);
    }
    Ok(Summary {
        overall: Distribution::from_rates(all),
        groups: groups
            .into_iter()
            .map(|((model_label, task_label), rates)| GroupDistribution {
                model_label,
                task_label,
                distribution: Distribution::from_rates(rates),
            })
            .collect(),
    })
}

/// CSV with columns `item_id, source, rationale, transferred, rate`; the
/// rate is empty for unrated items.
pub fn export_csv(session: &AnnotationSession) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["item_id", "source", "rationale", "transferred", "rate"])
        .map_err(|e| EvalError::Storage(e.to_string()))?;
    for item in &session.items {
        let rate = session
            .ratings
            .get(&item.item_id)
            .map(|r| r.to_string())
            .unwrap_or_default();
        w.write_record([
            &item.item_id,
            &item.source,
            &item.rationale,
            &item.transferred,
            &rate,
        ])
        .map_err(|e| EvalError::Storage(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| EvalError::Storage(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| EvalError::Storage(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acceptable_rates() {
        let d = Distribution::from_counts(20, 17, 13, 0);
        assert!((d.acceptable_rate - 0.74).abs() < 1e-12);
        assert_eq!(Distribution::from_counts(43, 7, 0, 0).acceptable_rate, 1.0);
        assert_eq!(Distribution::from_counts(1, 0, 0, 0).acceptable_rate, 1.0);
    }

    #[test]
    fn rate_parsing() {
        assert_eq!("A".parse::<Rate>().unwrap(), Rate::A);
        assert_eq!("E".parse::<Rate>(), Err(EvalError::InvalidRate("E".into())));
    }

    #[test]
    fn builtin_rubric() {
        let r = RubricDefinition::builtin();
        assert_eq!(r.levels.len(), 4);
        let mut bad = r.clone();
        bad.levels.pop();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn summary_groups() {
        let item = |id: &str, model: &str| EvalItem {
            item_id: id.into(),
            source: "s".into(),
            rationale: "r".into(),
            transferred: "t".into(),
            task_label: "detox".into(),
            model_label: model.into(),
        };
        let session = AnnotationSession {
            session_id: "s".into(),
            annotator_id: "a".into(),
            items: vec![item("1", "m1"), item("2", "m2"), item("3", "m2")],
            ratings: BTreeMap::from([("1".into(), Rate::A), ("2".into(), Rate::C)]),
            rubric_version: "v".into(),
            created_at: Utc::now(),
        };
        let s = summarize([&session], &SummaryFilter::default()).unwrap();
        assert_eq!(s.overall.total, 2);
        assert_eq!(s.groups.len(), 2);
        let only_m2 = summarize(
            [&session],
            &SummaryFilter {
                model: Some("m2".into()),
                task: None,
            },
        )
        .unwrap();
        assert_eq!(only_m2.overall.c, 1);
        assert_eq!(
            summarize(
                [&session],
                &SummaryFilter {
                    model: Some("zzz".into()),
                    task: None
                }
            ),
            Err(EvalError::NoRatings)
        );
        let csv = export_csv(&session).unwrap();
        assert!(csv.starts_with("item_id,source,rationale,transferred,rate\n"));
        assert!(csv.contains("\n3,s,r,t,\n"));
    }
}
