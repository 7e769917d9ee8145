//! Session persistence.
//!
//! Each session lives in `<data_dir>/sessions/<session_id>.jsonl`: one
//! `create` event followed by one `rate` event per acknowledged rating.
//! A rating is acknowledged only after its line is synced to disk, so
//! replaying the logs at startup restores exactly the acknowledged state.
//! A torn final line (no trailing newline, unparsable) is an
//! unacknowledged write and is dropped on load.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{
    export_csv, summarize, AnnotationSession, EvalError, EvalItem, NextItem, Rate, RatingAck,
    RubricDefinition, Summary, SummaryFilter,
};
use crate::dataset::sample_indices;

/// Session size when drawing from a larger pool.
pub const DEFAULT_SESSION_SIZE: usize = 50;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Create {
        session_id: String,
        annotator_id: String,
        items: Vec<EvalItem>,
        rubric_version: String,
        created_at: DateTime<Utc>,
    },
    Rate {
        item_id: String,
        rate: Rate,
        at: DateTime<Utc>,
    },
}

struct SessionSlot {
    session: AnnotationSession,
    /// `None` for an ephemeral store.
    log: Option<File>,
}

/// Thread-safe registry of sessions backed by per-session event logs.
///
/// Writes to one session are serialized by that session's lock; distinct
/// sessions proceed independently.
pub struct SessionStore {
    dir: Option<PathBuf>,
    rubric: RubricDefinition,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionSlot>>>>,
}

fn append_event(log: Option<&mut File>, event: &Event) -> Result<(), EvalError> {
    let Some(log) = log else {
        return Ok(());
    };
    let mut line = serde_json::to_vec(event).map_err(|e| EvalError::Storage(e.to_string()))?;
    line.push(b'\n');
    log.write_all(&line)?;
    log.sync_data()?;
    Ok(())
}

fn replay_log(path: &Path) -> Result<AnnotationSession, EvalError> {
    let text = fs::read_to_string(path)?;
    let corrupt = |message: String| EvalError::CorruptLog {
        path: path.display().to_string(),
        message,
    };
    let ends_clean = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut session: Option<AnnotationSession> = None;
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = match serde_json::from_str(line) {
            Ok(e) => e,
            Err(_) if idx + 1 == lines.len() && !ends_clean => {
                tracing::warn!(path = %path.display(), "dropping torn trailing log line");
                break;
            }
            Err(e) => return Err(corrupt(format!("line {}: {e}", idx + 1))),
        };
        match (event, session.as_mut()) {
            (
                Event::Create {
                    session_id,
                    annotator_id,
                    items,
                    rubric_version,
                    created_at,
                },
                None,
            ) => {
                session = Some(AnnotationSession {
                    session_id,
                    annotator_id,
                    items,
                    ratings: BTreeMap::new(),
                    rubric_version,
                    created_at,
                })
            }
            (Event::Rate { item_id, rate, .. }, Some(s)) => {
                if !s.items.iter().any(|i| i.item_id == item_id) {
                    return Err(corrupt(format!("rating for unknown item `{item_id}`")));
                }
                if s.ratings.insert(item_id.clone(), rate).is_some() {
                    return Err(corrupt(format!("item `{item_id}` rated twice")));
                }
            }
            (Event::Create { .. }, Some(_)) => return Err(corrupt("second create event".into())),
            (Event::Rate { .. }, None) => return Err(corrupt("rating before create".into())),
        }
    }
    session.ok_or_else(|| corrupt("missing create event".into()))
}

impl SessionStore {
    /// Opens (creating if needed) a store under `data_dir` and replays every
    /// existing session log.
    pub fn open(data_dir: impl Into<PathBuf>, rubric: RubricDefinition) -> Result<Self, EvalError> {
        rubric.validate()?;
        let dir = data_dir.into().join("sessions");
        fs::create_dir_all(&dir)?;
        let mut sessions = HashMap::new();
        let mut entries: Vec<_> = fs::read_dir(&dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let path = entry.path();
            if path.extension().is_none_or(|e| e != "jsonl") {
                continue;
            }
            let session = replay_log(&path)?;
            let log = OpenOptions::new().append(true).open(&path)?;
            sessions.insert(
                session.session_id.clone(),
                Arc::new(Mutex::new(SessionSlot {
                    session,
                    log: Some(log),
                })),
            );
        }
        Ok(SessionStore {
            dir: Some(dir),
            rubric,
            sessions: RwLock::new(sessions),
        })
    }

    /// A store that keeps everything in memory and persists nothing.
    pub fn ephemeral(rubric: RubricDefinition) -> Result<Self, EvalError> {
        rubric.validate()?;
        Ok(SessionStore {
            dir: None,
            rubric,
            sessions: RwLock::new(HashMap::new()),
        })
    }

    pub fn rubric(&self) -> &RubricDefinition {
        &self.rubric
    }

    fn slot(&self, session_id: &str) -> Result<Arc<Mutex<SessionSlot>>, EvalError> {
        self.sessions
            .read()
            .expect("session registry poisoned")
            .get(session_id)
            .cloned()
            .ok_or_else(|| EvalError::UnknownSession(session_id.to_owned()))
    }

    pub fn create_session(
        &self,
        items: Vec<EvalItem>,
        annotator_id: &str,
    ) -> Result<String, EvalError> {
        if items.is_empty() {
            return Err(EvalError::EmptyItemList);
        }
        let mut ids = HashSet::new();
        for item in &items {
            if !ids.insert(item.item_id.as_str()) {
                return Err(EvalError::DuplicateItemId(item.item_id.clone()));
            }
            item.validate()?;
        }
        let session_id = uuid::Uuid::new_v4().simple().to_string();
        let created_at = Utc::now();
        let mut log = match &self.dir {
            Some(dir) => Some(
                OpenOptions::new()
                    .create_new(true)
                    .append(true)
                    .open(dir.join(format!("{session_id}.jsonl")))?,
            ),
            None => None,
        };
        append_event(
            log.as_mut(),
            &Event::Create {
                session_id: session_id.clone(),
                annotator_id: annotator_id.to_owned(),
                items: items.clone(),
                rubric_version: self.rubric.version.clone(),
                created_at,
            },
        )?;
        let session = AnnotationSession {
            session_id: session_id.clone(),
            annotator_id: annotator_id.to_owned(),
            items,
            ratings: BTreeMap::new(),
            rubric_version: self.rubric.version.clone(),
            created_at,
        };
        self.sessions
            .write()
            .expect("session registry poisoned")
            .insert(
                session_id.clone(),
                Arc::new(Mutex::new(SessionSlot { session, log })),
            );
        Ok(session_id)
    }

    /// Creates a session over a seeded draw of `size` items from `pool`
    /// (the whole pool when it is smaller). The same pool and seed give
    /// every annotator the same items.
    pub fn create_session_from_pool(
        &self,
        pool: &[EvalItem],
        annotator_id: &str,
        size: usize,
        seed: u64,
    ) -> Result<String, EvalError> {
        let n = size.min(pool.len());
        let items = sample_indices(pool.len(), n, seed)
            .into_iter()
            .map(|i| pool[i].clone())
            .collect();
        self.create_session(items, annotator_id)
    }

    pub fn next_item(&self, session_id: &str) -> Result<NextItem, EvalError> {
        let slot = self.slot(session_id)?;
        let slot = slot.lock().expect("session lock poisoned");
        let progress = slot.session.progress();
        Ok(match slot.session.next_unrated() {
            Some(item) => NextItem::Pending {
                item: item.clone(),
                progress,
            },
            None => NextItem::Done { progress },
        })
    }

    pub fn submit_rating(
        &self,
        session_id: &str,
        item_id: &str,
        rate: &str,
    ) -> Result<RatingAck, EvalError> {
        let slot = self.slot(session_id)?;
        let rate: Rate = rate.parse()?;
        let mut slot = slot.lock().expect("session lock poisoned");
        if !slot.session.items.iter().any(|i| i.item_id == item_id) {
            return Err(EvalError::UnknownItem(item_id.to_owned()));
        }
        if slot.session.ratings.contains_key(item_id) {
            return Err(EvalError::AlreadyRated(item_id.to_owned()));
        }
        append_event(
            slot.log.as_mut(),
            &Event::Rate {
                item_id: item_id.to_owned(),
                rate,
                at: Utc::now(),
            },
        )?;
        slot.session.ratings.insert(item_id.to_owned(), rate);
        Ok(RatingAck {
            session_id: session_id.to_owned(),
            item_id: item_id.to_owned(),
            rate,
            progress: slot.session.progress(),
            complete: slot.session.is_complete(),
        })
    }

    pub fn session(&self, session_id: &str) -> Result<AnnotationSession, EvalError> {
        let slot = self.slot(session_id)?;
        let session = slot.lock().expect("session lock poisoned").session.clone();
        Ok(session)
    }

    /// Consistent copies of all sessions, ordered by id.
    pub fn sessions(&self) -> Vec<AnnotationSession> {
        let slots: Vec<_> = self
            .sessions
            .read()
            .expect("session registry poisoned")
            .values()
            .cloned()
            .collect();
        let mut out: Vec<_> = slots
            .iter()
            .map(|s| s.lock().expect("session lock poisoned").session.clone())
            .collect();
        out.sort_by(|a, b| a.session_id.cmp(&b.session_id));
        out
    }

    pub fn summarize(&self, filter: &SummaryFilter) -> Result<Summary, EvalError> {
        let sessions = self.sessions();
        summarize(&sessions, filter)
    }

    pub fn export_csv(&self, session_id: &str) -> Result<String, EvalError> {
        export_csv(&self.session(session_id)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(n: usize) -> Vec<EvalItem> {
        (0..n)
            .map(|i| EvalItem {
                item_id: format!("item-{i}"),
                source: format!("source {i}"),
                rationale: format!("rationale {i}"),
                transferred: format!("transferred {i}"),
                task_label: "formality".into(),
                model_label: "student".into(),
            })
            .collect()
    }

    fn store(dir: &Path) -> SessionStore {
        SessionStore::open(dir, RubricDefinition::builtin()).unwrap()
    }

    #[test]
    fn fresh_session_flow() {
        let dir = tempfile::tempdir().unwrap();
        let s = store(dir.path());
        let id = s.create_session(items(50), "a1").unwrap();
        let session = s.session(&id).unwrap();
        assert_eq!(session.items.len(), 50);
        assert!(session.ratings.is_empty());
        assert!(!session.is_complete());

        match s.next_item(&id).unwrap() {
            NextItem::Pending { item, progress } => {
                assert_eq!(item.item_id, "item-0");
                assert_eq!(progress.rated, 0);
            }
            NextItem::Done { .. } => panic!("not done"),
        }
        s.submit_rating(&id, "item-0", "A").unwrap();
        match s.next_item(&id).unwrap() {
            NextItem::Pending { item, .. } => assert_eq!(item.item_id, "item-1"),
            NextItem::Done { .. } => panic!("not done"),
        }
    }

    #[test]
    fn creation_errors() {
        let dir = tempfile::tempdir().unwrap();
        let s = store(dir.path());
        assert_eq!(s.create_session(vec![], "a"), Err(EvalError::EmptyItemList));
        let mut dup = items(2);
        dup[1].item_id = dup[0].item_id.clone();
        assert_eq!(
            s.create_session(dup, "a"),
            Err(EvalError::DuplicateItemId("item-0".into()))
        );
        assert!(s.create_session(items(1), "a").is_ok());
    }

    #[test]
    fn rating_errors() {
        let dir = tempfile::tempdir().unwrap();
        let s = store(dir.path());
        let id = s.create_session(items(2), "a").unwrap();
        let ack = s.submit_rating(&id, "item-0", "A").unwrap();
        assert_eq!(ack.progress.rated, 1);
        assert_eq!(
            s.submit_rating(&id, "item-0", "B"),
            Err(EvalError::AlreadyRated("item-0".into()))
        );
        assert_eq!(
            s.submit_rating(&id, "item-1", "E"),
            Err(EvalError::InvalidRate("E".into()))
        );
        assert_eq!(
            s.submit_rating(&id, "nope", "A"),
            Err(EvalError::UnknownItem("nope".into()))
        );
        assert_eq!(
            s.submit_rating("nope", "item-0", "A"),
            Err(EvalError::UnknownSession("nope".into()))
        );
        assert!(s.submit_rating(&id, "item-1", "D").unwrap().complete);
        assert!(matches!(s.next_item(&id).unwrap(), NextItem::Done { .. }));
    }

    #[test]
    fn reload_restores_ratings() {
        let dir = tempfile::tempdir().unwrap();
        let id = {
            let s = store(dir.path());
            let id = s.create_session(items(3), "a").unwrap();
            s.submit_rating(&id, "item-0", "B").unwrap();
            s.submit_rating(&id, "item-2", "C").unwrap();
            id
        };
        let reopened = store(dir.path());
        let session = reopened.session(&id).unwrap();
        assert_eq!(
            session.ratings,
            BTreeMap::from([("item-0".into(), Rate::B), ("item-2".into(), Rate::C)])
        );
    }

    #[test]
    fn torn_tail_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let id = {
            let s = store(dir.path());
            let id = s.create_session(items(2), "a").unwrap();
            s.submit_rating(&id, "item-0", "A").unwrap();
            id
        };
        let path = dir.path().join("sessions").join(format!("{id}.jsonl"));
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"event\":\"rate\",\"item_id\":\"item-1\",\"ra")
            .unwrap();
        drop(f);
        let s = store(dir.path());
        assert_eq!(s.session(&id).unwrap().ratings.len(), 1);
    }

    #[test]
    fn pool_draw_is_seeded() {
        let dir = tempfile::tempdir().unwrap();
        let s = store(dir.path());
        let pool = items(200);
        let a = s
            .create_session_from_pool(&pool, "a", DEFAULT_SESSION_SIZE, 3)
            .unwrap();
        let b = s
            .create_session_from_pool(&pool, "b", DEFAULT_SESSION_SIZE, 3)
            .unwrap();
        let ia = s.session(&a).unwrap().items;
        assert_eq!(ia.len(), 50);
        assert_eq!(ia, s.session(&b).unwrap().items);
    }
}
