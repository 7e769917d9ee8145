use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{source_id, DatasetError};
use crate::io::read_lines;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldPair {
    pub source: String,
    pub target: String,
}

/// Human-written parallel data, one target per source.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldCorpus {
    pub pairs: Vec<GoldPair>,
}

impl GoldCorpus {
    /// Targets keyed by source id. The first pair wins when a source repeats.
    pub fn by_source_id(&self) -> HashMap<String, String> {
        let mut map = HashMap::new();
        for pair in &self.pairs {
            map.entry(source_id(&pair.source))
                .or_insert_with(|| pair.target.clone());
        }
        map
    }

    pub fn sources(&self) -> Vec<String> {
        self.pairs.iter().map(|p| p.source.clone()).collect()
    }
}

fn clean(pair: GoldPair) -> GoldPair {
    GoldPair {
        source: pair.source.trim().to_owned(),
        target: pair.target.trim().to_owned(),
    }
}

/// JSONL of `{source, target}` objects.
pub fn load_gold_jsonl(path: &Path) -> Result<GoldCorpus, DatasetError> {
    let text = fs::read_to_string(path)
        .map_err(|e| DatasetError::Gold(format!("{}: {e}", path.display())))?;
    let pairs: Vec<GoldPair> =
        crate::io::parse_jsonl(&text).map_err(|e| DatasetError::Malformed {
            line: e.line,
            message: e.source.to_string(),
        })?;
    Ok(GoldCorpus {
        pairs: pairs.into_iter().map(clean).collect(),
    })
}

/// Two line-aligned text files.
pub fn load_gold_aligned(sources: &Path, targets: &Path) -> Result<GoldCorpus, DatasetError> {
    let read =
        |p: &Path| read_lines(p).map_err(|e| DatasetError::Gold(format!("{}: {e}", p.display())));
    let src = read(sources)?;
    let tgt = read(targets)?;
    if src.len() != tgt.len() {
        return Err(DatasetError::Gold(format!(
            "source file has {} lines but target file has {}",
            src.len(),
            tgt.len()
        )));
    }
    Ok(GoldCorpus {
        pairs: src
            .into_iter()
            .zip(tgt)
            .map(|(source, target)| clean(GoldPair { source, target }))
            .collect(),
    })
}

/// Loads `path` as JSONL, or as an aligned pair when `targets` is given.
pub fn load_gold(path: &Path, targets: Option<&Path>) -> Result<GoldCorpus, DatasetError> {
    match targets {
        Some(t) => load_gold_aligned(path, t),
        None => load_gold_jsonl(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_files_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let s = dir.path().join("s.txt");
        let t = dir.path().join("t.txt");
        fs::write(&s, "a\nb\n").unwrap();
        fs::write(&t, "A\n").unwrap();
        assert!(load_gold_aligned(&s, &t).is_err());
        fs::write(&t, "A \nB\r\n").unwrap();
        let g = load_gold_aligned(&s, &t).unwrap();
        assert_eq!(g.pairs[0].target, "A");
        assert_eq!(g.by_source_id()[&source_id("b")], "B");
    }
}
