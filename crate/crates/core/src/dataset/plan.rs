use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::source_id;
use crate::prompt::StyleDirection;

/// Sample counts per source used by the scaling study.
pub const DEFAULT_Q_VALUES: [u32; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanSource {
    pub source_id: String,
    pub text: String,
}

/// Sources to generate for, each sampled `q` times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationPlan {
    pub sources: Vec<PlanSource>,
    pub q: u32,
    pub style: StyleDirection,
}

/// One planned generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedRequest {
    pub source_id: String,
    pub source: String,
    pub sample_index: u32,
}

/// Builds a plan over `sources`. Blank lines are skipped and repeated
/// sources (same id) are kept once, so every `(source_id, sample_index)`
/// pair in the expansion is unique.
pub fn expand_plan<S: AsRef<str>>(sources: &[S], q: u32, style: StyleDirection) -> GenerationPlan {
    assert!(q >= 1, "q must be positive");
    let mut seen = HashSet::new();
    let mut plan_sources = Vec::with_capacity(sources.len());
    for text in sources {
        let text = text.as_ref();
        if text.trim().is_empty() {
            continue;
        }
        let id = source_id(text);
        if seen.insert(id.clone()) {
            plan_sources.push(PlanSource {
                source_id: id,
                text: text.to_owned(),
            });
        }
    }
    GenerationPlan {
        sources: plan_sources,
        q,
        style,
    }
}

impl GenerationPlan {
    pub fn request_count(&self) -> usize {
        self.sources.len() * self.q as usize
    }

    /// Source-major expansion: all samples of the first source, then the
    /// next source.
    pub fn requests(&self) -> Vec<PlannedRequest> {
        let mut out = Vec::with_capacity(self.request_count());
        for s in &self.sources {
            for sample_index in 0..self.q {
                out.push(PlannedRequest {
                    source_id: s.source_id.clone(),
                    source: s.text.clone(),
                    sample_index,
                });
            }
        }
        out
    }
}
