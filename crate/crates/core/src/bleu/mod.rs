//! Corpus and sentence BLEU.
//!
//! Counting follows the reference scorer: clipped n-gram matches and
//! n-gram totals are summed over the corpus before any ratio is taken, the
//! brevity penalty uses the summed lengths, and `exp` smoothing replaces
//! the k-th order with zero matches by `1 / (2^k * total)`. A corpus with
//! no matches at any order scores 0.

mod tokenizer;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use tokenizer::{tokenize, TokenizerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    Exp,
    None,
}

impl Smoothing {
    pub fn tag(self) -> &'static str {
        match self {
            Smoothing::Exp => "exp",
            Smoothing::None => "none",
        }
    }
}

impl std::str::FromStr for Smoothing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exp" => Ok(Smoothing::Exp),
            "none" => Ok(Smoothing::None),
            other => Err(format!(
                "unknown smoothing `{other}` (expected exp or none)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_order: usize,
    pub tokenizer: TokenizerKind,
    pub smoothing: Smoothing,
    pub lowercase: bool,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_order: 4,
            tokenizer: TokenizerKind::ThirteenA,
            smoothing: Smoothing::Exp,
            lowercase: false,
        }
    }
}

impl BleuConfig {
    pub fn signature(&self) -> String {
        signature(self)
    }
}

/// Canonical description of a configuration, e.g.
/// `bleu|tok:13a|smooth:exp|order:4|case:mixed`.
pub fn signature(config: &BleuConfig) -> String {
    format!(
        "bleu|tok:{}|smooth:{}|order:{}|case:{}",
        config.tokenizer.tag(),
        config.smoothing.tag(),
        config.max_order,
        if config.lowercase { "lc" } else { "mixed" }
    )
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum BleuError {
    #[error("hypothesis/reference count mismatch: {hyp} vs {reference}")]
    LengthMismatch { hyp: usize, reference: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("empty reference")]
    EmptyReference,
    #[error("max_order must be at least 1")]
    InvalidOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    /// 0 to 100.
    pub score: f64,
    /// Per-order precision in [0, 1], after smoothing.
    pub precisions: Vec<f64>,
    #[serde(rename = "bp")]
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
    pub signature: String,
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    /// Number of hypotheses with no tokens.
    #[serde(default)]
    pub empty_hypotheses: usize,
}

/// Sufficient statistics of one or more segment pairs. Merging is plain
/// addition, so any grouping of pairs gives the same corpus totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramStats {
    pub hyp_len: usize,
    pub ref_len: usize,
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
}

impl NgramStats {
    fn zero(max_order: usize) -> Self {
        NgramStats {
            hyp_len: 0,
            ref_len: 0,
            matches: vec![0; max_order],
            totals: vec![0; max_order],
        }
    }

    pub fn merge(&mut self, other: &NgramStats) {
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
    }
}

/// Maps each token to a small integer id shared by both sides of a pair.
fn intern<'a>(hyp: &'a [String], reference: &'a [String]) -> (Vec<u32>, Vec<u32>) {
    let mut ids: HashMap<&'a str, u32> = HashMap::with_capacity(hyp.len() + reference.len());
    let mut map = |toks: &'a [String]| -> Vec<u32> {
        toks.iter()
            .map(|t| {
                let next = ids.len() as u32;
                *ids.entry(t.as_str()).or_insert(next)
            })
            .collect()
    };
    let h = map(hyp);
    let r = map(reference);
    (h, r)
}

/// Clipped n-gram matches: each reference occurrence is consumed at most once.
fn clipped_matches(hyp: &[u32], reference: &[u32], n: usize) -> u64 {
    if hyp.len() < n || reference.len() < n {
        return 0;
    }
    let mut available: HashMap<&[u32], u64> = HashMap::with_capacity(reference.len());
    for gram in reference.windows(n) {
        *available.entry(gram).or_insert(0) += 1;
    }
    let mut matches = 0;
    for gram in hyp.windows(n) {
        if let Some(left) = available.get_mut(gram) {
            if *left > 0 {
                *left -= 1;
                matches += 1;
            }
        }
    }
    matches
}

fn preprocess(text: &str, config: &BleuConfig) -> Vec<String> {
    // trailing whitespace is stripped before tokenization
    let text = text.trim_end_matches(tokenizer::is_split_whitespace);
    if config.lowercase {
        tokenize(&text.to_lowercase(), config.tokenizer)
    } else {
        tokenize(text, config.tokenizer)
    }
}

/// Statistics for a single (hypothesis, reference) pair.
pub fn segment_stats(hypothesis: &str, reference: &str, config: &BleuConfig) -> NgramStats {
    let hyp = preprocess(hypothesis, config);
    let reference = preprocess(reference, config);
    let mut stats = NgramStats::zero(config.max_order);
    stats.hyp_len = hyp.len();
    stats.ref_len = reference.len();
    let (hyp, reference) = intern(&hyp, &reference);
    for n in 1..=config.max_order {
        stats.totals[n - 1] = hyp.len().saturating_sub(n - 1) as u64;
        stats.matches[n - 1] = clipped_matches(&hyp, &reference, n);
    }
    stats
}

fn log_or_floor(p: f64) -> f64 {
    if p == 0.0 {
        -9_999_999_999.0
    } else {
        p.ln()
    }
}

/// Score from summed statistics. With `effective_order`, orders the
/// hypothesis is too short to contain are left out of the mean.
pub fn score_stats(stats: &NgramStats, config: &BleuConfig, effective_order: bool) -> BleuReport {
    let order = config.max_order;
    let bp = if stats.hyp_len < stats.ref_len {
        if stats.hyp_len > 0 {
            (1.0 - stats.ref_len as f64 / stats.hyp_len as f64).exp()
        } else {
            0.0
        }
    } else {
        1.0
    };

    // percent-scale precisions, converted to fractions for the report
    let mut precisions = vec![0.0; order];
    let mut score = 0.0;
    if stats.matches.iter().any(|&m| m > 0) {
        let mut smooth = 1.0;
        let mut eff_order = order;
        for n in 1..=order {
            let total = stats.totals[n - 1];
            if total == 0 {
                break;
            }
            if effective_order {
                eff_order = n;
            }
            let matched = stats.matches[n - 1];
            precisions[n - 1] = if matched == 0 {
                match config.smoothing {
                    Smoothing::Exp => {
                        smooth *= 2.0;
                        100.0 / (smooth * total as f64)
                    }
                    Smoothing::None => 0.0,
                }
            } else {
                100.0 * matched as f64 / total as f64
            };
        }
        let log_sum: f64 = precisions[..eff_order]
            .iter()
            .map(|&p| log_or_floor(p))
            .sum();
        score = bp * (log_sum / eff_order as f64).exp();
    }

    BleuReport {
        score,
        precisions: precisions.iter().map(|p| p / 100.0).collect(),
        brevity_penalty: bp,
        hyp_len: stats.hyp_len,
        ref_len: stats.ref_len,
        signature: signature(config),
        matches: stats.matches.clone(),
        totals: stats.totals.clone(),
        empty_hypotheses: 0,
    }
}

pub fn corpus_bleu<H, R>(
    hypotheses: &[H],
    references: &[R],
    config: &BleuConfig,
) -> Result<BleuReport, BleuError>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    if config.max_order == 0 {
        return Err(BleuError::InvalidOrder);
    }
    if hypotheses.len() != references.len() {
        return Err(BleuError::LengthMismatch {
            hyp: hypotheses.len(),
            reference: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(BleuError::EmptyCorpus);
    }
    let mut total = NgramStats::zero(config.max_order);
    let mut empty = 0;
    for (h, r) in hypotheses.iter().zip(references) {
        let s = segment_stats(h.as_ref(), r.as_ref(), config);
        if s.hyp_len == 0 {
            empty += 1;
        }
        total.merge(&s);
    }
    let mut report = score_stats(&total, config, false);
    report.empty_hypotheses = empty;
    Ok(report)
}

/// Single-pair BLEU with `exp` smoothing and effective order, so short
/// segments are not zeroed by orders they cannot contain.
pub fn sentence_bleu(
    hypothesis: &str,
    reference: &str,
    config: &BleuConfig,
) -> Result<BleuReport, BleuError> {
    if reference.trim().is_empty() {
        return Err(BleuError::EmptyReference);
    }
    if config.max_order == 0 {
        return Err(BleuError::InvalidOrder);
    }
    let config = BleuConfig {
        smoothing: Smoothing::Exp,
        ..*config
    };
    let stats = segment_stats(hypothesis, reference, &config);
    let mut report = score_stats(&stats, &config, true);
    report.empty_hypotheses = usize::from(stats.hyp_len == 0);
    Ok(report)
}
