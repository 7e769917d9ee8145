//! Rationale-annotated training data for text style transfer.
//!
//! The crate covers the whole offline loop: few-shot prompt rendering
//! ([`prompt`]), teacher completions with record/replay ([`backend`]),
//! completion parsing and quality flags ([`parser`]), training corpus
//! construction ([`dataset`]), a BLEU implementation ([`bleu`]), run
//! comparison ([`harness`]), rationale rating sessions ([`human_eval`])
//! and the staged driver tying them together ([`pipeline`]).

pub mod backend;
pub mod bleu;
pub mod dataset;
pub mod harness;
pub mod human_eval;
pub mod io;
pub mod parser;
pub mod pipeline;
pub mod prompt;

pub use backend::{BackendError, CompletionBackend, GenerationParams, RawCompletion};
pub use bleu::{
    corpus_bleu, sentence_bleu, BleuConfig, BleuError, BleuReport, Smoothing, TokenizerKind,
};
pub use dataset::{DatasetError, FilterPolicy, Provenance, TrainingExample};
pub use harness::{HarnessError, RunManifest};
pub use human_eval::{EvalError, EvalItem, Rate, SessionStore};
pub use parser::{parse_ta, parse_tb, GenerationMode, GenerationRecord, QualityFlag};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError};
pub use prompt::{
    Exemplar, PromptError, PromptTemplate, StyleDirection, StylePreset, TemplateKind,
};
