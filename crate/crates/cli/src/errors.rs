//! Exit codes and error output.
//!
//! | code | class |
//! |---|---|
//! | 1 | other |
//! | 2 | usage (bad flag values; clap also exits 2) |
//! | 3 | config |
//! | 4 | input (missing or malformed files) |
//! | 5 | backend |
//! | 6 | dataset |
//! | 7 | evaluation |
//! | 8 | human evaluation |

use std::error::Error as StdError;

use styledistill_core::backend::BackendError;
use styledistill_core::bleu::BleuError;
use styledistill_core::dataset::DatasetError;
use styledistill_core::harness::HarnessError;
use styledistill_core::human_eval::EvalError;
use styledistill_core::io::JsonlError;
use styledistill_core::pipeline::{PipelineError, StageError};
use styledistill_core::prompt::PromptError;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Other,
    Usage,
    Config,
    Input,
    Backend,
    Dataset,
    Evaluation,
    HumanEval,
}

impl ErrorClass {
    pub fn code(self) -> i32 {
        match self {
            ErrorClass::Other => 1,
            ErrorClass::Usage => 2,
            ErrorClass::Config => 3,
            ErrorClass::Input => 4,
            ErrorClass::Backend => 5,
            ErrorClass::Dataset => 6,
            ErrorClass::Evaluation => 7,
            ErrorClass::HumanEval => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Other => "other",
            ErrorClass::Usage => "usage",
            ErrorClass::Config => "config",
            ErrorClass::Input => "input",
            ErrorClass::Backend => "backend",
            ErrorClass::Dataset => "dataset",
            ErrorClass::Evaluation => "evaluation",
            ErrorClass::HumanEval => "human_eval",
        }
    }
}

fn classify_prompt(e: &PromptError) -> ErrorClass {
    match e {
        PromptError::FileMissing(_) | PromptError::SchemaViolation { .. } | PromptError::Io(_) => {
            ErrorClass::Input
        }
        _ => ErrorClass::Config,
    }
}

fn classify_dataset(e: &DatasetError) -> ErrorClass {
    match e {
        DatasetError::IoFailure(_) | DatasetError::Malformed { .. } | DatasetError::Gold(_) => {
            ErrorClass::Input
        }
        DatasetError::UnknownPolicy(_) => ErrorClass::Config,
        DatasetError::Prompt(p) => classify_prompt(p),
        _ => ErrorClass::Dataset,
    }
}

fn classify_one(e: &(dyn StdError + 'static)) -> Option<(ErrorClass, Option<String>)> {
    if let Some(e) = e.downcast_ref::<PipelineError>() {
        return Some(match e {
            PipelineError::Config(_) | PipelineError::ConfigMismatch { .. } => {
                (ErrorClass::Config, None)
            }
            PipelineError::Stage { stage, source } => {
                let class = match source {
                    StageError::Prompt(p) => classify_prompt(p),
                    StageError::Backend(_) => ErrorClass::Backend,
                    StageError::Dataset(d) => classify_dataset(d),
                    StageError::Io(_) => ErrorClass::Input,
                };
                (class, Some(stage.to_string()))
            }
        });
    }
    let class = if e.is::<UsageError>() {
        ErrorClass::Usage
    } else if let Some(p) = e.downcast_ref::<PromptError>() {
        classify_prompt(p)
    } else if let Some(d) = e.downcast_ref::<DatasetError>() {
        classify_dataset(d)
    } else if e.is::<BackendError>() {
        ErrorClass::Backend
    } else if let Some(h) = e.downcast_ref::<HarnessError>() {
        match h {
            HarnessError::FileMissing(_)
            | HarnessError::InvalidManifest(_)
            | HarnessError::IoFailure(_) => ErrorClass::Input,
            _ => ErrorClass::Evaluation,
        }
    } else if e.is::<BleuError>() {
        ErrorClass::Evaluation
    } else if e.is::<EvalError>() {
        ErrorClass::HumanEval
    } else if e.is::<JsonlError>() || e.is::<std::io::Error>() {
        ErrorClass::Input
    } else {
        return None;
    };
    Some((class, None))
}

/// Class and failing stage of an error, from the first recognized cause.
pub fn classify(err: &anyhow::Error) -> (ErrorClass, Option<String>) {
    err.chain()
        .find_map(classify_one)
        .unwrap_or((ErrorClass::Other, None))
}

/// Prints `err` to stderr and returns the exit code.
pub fn report(err: &anyhow::Error, json: bool) -> i32 {
    let (class, stage) = classify(err);
    if json {
        let body = serde_json::json!({
            "error": class.name(),
            "exit_code": class.code(),
            "stage": stage,
            "message": format!("{err:#}"),
        });
        eprintln!("{body}");
    } else {
        eprintln!("error: {err:#}");
    }
    class.code()
}
