//! Few-shot prompt rendering for rationale generation.
//!
//! Every prompt is a sequence of blocks separated by one blank line.
//! A target-blind block has the skeleton
//!
//! ```text
//! <instruction>
//! Source: <source>
//! <trigger phrase>
//! <rationale>
//! [Transferred]: <target>
//! ```
//!
//! and the query block stops right after the trigger line, leaving the
//! rationale and the transferred text to the model. A target-aware block
//! also carries a `Target:` line and asks for an explanation prefixed with
//! `[EXPLANATION]:`. The student model sees the bare target-blind query
//! block with no exemplars.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const DEFAULT_TRIGGER: &str = "Let's break down the rewriting process step by step.";
pub const DEFAULT_EXPLAIN_REQUEST: &str =
    "Explain step by step how the source text is rewritten into the target text.";
pub const TRANSFERRED_MARKER: &str = "[Transferred]:";
/// Double-bracket spelling some completions use for the transferred marker.
pub const TRANSFERRED_MARKER_ALT: &str = "[[Transferred]]:";
pub const EXPLANATION_MARKER: &str = "[EXPLANATION]:";

pub const DEFAULT_TB_INSTRUCTION: &str =
    "Rewrite the following {source_style} text into {target_style} text.";
pub const DEFAULT_TA_INSTRUCTION: &str =
    "The following {source_style} source text has been rewritten into {target_style} target text.";

/// Number of exemplars used when a template is built from a preset.
pub const DEFAULT_EXEMPLAR_COUNT: usize = 3;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("source text is empty")]
    EmptySource,
    #[error("gold target text is empty")]
    EmptyGoldTarget,
    #[error("template kind mismatch: expected {expected}, found {found}")]
    TemplateKindMismatch {
        expected: TemplateKind,
        found: TemplateKind,
    },
    #[error("exemplar file not found: {0}")]
    FileMissing(String),
    #[error("exemplar schema violation at line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
    #[error("exemplar at line {line} has a marker line in its `{field}` field")]
    MarkerInExemplar { line: usize, field: &'static str },
    #[error("invalid style direction: {0}")]
    InvalidStyle(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Source and target style labels plus the task instruction sentence.
///
/// The instruction may contain `{source_style}` and `{target_style}`
/// placeholders. An empty instruction defers to the template's own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleDirection {
    pub source_style: String,
    pub target_style: String,
    #[serde(default)]
    pub task_instruction: String,
}

impl StyleDirection {
    pub fn new(
        source_style: impl Into<String>,
        target_style: impl Into<String>,
    ) -> Result<Self, PromptError> {
        Self::with_instruction(source_style, target_style, "")
    }

    pub fn with_instruction(
        source_style: impl Into<String>,
        target_style: impl Into<String>,
        task_instruction: impl Into<String>,
    ) -> Result<Self, PromptError> {
        let style = StyleDirection {
            source_style: source_style.into(),
            target_style: target_style.into(),
            task_instruction: task_instruction.into(),
        };
        style.validate()?;
        Ok(style)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.target_style.trim().is_empty() {
            return Err(PromptError::InvalidStyle("target style is empty".into()));
        }
        for (name, value) in [
            ("source_style", &self.source_style),
            ("target_style", &self.target_style),
            ("task_instruction", &self.task_instruction),
        ] {
            if value.contains('\n') || value.contains('\r') {
                return Err(PromptError::InvalidStyle(format!(
                    "{name} contains a newline"
                )));
            }
        }
        Ok(())
    }

    fn instruction_line(&self, fallback: &str) -> String {
        let pattern = if self.task_instruction.trim().is_empty() {
            fallback
        } else {
            &self.task_instruction
        };
        pattern
            .replace("{source_style}", &self.source_style)
            .replace("{target_style}", &self.target_style)
    }
}

/// Built-in style directions with shipped default exemplars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StylePreset {
    Formality,
    Detoxification,
    Modernization,
}

impl StylePreset {
    pub fn direction(self) -> StyleDirection {
        let (source, target) = match self {
            StylePreset::Formality => ("informal", "formal"),
            StylePreset::Detoxification => ("toxic", "neutral"),
            StylePreset::Modernization => ("Shakespearean", "modern English"),
        };
        StyleDirection {
            source_style: source.into(),
            target_style: target.into(),
            task_instruction: String::new(),
        }
    }

    /// Stand-in exemplars authored for this project; swap them via
    /// [`load_exemplars`] for real runs.
    pub fn exemplars(self) -> Vec<Exemplar> {
        let text = match self {
            StylePreset::Formality => include_str!("../data/exemplars/informal_to_formal.jsonl"),
            StylePreset::Detoxification => include_str!("../data/exemplars/toxic_to_neutral.jsonl"),
            StylePreset::Modernization => {
                include_str!("../data/exemplars/shakespearean_to_modern.jsonl")
            }
        };
        parse_exemplars(text).expect("shipped exemplars are valid")
    }
}

impl std::str::FromStr for StylePreset {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "formality" => Ok(StylePreset::Formality),
            "detoxification" | "detox" => Ok(StylePreset::Detoxification),
            "modernization" | "shakespeare" => Ok(StylePreset::Modernization),
            other => Err(PromptError::InvalidStyle(format!(
                "unknown preset `{other}`"
            ))),
        }
    }
}

/// One hand-written demonstration: source, rationale and target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub source: String,
    pub cot: String,
    pub target: String,
}

impl Exemplar {
    pub fn new(
        source: impl Into<String>,
        cot: impl Into<String>,
        target: impl Into<String>,
    ) -> Result<Self, PromptError> {
        let ex = Exemplar {
            source: source.into(),
            cot: cot.into(),
            target: target.into(),
        };
        ex.validate(0)?;
        Ok(ex)
    }

    fn validate(&self, line: usize) -> Result<(), PromptError> {
        for (field, value) in [
            ("source", &self.source),
            ("cot", &self.cot),
            ("target", &self.target),
        ] {
            if value.trim().is_empty() {
                return Err(PromptError::SchemaViolation {
                    line,
                    message: format!("field `{field}` is empty"),
                });
            }
        }
        if has_marker_line(&self.cot, ALL_MARKERS) {
            return Err(PromptError::MarkerInExemplar { line, field: "cot" });
        }
        if has_marker_line(&self.target, ALL_MARKERS) {
            return Err(PromptError::MarkerInExemplar {
                line,
                field: "target",
            });
        }
        Ok(())
    }
}

const ALL_MARKERS: &[&str] = &[
    TRANSFERRED_MARKER,
    TRANSFERRED_MARKER_ALT,
    EXPLANATION_MARKER,
];

/// True when some line of `text`, after trimming leading whitespace, starts
/// with one of `markers`.
pub fn has_marker_line(text: &str, markers: &[&str]) -> bool {
    text.lines().any(|line| {
        let line = line.trim_start();
        markers.iter().any(|m| line.starts_with(m))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    TargetBlind,
    TargetAware,
    StudentInput,
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TemplateKind::TargetBlind => "target_blind",
            TemplateKind::TargetAware => "target_aware",
            TemplateKind::StudentInput => "student_input",
        })
    }
}

/// On-disk template configuration (TOML or JSON).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateConfig {
    pub kind: TemplateKind,
    pub trigger_phrase: String,
    #[serde(default = "default_transferred_marker")]
    pub transferred_marker: String,
    #[serde(default = "default_explanation_marker")]
    pub explanation_marker: String,
    pub instruction: String,
}

fn default_transferred_marker() -> String {
    TRANSFERRED_MARKER.into()
}

fn default_explanation_marker() -> String {
    EXPLANATION_MARKER.into()
}

impl TemplateConfig {
    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = fs::read_to_string(path)
            .map_err(|_| PromptError::FileMissing(path.display().to_string()))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            serde_json::from_str(&text).map_err(|e| PromptError::InvalidTemplate(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| PromptError::InvalidTemplate(e.to_string()))
        }
    }
}

/// A validated prompt template together with its exemplars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    kind: TemplateKind,
    trigger_phrase: String,
    transferred_marker: String,
    explanation_marker: String,
    instruction: String,
    exemplars: Vec<Exemplar>,
}

impl PromptTemplate {
    pub fn from_config(
        config: TemplateConfig,
        exemplars: Vec<Exemplar>,
    ) -> Result<Self, PromptError> {
        let template = PromptTemplate {
            kind: config.kind,
            trigger_phrase: config.trigger_phrase,
            transferred_marker: config.transferred_marker,
            explanation_marker: config.explanation_marker,
            instruction: config.instruction,
            exemplars,
        };
        template.validate()?;
        Ok(template)
    }

    pub fn target_blind(exemplars: Vec<Exemplar>) -> Self {
        PromptTemplate {
            kind: TemplateKind::TargetBlind,
            trigger_phrase: DEFAULT_TRIGGER.into(),
            transferred_marker: TRANSFERRED_MARKER.into(),
            explanation_marker: EXPLANATION_MARKER.into(),
            instruction: DEFAULT_TB_INSTRUCTION.into(),
            exemplars,
        }
    }

    pub fn target_aware(exemplars: Vec<Exemplar>) -> Self {
        PromptTemplate {
            kind: TemplateKind::TargetAware,
            trigger_phrase: DEFAULT_EXPLAIN_REQUEST.into(),
            instruction: DEFAULT_TA_INSTRUCTION.into(),
            ..Self::target_blind(exemplars)
        }
    }

    /// Student-side template; exemplars are never rendered for this kind.
    pub fn student_input() -> Self {
        PromptTemplate {
            kind: TemplateKind::StudentInput,
            ..Self::target_blind(Vec::new())
        }
    }

    fn validate(&self) -> Result<(), PromptError> {
        if self.trigger_phrase.trim().is_empty() {
            return Err(PromptError::InvalidTemplate(
                "trigger phrase is empty".into(),
            ));
        }
        if self.transferred_marker.trim().is_empty() || self.explanation_marker.trim().is_empty() {
            return Err(PromptError::InvalidTemplate(
                "markers must be non-empty".into(),
            ));
        }
        if self.transferred_marker == self.explanation_marker {
            return Err(PromptError::InvalidTemplate(
                "markers must be distinct".into(),
            ));
        }
        if self.trigger_phrase.contains('\n') || self.instruction.contains('\n') {
            return Err(PromptError::InvalidTemplate(
                "trigger phrase and instruction must be single lines".into(),
            ));
        }
        let markers = [
            self.transferred_marker.as_str(),
            self.explanation_marker.as_str(),
        ];
        for (idx, ex) in self.exemplars.iter().enumerate() {
            if has_marker_line(&ex.cot, &markers) {
                return Err(PromptError::MarkerInExemplar {
                    line: idx + 1,
                    field: "cot",
                });
            }
            if has_marker_line(&ex.target, &markers) {
                return Err(PromptError::MarkerInExemplar {
                    line: idx + 1,
                    field: "target",
                });
            }
        }
        Ok(())
    }

    /// Keeps only the first `m` exemplars.
    pub fn with_exemplar_count(mut self, m: usize) -> Self {
        self.exemplars.truncate(m);
        self
    }

    pub fn with_exemplars(mut self, exemplars: Vec<Exemplar>) -> Self {
        self.exemplars = exemplars;
        self
    }

    pub fn kind(&self) -> TemplateKind {
        self.kind
    }

    pub fn trigger_phrase(&self) -> &str {
        &self.trigger_phrase
    }

    pub fn transferred_marker(&self) -> &str {
        &self.transferred_marker
    }

    pub fn explanation_marker(&self) -> &str {
        &self.explanation_marker
    }

    pub fn exemplars(&self) -> &[Exemplar] {
        &self.exemplars
    }

    fn expect_kind(&self, expected: TemplateKind) -> Result<(), PromptError> {
        if self.kind != expected {
            return Err(PromptError::TemplateKindMismatch {
                expected,
                found: self.kind,
            });
        }
        Ok(())
    }
}

/// Separator between consecutive blocks (each block already ends in `\n`).
pub const BLOCK_SEPARATOR: &str = "\n";

/// Model-side continuation of a target-blind block: rationale, then the
/// marker line carrying the transferred text.
pub fn tb_completion_body(cot: &str, target: &str, marker: &str) -> String {
    format!("{cot}\n{marker} {target}")
}

fn tb_query_block(source: &str, style: &StyleDirection, template: &PromptTemplate) -> String {
    format!(
        "{}\nSource: {}\n{}\n",
        style.instruction_line(&template.instruction),
        source,
        template.trigger_phrase
    )
}

fn ta_query_block(
    source: &str,
    target: &str,
    style: &StyleDirection,
    template: &PromptTemplate,
) -> String {
    format!(
        "{}\nSource: {}\nTarget: {}\n{}\n",
        style.instruction_line(&template.instruction),
        source,
        target,
        template.trigger_phrase
    )
}

/// Renders one complete exemplar block for the template's kind.
pub fn render_exemplar_block(
    ex: &Exemplar,
    style: &StyleDirection,
    template: &PromptTemplate,
) -> String {
    match template.kind {
        TemplateKind::TargetAware => format!(
            "{}{} {}\n",
            ta_query_block(&ex.source, &ex.target, style, template),
            template.explanation_marker,
            ex.cot
        ),
        TemplateKind::TargetBlind | TemplateKind::StudentInput => format!(
            "{}{}\n",
            tb_query_block(&ex.source, style, template),
            tb_completion_body(&ex.cot, &ex.target, &template.transferred_marker)
        ),
    }
}

fn join_blocks(mut blocks: Vec<String>, query: String) -> String {
    blocks.push(query);
    blocks.join(BLOCK_SEPARATOR)
}

/// Target-blind prompt: exemplar blocks followed by the query block.
pub fn render_tb(
    source: &str,
    style: &StyleDirection,
    template: &PromptTemplate,
) -> Result<String, PromptError> {
    template.expect_kind(TemplateKind::TargetBlind)?;
    if source.trim().is_empty() {
        return Err(PromptError::EmptySource);
    }
    let blocks = template
        .exemplars
        .iter()
        .map(|ex| render_exemplar_block(ex, style, template))
        .collect();
    Ok(join_blocks(blocks, tb_query_block(source, style, template)))
}

/// Target-aware prompt. The completion is expected to start with the
/// explanation marker.
pub fn render_ta(
    source: &str,
    gold_target: &str,
    style: &StyleDirection,
    template: &PromptTemplate,
) -> Result<String, PromptError> {
    template.expect_kind(TemplateKind::TargetAware)?;
    if source.trim().is_empty() {
        return Err(PromptError::EmptySource);
    }
    if gold_target.trim().is_empty() {
        return Err(PromptError::EmptyGoldTarget);
    }
    let blocks = template
        .exemplars
        .iter()
        .map(|ex| render_exemplar_block(ex, style, template))
        .collect();
    Ok(join_blocks(
        blocks,
        ta_query_block(source, gold_target, style, template),
    ))
}

/// Student model input: the target-blind query block with no exemplars.
///
/// Accepts target-blind or student-input templates; exemplars are ignored.
pub fn render_student_input(
    source: &str,
    style: &StyleDirection,
    template: &PromptTemplate,
) -> Result<String, PromptError> {
    if template.kind == TemplateKind::TargetAware {
        return Err(PromptError::TemplateKindMismatch {
            expected: TemplateKind::StudentInput,
            found: template.kind,
        });
    }
    if source.trim().is_empty() {
        return Err(PromptError::EmptySource);
    }
    Ok(tb_query_block(source, style, template))
}

/// Parses exemplar JSONL text, preserving order.
pub fn parse_exemplars(text: &str) -> Result<Vec<Exemplar>, PromptError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Line {
        source: String,
        cot: String,
        target: String,
    }

    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(raw).map_err(|e| PromptError::SchemaViolation {
            line,
            message: e.to_string(),
        })?;
        let ex = Exemplar {
            source: parsed.source.trim_end().to_owned(),
            cot: parsed.cot.trim_end().to_owned(),
            target: parsed.target.trim_end().to_owned(),
        };
        ex.validate(line)?;
        out.push(ex);
    }
    Ok(out)
}

pub fn load_exemplars(path: &Path) -> Result<Vec<Exemplar>, PromptError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => PromptError::FileMissing(path.display().to_string()),
        _ => PromptError::Io(e.to_string()),
    })?;
    parse_exemplars(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn formal() -> StyleDirection {
        StylePreset::Formality.direction()
    }

    fn tb3() -> PromptTemplate {
        PromptTemplate::target_blind(StylePreset::Formality.exemplars())
    }

    #[test]
    fn trigger_occurs_m_plus_one_times() {
        let prompt = render_tb("hi how r u", &formal(), &tb3()).unwrap();
        assert_eq!(
            prompt
                .matches("Let's break down the rewriting process step by step.")
                .count(),
            4
        );
    }

    #[test]
    fn zero_exemplars_is_single_query_block() {
        let t = tb3().with_exemplar_count(0);
        let prompt = render_tb("hi how r u", &formal(), &t).unwrap();
        assert_eq!(prompt.matches(DEFAULT_TRIGGER).count(), 1);
        assert_eq!(
            prompt,
            "Rewrite the following informal text into formal text.\nSource: hi how r u\n\
             Let's break down the rewriting process step by step.\n"
        );
    }

    #[test]
    fn length_is_sum_of_blocks_plus_separators() {
        // independent assembly of the four blocks
        let style = formal();
        let instr = "Rewrite the following informal text into formal text.";
        let mut blocks: Vec<String> = StylePreset::Formality
            .exemplars()
            .iter()
            .map(|e| {
                let mut b = String::new();
                b += instr;
                b += "\nSource: ";
                b += &e.source;
                b += "\n";
                b += DEFAULT_TRIGGER;
                b += "\n";
                b += &e.cot;
                b += "\n[Transferred]: ";
                b += &e.target;
                b += "\n";
                b
            })
            .collect();
        blocks.push(format!("{instr}\nSource: hi how r u\n{DEFAULT_TRIGGER}\n"));
        let expected_len: usize = blocks.iter().map(String::len).sum::<usize>() + 3;
        let prompt = render_tb("hi how r u", &style, &tb3()).unwrap();
        assert_eq!(prompt.len(), expected_len);
        assert_eq!(prompt, blocks.join("\n"));
    }

    #[test]
    fn tb_errors() {
        assert_eq!(
            render_tb("  ", &formal(), &tb3()),
            Err(PromptError::EmptySource)
        );
        let ta = PromptTemplate::target_aware(vec![]);
        assert!(matches!(
            render_tb("x", &formal(), &ta),
            Err(PromptError::TemplateKindMismatch { .. })
        ));
    }

    #[test]
    fn ta_prompt_has_explanation_blocks() {
        let ta = PromptTemplate::target_aware(StylePreset::Formality.exemplars());
        let prompt = render_ta("u r right", "You are right.", &formal(), &ta).unwrap();
        assert_eq!(prompt.matches("[EXPLANATION]:").count(), 3);
        let query = prompt.rsplit("\n\n").next().unwrap();
        assert!(query.contains("Source: u r right\n"));
        assert!(query.contains("Target: You are right.\n"));
        assert!(query.contains("formal"));
        assert!(query.ends_with(&format!("{DEFAULT_EXPLAIN_REQUEST}\n")));
    }

    #[test]
    fn ta_identity_pair_and_errors() {
        let ta = PromptTemplate::target_aware(vec![]);
        assert!(render_ta("same", "same", &formal(), &ta).is_ok());
        assert_eq!(
            render_ta("s", " ", &formal(), &ta),
            Err(PromptError::EmptyGoldTarget)
        );
        assert!(matches!(
            render_ta("s", "t", &formal(), &tb3()),
            Err(PromptError::TemplateKindMismatch { .. })
        ));
    }

    #[test]
    fn student_input_equals_zero_shot_tb() {
        let style = formal();
        let student = render_student_input("hi how r u", &style, &tb3()).unwrap();
        let zero = render_tb("hi how r u", &style, &tb3().with_exemplars(vec![])).unwrap();
        assert_eq!(student, zero);
        assert_eq!(student.matches(DEFAULT_TRIGGER).count(), 1);
        assert_eq!(
            render_student_input("hi", &style, &PromptTemplate::student_input()).unwrap(),
            student.replace("hi how r u", "hi")
        );
    }

    #[test]
    fn style_rejects_newlines() {
        assert!(StyleDirection::new("a\nb", "formal").is_err());
        assert!(StyleDirection::new("informal", "").is_err());
        let s = StyleDirection::with_instruction("x", "y", "Make this {target_style}.").unwrap();
        let t = PromptTemplate::target_blind(vec![]);
        assert!(render_tb("z", &s, &t)
            .unwrap()
            .starts_with("Make this y.\n"));
    }

    #[test]
    fn exemplar_loading() {
        let ok = "{\"source\":\"a\",\"cot\":\"b\",\"target\":\"c\"}\n\
                  {\"source\":\"d\",\"cot\":\"e\",\"target\":\"f\"}\n\
                  {\"source\":\"g\",\"cot\":\"h\",\"target\":\"i\"}\n";
        let exs = parse_exemplars(ok).unwrap();
        assert_eq!(
            exs.iter().map(|e| e.source.as_str()).collect::<Vec<_>>(),
            ["a", "d", "g"]
        );

        let missing = "{\"source\":\"a\",\"cot\":\"b\",\"target\":\"c\"}\n{\"source\":\"d\",\"target\":\"f\"}\n";
        assert!(matches!(
            parse_exemplars(missing),
            Err(PromptError::SchemaViolation { line: 2, .. })
        ));

        let marker = "{\"source\":\"a\",\"cot\":\"reason\\n[Transferred]:\",\"target\":\"c\"}\n";
        assert_eq!(
            parse_exemplars(marker),
            Err(PromptError::MarkerInExemplar {
                line: 1,
                field: "cot"
            })
        );
    }

    #[test]
    fn load_missing_file() {
        let err = load_exemplars(Path::new("/nonexistent/ex.jsonl")).unwrap_err();
        assert!(matches!(err, PromptError::FileMissing(_)));
    }

    #[test]
    fn template_config_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tb.toml");
        fs::write(
            &path,
            "kind = \"target_blind\"\ntrigger_phrase = \"Think.\"\ninstruction = \"Make it {target_style}.\"\n",
        )
        .unwrap();
        let cfg = TemplateConfig::load(&path).unwrap();
        let t = PromptTemplate::from_config(cfg, vec![]).unwrap();
        assert_eq!(t.transferred_marker(), TRANSFERRED_MARKER);
        let bad = TemplateConfig {
            kind: TemplateKind::TargetBlind,
            trigger_phrase: "x".into(),
            transferred_marker: "[M]:".into(),
            explanation_marker: "[M]:".into(),
            instruction: "i".into(),
        };
        assert!(PromptTemplate::from_config(bad, vec![]).is_err());
    }

    #[test]
    fn shipped_presets_load() {
        for p in [
            StylePreset::Formality,
            StylePreset::Detoxification,
            StylePreset::Modernization,
        ] {
            assert_eq!(p.exemplars().len(), DEFAULT_EXEMPLAR_COUNT);
        }
    }
}
