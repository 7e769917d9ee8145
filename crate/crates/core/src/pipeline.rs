//! End-to-end run: plan, generate, parse, build, sample, export.
//!
//! Every stage writes its output into the run directory with an atomic
//! rename. Re-running into a directory that already holds
//! `completions.jsonl` for the same configuration reuses it instead of
//! calling the backend again; the cheap downstream stages are recomputed.
//!
//! Run directory layout:
//!
//! | file | content |
//! |---|---|
//! | `config.toml` | the resolved configuration |
//! | `plan.jsonl` | one request per line with its digest |
//! | `completions.jsonl` | raw completions in plan order |
//! | `records.jsonl` | parsed records |
//! | `drop_report.json` | filter outcome |
//! | `train_full.<ext>` | every kept example |
//! | `train_<n>.<ext>` | seeded subsets, one per configured size |
//! | `manifest.json` | digests of the inputs and of every file above |

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::{
    complete_batch, record_fixture, request_digest, BackendError, CachedBackend, CompletionBackend,
    GenerationParams, HttpTransport, HttpTransportConfig, LiveBackend, RawCompletion,
    ReplayBackend, RetryPolicy, StubBackend, DEFAULT_MAX_OUTPUT_TOKENS, DEFAULT_TEMPERATURE,
};
use crate::dataset::{
    build_ta, build_tb, expand_plan, export, load_gold, subsample, BuildOutput, DatasetError,
    ExportFormat, FilterPolicy, GoldCorpus,
};
use crate::io::{parse_jsonl, read_lines, sha256_hex, to_jsonl, write_atomic};
use crate::parser::{GenerationMode, GenerationRecord};
use crate::prompt::{
    load_exemplars, render_ta, render_tb, PromptError, PromptTemplate, StyleDirection, StylePreset,
    TemplateConfig, TemplateKind, DEFAULT_EXEMPLAR_COUNT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineMode {
    #[default]
    Tb,
    Ta,
}

impl PipelineMode {
    pub fn generation_mode(self) -> GenerationMode {
        match self {
            PipelineMode::Tb => GenerationMode::TargetBlind,
            PipelineMode::Ta => GenerationMode::TargetAware,
        }
    }
}

impl std::str::FromStr for PipelineMode {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tb" => Ok(PipelineMode::Tb),
            "ta" => Ok(PipelineMode::Ta),
            other => Err(PipelineError::Config(format!(
                "unknown mode `{other}` (expected tb or ta)"
            ))),
        }
    }
}

/// Style direction, either a preset, explicit labels, or a preset with
/// some labels overridden.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<StylePreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_style: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_style: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_instruction: Option<String>,
}

impl StyleConfig {
    pub fn resolve(&self) -> Result<StyleDirection, PromptError> {
        let base = self
            .preset
            .map(StylePreset::direction)
            .unwrap_or(StyleDirection {
                source_style: String::new(),
                target_style: String::new(),
                task_instruction: String::new(),
            });
        StyleDirection::with_instruction(
            self.source_style.clone().unwrap_or(base.source_style),
            self.target_style.clone().unwrap_or(base.target_style),
            self.task_instruction
                .clone()
                .unwrap_or(base.task_instruction),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplatePaths {
    /// Target-blind template file; the built-in one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tb: Option<PathBuf>,
    /// Target-aware template file; the built-in one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ta: Option<PathBuf>,
    /// Exemplar JSONL; the preset's exemplars when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exemplars: Option<PathBuf>,
    #[serde(default = "default_exemplar_count")]
    pub exemplar_count: usize,
}

fn default_exemplar_count() -> usize {
    DEFAULT_EXEMPLAR_COUNT
}

impl Default for TemplatePaths {
    fn default() -> Self {
        TemplatePaths {
            tb: None,
            ta: None,
            exemplars: None,
            exemplar_count: DEFAULT_EXEMPLAR_COUNT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    #[default]
    Replay,
    Stub,
}

impl std::str::FromStr for BackendKind {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(BackendKind::Live),
            "replay" => Ok(BackendKind::Replay),
            "stub" => Ok(BackendKind::Stub),
            other => Err(PipelineError::Config(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    #[serde(default)]
    pub kind: BackendKind,
    /// Replay fixture (required for `replay`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<PathBuf>,
    /// When set, completions are also written here as a replay fixture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<PathBuf>,
    /// On-disk completion cache in front of the backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_model_id")]
    pub model_id: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stub_template: Option<String>,
    #[serde(default)]
    pub http: HttpTransportConfig,
}

fn default_model_id() -> String {
    "teacher".into()
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

fn default_max_output_tokens() -> u32 {
    DEFAULT_MAX_OUTPUT_TOKENS
}

fn default_parallelism() -> usize {
    4
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::default(),
            fixture: None,
            record: None,
            cache_dir: None,
            model_id: default_model_id(),
            temperature: default_temperature(),
            max_output_tokens: default_max_output_tokens(),
            parallelism: default_parallelism(),
            stub_template: None,
            http: HttpTransportConfig::default(),
        }
    }
}

impl BackendConfig {
    pub fn params(&self) -> GenerationParams {
        GenerationParams {
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
            sample_index: 0,
            model_id: self.model_id.clone(),
        }
    }

    /// Instantiates the configured backend, wrapped in a cache if one is set.
    pub fn build(&self) -> Result<Box<dyn CompletionBackend>, BackendError> {
        let inner: Box<dyn CompletionBackend> = match self.kind {
            BackendKind::Replay => {
                let path = self.fixture.as_ref().ok_or_else(|| {
                    BackendError::InvalidFixture("replay backend needs a fixture path".into())
                })?;
                Box::new(ReplayBackend::from_path(path)?)
            }
            BackendKind::Stub => Box::new(match &self.stub_template {
                Some(t) => StubBackend::new(t.clone()),
                None => StubBackend::default(),
            }),
            BackendKind::Live => Box::new(LiveBackend::new(
                HttpTransport::new(self.http.clone())?,
                RetryPolicy::default(),
            )),
        };
        Ok(match &self.cache_dir {
            Some(dir) => Box::new(CachedBackend::new(inner, dir.clone())),
            None => inner,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    /// Source texts, one per line (target-blind mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<PathBuf>,
    /// Gold parallel corpus: JSONL `{source, target}`, or a source file
    /// aligned with `gold_targets`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_targets: Option<PathBuf>,
}

/// Everything a run needs. Serialized verbatim into the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub mode: PipelineMode,
    /// Samples drawn per source.
    #[serde(default = "default_q")]
    pub q: u32,
    /// Training subset sizes; each produces `train_<n>`.
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_policy")]
    pub filter_policy: String,
    #[serde(default = "default_export_format")]
    pub export_format: String,
    #[serde(default)]
    pub style: StyleConfig,
    #[serde(default)]
    pub template: TemplatePaths,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub data: DataPaths,
}

fn default_q() -> u32 {
    1
}

fn default_policy() -> String {
    "default".into()
}

fn default_export_format() -> String {
    "jsonl".into()
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: PipelineMode::default(),
            q: default_q(),
            sizes: Vec::new(),
            seed: 0,
            filter_policy: default_policy(),
            export_format: default_export_format(),
            style: StyleConfig::default(),
            template: TemplatePaths {
                exemplar_count: DEFAULT_EXEMPLAR_COUNT,
                ..Default::default()
            },
            backend: BackendConfig::default(),
            data: DataPaths::default(),
        }
    }
}

fn resolve(base: &Path, path: &mut Option<PathBuf>) {
    if let Some(p) = path {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML config. Relative paths are resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("pipeline config serializes to TOML")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.template.tb);
        resolve(base, &mut self.template.ta);
        resolve(base, &mut self.template.exemplars);
        resolve(base, &mut self.backend.fixture);
        resolve(base, &mut self.backend.record);
        resolve(base, &mut self.backend.cache_dir);
        resolve(base, &mut self.data.sources);
        resolve(base, &mut self.data.gold);
        resolve(base, &mut self.data.gold_targets);
    }

    pub fn policy(&self) -> Result<FilterPolicy, PipelineError> {
        self.filter_policy
            .parse()
            .map_err(|e: DatasetError| PipelineError::Config(e.to_string()))
    }

    pub fn format(&self) -> Result<ExportFormat, PipelineError> {
        self.export_format
            .parse()
            .map_err(|e: DatasetError| PipelineError::Config(e.to_string()))
    }

    /// Checks everything that can be checked without reading inputs.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let config = |m: &str| Err(PipelineError::Config(m.into()));
        if self.q == 0 {
            return config("q must be at least 1");
        }
        if self.sizes.contains(&0) {
            return config("sizes must be positive");
        }
        if self.backend.parallelism == 0 {
            return config("parallelism must be at least 1");
        }
        match self.mode {
            PipelineMode::Ta if self.data.gold.is_none() => {
                return config("target-aware mode needs a gold corpus (data.gold)");
            }
            PipelineMode::Tb if self.data.sources.is_none() && self.data.gold.is_none() => {
                return config("no input corpus (set data.sources or data.gold)");
            }
            _ => {}
        }
        if self.backend.kind == BackendKind::Replay && self.backend.fixture.is_none() {
            return config("replay backend needs backend.fixture");
        }
        self.style
            .resolve()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.backend
            .params()
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.policy()?;
        self.format()?;
        Ok(())
    }

    fn exemplars(&self) -> Result<Vec<crate::prompt::Exemplar>, PromptError> {
        match (&self.template.exemplars, self.style.preset) {
            (Some(path), _) => load_exemplars(path),
            (None, Some(preset)) => Ok(preset.exemplars()),
            (None, None) => Err(PromptError::InvalidTemplate(
                "no exemplars: set template.exemplars or style.preset".into(),
            )),
        }
    }

    /// Teacher-side template for the configured mode.
    pub fn teacher_template(&self) -> Result<PromptTemplate, PromptError> {
        let exemplars = self.exemplars()?;
        let (path, kind) = match self.mode {
            PipelineMode::Tb => (&self.template.tb, TemplateKind::TargetBlind),
            PipelineMode::Ta => (&self.template.ta, TemplateKind::TargetAware),
        };
        let template = match path {
            Some(p) => {
                let cfg = TemplateConfig::load(p)?;
                if cfg.kind != kind {
                    return Err(PromptError::TemplateKindMismatch {
                        expected: kind,
                        found: cfg.kind,
                    });
                }
                PromptTemplate::from_config(cfg, exemplars)?
            }
            None if kind == TemplateKind::TargetBlind => PromptTemplate::target_blind(exemplars),
            None => PromptTemplate::target_aware(exemplars),
        };
        Ok(template.with_exemplar_count(self.template.exemplar_count))
    }

    /// Template used to render student inputs: the target-blind query
    /// block, from `template.tb` when set.
    pub fn student_template(&self) -> Result<PromptTemplate, PromptError> {
        match &self.template.tb {
            Some(p) => PromptTemplate::from_config(TemplateConfig::load(p)?, Vec::new()),
            None => Ok(PromptTemplate::student_input()),
        }
    }
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Plan,
    Generate,
    Parse,
    Build,
    Sample,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Plan => "plan",
            Stage::Generate => "generate",
            Stage::Parse => "parse",
            Stage::Build => "build",
            Stage::Sample => "sample",
            Stage::Export => "export",
        })
    }
}

impl std::str::FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "config" => Stage::Config,
            "plan" => Stage::Plan,
            "generate" => Stage::Generate,
            "parse" => Stage::Parse,
            "build" => Stage::Build,
            "sample" => Stage::Sample,
            "export" => Stage::Export,
            other => return Err(PipelineError::Config(format!("unknown stage `{other}`"))),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for StageError {
    fn from(e: std::io::Error) -> Self {
        StageError::Io(e.to_string())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run directory {dir} holds a different configuration; use a fresh directory")]
    ConfigMismatch { dir: String },
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: StageError,
    },
}

fn at<E: Into<StageError>>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        source: e.into(),
    }
}

/// One line of `plan.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanLine {
    pub source_id: String,
    pub sample_index: u32,
    pub request_digest: String,
    pub prompt_sha: String,
}

/// One line of `completions.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionLine {
    pub source_id: String,
    pub sample_index: u32,
    #[serde(flatten)]
    pub completion: RawCompletion,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounts {
    pub sources: usize,
    pub requests: usize,
    pub records: usize,
    pub examples: usize,
}

/// `manifest.json`: digests of inputs and outputs, no timestamps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifestFile {
    pub inputs: BTreeMap<String, String>,
    pub files: BTreeMap<String, String>,
    pub counts: RunCounts,
}

/// What [`run_pipeline`] did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub run_dir: PathBuf,
    pub counts: RunCounts,
    /// True when generation was skipped because completions already existed.
    pub reused_completions: bool,
    pub completed: bool,
    pub files: Vec<String>,
}

struct Request {
    source_id: String,
    source: String,
    sample_index: u32,
    prompt: String,
    params: GenerationParams,
}

struct Inputs {
    sources: Vec<String>,
    gold: Option<GoldCorpus>,
    digests: BTreeMap<String, String>,
}

fn digest_file(path: &Path) -> Result<String, StageError> {
    Ok(sha256_hex(fs::read(path).map_err(|e| {
        StageError::Io(format!("{}: {e}", path.display()))
    })?))
}

fn load_inputs(config: &PipelineConfig) -> Result<Inputs, StageError> {
    let mut digests = BTreeMap::new();
    let gold = match &config.data.gold {
        Some(path) => {
            digests.insert("gold".into(), digest_file(path)?);
            if let Some(t) = &config.data.gold_targets {
                digests.insert("gold_targets".into(), digest_file(t)?);
            }
            Some(load_gold(path, config.data.gold_targets.as_deref())?)
        }
        None => None,
    };
    let sources = match (&config.data.sources, &gold) {
        (Some(path), _) if config.mode == PipelineMode::Tb => {
            digests.insert("sources".into(), digest_file(path)?);
            read_lines(path).map_err(|e| StageError::Io(format!("{}: {e}", path.display())))?
        }
        (_, Some(g)) => g.sources(),
        _ => Vec::new(),
    };
    if let Some(f) = &config.backend.fixture {
        if config.backend.kind == BackendKind::Replay {
            digests.insert("fixture".into(), digest_file(f)?);
        }
    }
    Ok(Inputs {
        sources,
        gold,
        digests,
    })
}

fn plan_requests(
    config: &PipelineConfig,
    inputs: &Inputs,
    template: &PromptTemplate,
    style: &StyleDirection,
) -> Result<Vec<Request>, StageError> {
    let plan = expand_plan(&inputs.sources, config.q, style.clone());
    let gold = inputs
        .gold
        .as_ref()
        .map(GoldCorpus::by_source_id)
        .unwrap_or_default();
    let base = config.backend.params();
    let mut out = Vec::with_capacity(plan.request_count());
    for req in plan.requests() {
        let prompt = match config.mode {
            PipelineMode::Tb => render_tb(&req.source, style, template)?,
            PipelineMode::Ta => {
                let target = gold
                    .get(&req.source_id)
                    .ok_or_else(|| DatasetError::MissingGoldTarget(req.source_id.clone()))?;
                render_ta(&req.source, target, style, template)?
            }
        };
        out.push(Request {
            source_id: req.source_id,
            source: req.source,
            sample_index: req.sample_index,
            prompt,
            params: base.clone().with_sample_index(req.sample_index),
        });
    }
    Ok(out)
}

fn put(
    files: &mut BTreeMap<String, String>,
    run_dir: &Path,
    name: &str,
    body: &[u8],
    stage: Stage,
) -> Result<(), PipelineError> {
    write_atomic(&run_dir.join(name), body).map_err(at(stage))?;
    files.insert(name.to_owned(), sha256_hex(body));
    Ok(())
}

fn jsonl<T: Serialize>(items: &[T]) -> Result<String, StageError> {
    to_jsonl(items).map_err(|e| StageError::Io(e.to_string()))
}

/// Completions from an earlier run, if present and matching the plan.
fn existing_completions(path: &Path, requests: &[Request]) -> Option<Vec<RawCompletion>> {
    let text = fs::read_to_string(path).ok()?;
    let lines: Vec<CompletionLine> = parse_jsonl(&text).ok()?;
    if lines.len() != requests.len() {
        return None;
    }
    let matches = lines.iter().zip(requests).all(|(l, r)| {
        l.source_id == r.source_id
            && l.sample_index == r.sample_index
            && l.completion.request_digest == request_digest(&r.prompt, &r.params)
    });
    matches.then(|| lines.into_iter().map(|l| l.completion).collect())
}

/// Source and request counts the configuration would produce, without
/// touching the backend or writing anything.
pub fn plan_counts(config: &PipelineConfig) -> Result<RunCounts, PipelineError> {
    config.validate()?;
    let style = config.style.resolve().map_err(at(Stage::Config))?;
    let template = config.teacher_template().map_err(at(Stage::Config))?;
    let inputs = load_inputs(config).map_err(at(Stage::Plan))?;
    let requests = plan_requests(config, &inputs, &template, &style).map_err(at(Stage::Plan))?;
    Ok(RunCounts {
        sources: requests.len() / config.q as usize,
        requests: requests.len(),
        ..Default::default()
    })
}

/// Runs the pipeline into `run_dir`, stopping after `stop_after` when set.
pub fn run_pipeline(
    config: &PipelineConfig,
    run_dir: &Path,
    stop_after: Option<Stage>,
) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    let style = config.style.resolve().map_err(at(Stage::Config))?;
    let template = config.teacher_template().map_err(at(Stage::Config))?;
    let student = config.student_template().map_err(at(Stage::Config))?;
    let policy = config.policy()?;
    let format = config.format()?;
    let done = |s: Stage| stop_after.is_some_and(|stop| stop <= s);

    fs::create_dir_all(run_dir).map_err(at(Stage::Config))?;
    let config_text = config.to_toml();
    let config_path = run_dir.join("config.toml");
    match fs::read_to_string(&config_path) {
        Ok(existing) if existing != config_text => {
            return Err(PipelineError::ConfigMismatch {
                dir: run_dir.display().to_string(),
            })
        }
        Ok(_) => {}
        Err(_) => write_atomic(&config_path, config_text.as_bytes()).map_err(at(Stage::Config))?,
    }
    let mut files: BTreeMap<String, String> = BTreeMap::new();
    files.insert("config.toml".into(), sha256_hex(&config_text));
    let mut counts = RunCounts::default();
    let summary = |files: &BTreeMap<String, String>,
                   counts: RunCounts,
                   reused: bool,
                   completed: bool| RunSummary {
        run_dir: run_dir.to_owned(),
        counts,
        reused_completions: reused,
        completed,
        files: files.keys().cloned().collect(),
    };

    // plan
    let inputs = load_inputs(config).map_err(at(Stage::Plan))?;
    let requests = plan_requests(config, &inputs, &template, &style).map_err(at(Stage::Plan))?;
    if requests.is_empty() {
        return Err(PipelineError::Stage {
            stage: Stage::Plan,
            source: StageError::Io("input corpus has no non-blank sources".into()),
        });
    }
    counts.sources = requests.len() / config.q as usize;
    counts.requests = requests.len();
    let plan_lines: Vec<PlanLine> = requests
        .iter()
        .map(|r| PlanLine {
            source_id: r.source_id.clone(),
            sample_index: r.sample_index,
            request_digest: request_digest(&r.prompt, &r.params),
            prompt_sha: sha256_hex(&r.prompt),
        })
        .collect();
    put(
        &mut files,
        run_dir,
        "plan.jsonl",
        jsonl(&plan_lines).map_err(at(Stage::Plan))?.as_bytes(),
        Stage::Plan,
    )?;
    if done(Stage::Plan) {
        return Ok(summary(&files, counts, false, false));
    }

    // generate
    let completions_path = run_dir.join("completions.jsonl");
    let (completions, reused) = match existing_completions(&completions_path, &requests) {
        Some(c) => {
            tracing::info!("reusing {} existing completions", c.len());
            (c, true)
        }
        None => {
            let backend = config.backend.build().map_err(at(Stage::Generate))?;
            let batch: Vec<(String, GenerationParams)> = requests
                .iter()
                .map(|r| (r.prompt.clone(), r.params.clone()))
                .collect();
            let out = complete_batch(&*backend, &batch, config.backend.parallelism)
                .map_err(at(Stage::Generate))?;
            if let Some(path) = &config.backend.record {
                record_fixture(&batch, &out, path).map_err(at(Stage::Generate))?;
            }
            (out, false)
        }
    };
    let completion_lines: Vec<CompletionLine> = requests
        .iter()
        .zip(&completions)
        .map(|(r, c)| CompletionLine {
            source_id: r.source_id.clone(),
            sample_index: r.sample_index,
            completion: c.clone(),
        })
        .collect();
    put(
        &mut files,
        run_dir,
        "completions.jsonl",
        jsonl(&completion_lines)
            .map_err(at(Stage::Generate))?
            .as_bytes(),
        Stage::Generate,
    )?;
    if done(Stage::Generate) {
        return Ok(summary(&files, counts, reused, false));
    }

    // parse
    let mode = config.mode.generation_mode();
    let records: Vec<GenerationRecord> = requests
        .iter()
        .zip(completions)
        .map(|(r, c)| {
            GenerationRecord::from_completion(
                &r.source_id,
                &r.source,
                style.clone(),
                mode,
                c,
                r.sample_index,
            )
        })
        .collect();
    counts.records = records.len();
    let record_lines: Vec<_> = records.iter().map(GenerationRecord::to_line).collect();
    put(
        &mut files,
        run_dir,
        "records.jsonl",
        jsonl(&record_lines).map_err(at(Stage::Parse))?.as_bytes(),
        Stage::Parse,
    )?;
    if done(Stage::Parse) {
        return Ok(summary(&files, counts, reused, false));
    }

    // build
    let built: Result<BuildOutput, DatasetError> = match config.mode {
        PipelineMode::Tb => build_tb(&records, &policy, &student),
        PipelineMode::Ta => {
            let gold = inputs
                .gold
                .as_ref()
                .map(GoldCorpus::by_source_id)
                .unwrap_or_default();
            build_ta(&records, &gold, &policy, &student)
        }
    };
    let built = match built {
        Ok(b) => b,
        Err(DatasetError::AllRecordsFiltered(report)) => {
            let body = serde_json::to_vec_pretty(&report).expect("drop report serializes");
            put(&mut files, run_dir, "drop_report.json", &body, Stage::Build)?;
            return Err(PipelineError::Stage {
                stage: Stage::Build,
                source: DatasetError::AllRecordsFiltered(report).into(),
            });
        }
        Err(e) => return Err(at(Stage::Build)(e)),
    };
    counts.examples = built.examples.len();
    let report = serde_json::to_vec_pretty(&built.report).expect("drop report serializes");
    put(
        &mut files,
        run_dir,
        "drop_report.json",
        &report,
        Stage::Build,
    )?;
    if done(Stage::Build) {
        return Ok(summary(&files, counts, reused, false));
    }

    // sample
    let mut subsets = Vec::with_capacity(config.sizes.len());
    for &n in &config.sizes {
        subsets.push((
            n,
            subsample(&built.examples, n, config.seed).map_err(at(Stage::Sample))?,
        ));
    }
    if done(Stage::Sample) {
        return Ok(summary(&files, counts, reused, false));
    }

    // export
    let ext = match format {
        ExportFormat::JsonlPairs => "jsonl",
        ExportFormat::TsvPairs { .. } => "tsv",
    };
    let mut outputs = vec![(format!("train_full.{ext}"), built.examples)];
    outputs.extend(
        subsets
            .into_iter()
            .map(|(n, ex)| (format!("train_{n}.{ext}"), ex)),
    );
    for (name, examples) in &outputs {
        let path = run_dir.join(name);
        export(examples, &path, format).map_err(at(Stage::Export))?;
        files.insert(name.clone(), digest_file(&path).map_err(at(Stage::Export))?);
    }

    let manifest = RunManifestFile {
        inputs: inputs.digests,
        files: files.clone(),
        counts: counts.clone(),
    };
    let body = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&run_dir.join("manifest.json"), &body).map_err(at(Stage::Export))?;
    files.insert("manifest.json".into(), sha256_hex(&body));
    Ok(summary(&files, counts, reused, true))
}
