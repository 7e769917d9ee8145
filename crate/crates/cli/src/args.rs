use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use styledistill_core::pipeline::{BackendKind, PipelineConfig, PipelineMode, Stage};
use styledistill_core::prompt::StylePreset;

/// Rationale-annotated data generation, curation and BLEU evaluation for
/// text style transfer.
///
/// Every flag can also be set through the environment variable named in
/// its help text.
#[derive(Debug, Parser)]
#[command(name = "styledistill", version)]
pub struct Cli {
    /// Print results and errors as JSON.
    #[arg(long, global = true, env = "STYLEDISTILL_JSON")]
    pub json: bool,
    /// Log progress to stderr.
    #[arg(short, long, global = true, env = "STYLEDISTILL_VERBOSE")]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every stage into a run directory.
    Run {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Stop after this stage (plan, generate, parse, build, sample).
        #[arg(long, env = "STYLEDISTILL_STOP_AFTER", value_parser = parse_stage)]
        stop_after: Option<Stage>,
    },
    /// Write the request plan.
    Plan {
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Plan and collect completions.
    Generate {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Print request counts without calling the backend.
        #[arg(long)]
        dry_run: bool,
    },
    /// Run through parsing of completions.
    Parse {
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Run through training-set construction.
    Build {
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Draw a seeded subset of a training file.
    Sample {
        #[arg(long, env = "STYLEDISTILL_INPUT")]
        input: PathBuf,
        #[arg(long, env = "STYLEDISTILL_SIZE")]
        size: usize,
        #[arg(long, env = "STYLEDISTILL_SEED", default_value_t = 0)]
        seed: u64,
        /// Output file; `.tsv` selects the TSV format.
        #[arg(long, env = "STYLEDISTILL_OUT")]
        out: PathBuf,
    },
    /// Convert a training file between formats.
    Export {
        #[arg(long, env = "STYLEDISTILL_INPUT")]
        input: PathBuf,
        /// jsonl or tsv.
        #[arg(long, env = "STYLEDISTILL_EXPORT_FORMAT", default_value = "jsonl")]
        format: String,
        #[arg(long, env = "STYLEDISTILL_OUT")]
        out: PathBuf,
    },
    /// Corpus BLEU of a hypothesis file against a reference file.
    Bleu(BleuArgs),
    /// Rank hypotheses by sentence BLEU.
    Rank(RankArgs),
    /// Score, compare and select runs.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Serve the rating API and annotation UI.
    Serve {
        #[arg(long, env = "STYLEDISTILL_HOST", default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "STYLEDISTILL_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "STYLEDISTILL_DATA_DIR")]
        data_dir: PathBuf,
        /// Directory of the built annotation UI.
        #[arg(long, env = "STYLEDISTILL_STATIC_DIR")]
        static_dir: Option<PathBuf>,
    },
    /// Manage rating sessions offline.
    #[command(subcommand)]
    Session(SessionCommand),
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    /// 13a or ws.
    #[arg(long, env = "STYLEDISTILL_TOK", default_value = "13a")]
    pub tok: String,
    /// exp or none.
    #[arg(long, env = "STYLEDISTILL_SMOOTH", default_value = "exp")]
    pub smooth: String,
    /// Lowercase before tokenizing.
    #[arg(long, env = "STYLEDISTILL_LC")]
    pub lc: bool,
    #[arg(long, env = "STYLEDISTILL_ORDER", default_value_t = 4)]
    pub order: usize,
}

#[derive(Debug, Args)]
pub struct BleuArgs {
    #[arg(long, env = "STYLEDISTILL_HYP")]
    pub hyp: PathBuf,
    #[arg(long = "ref", env = "STYLEDISTILL_REF")]
    pub reference: PathBuf,
    /// Score a single sentence pair instead of a corpus.
    #[arg(long)]
    pub sentence: bool,
    #[command(flatten)]
    pub metric: MetricArgs,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long, env = "STYLEDISTILL_HYP")]
    pub hyp: PathBuf,
    #[arg(long = "ref", env = "STYLEDISTILL_REF")]
    pub reference: PathBuf,
    /// Show only the best N lines.
    #[arg(long)]
    pub top: Option<usize>,
    #[command(flatten)]
    pub metric: MetricArgs,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Score every run in a manifest and persist the reports.
    Run {
        #[arg(long, env = "STYLEDISTILL_MANIFEST")]
        manifest: PathBuf,
        /// Rescore even when a persisted report is fresh.
        #[arg(long)]
        force: bool,
    },
    /// Low-resource sweep table.
    Sweep {
        #[arg(long, env = "STYLEDISTILL_MANIFEST")]
        manifest: PathBuf,
        #[arg(long, env = "STYLEDISTILL_SIZES", value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long, default_value = "md")]
        format: String,
    },
    /// Rank hypotheses by sentence BLEU.
    Rank(RankArgs),
    /// Comparison table, best score in bold.
    Table {
        #[arg(long, env = "STYLEDISTILL_MANIFEST")]
        manifest: PathBuf,
        /// md or csv.
        #[arg(long, default_value = "md")]
        format: String,
    },
    /// Pick the candidate with the best validation BLEU.
    Select {
        #[arg(long, env = "STYLEDISTILL_MANIFEST")]
        manifest: PathBuf,
        #[arg(long, env = "STYLEDISTILL_VAL_REF")]
        val_ref: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum SessionCommand {
    /// Create a session from a JSONL file of items.
    Create {
        #[arg(long, env = "STYLEDISTILL_DATA_DIR")]
        data_dir: PathBuf,
        #[arg(long)]
        items: PathBuf,
        #[arg(long, env = "STYLEDISTILL_ANNOTATOR")]
        annotator: String,
        /// Draw this many items from the file instead of using all of them.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, env = "STYLEDISTILL_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Rating distribution over all sessions.
    Summary {
        #[arg(long, env = "STYLEDISTILL_DATA_DIR")]
        data_dir: PathBuf,
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        model: Option<String>,
    },
    /// Session ratings as CSV.
    Export {
        #[arg(long, env = "STYLEDISTILL_DATA_DIR")]
        data_dir: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// TOML pipeline config.
    #[arg(long, env = "STYLEDISTILL_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "STYLEDISTILL_RUN_DIR")]
    pub run_dir: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Flags that override config file values.
#[derive(Debug, Args)]
pub struct Overrides {
    /// tb or ta.
    #[arg(long, env = "STYLEDISTILL_MODE", value_parser = parse_mode)]
    pub mode: Option<PipelineMode>,
    #[arg(long, env = "STYLEDISTILL_Q")]
    pub q: Option<u32>,
    /// Training subset sizes, comma separated.
    #[arg(long = "size", env = "STYLEDISTILL_SIZES", value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long, env = "STYLEDISTILL_SEED")]
    pub seed: Option<u64>,
    /// default or strict.
    #[arg(long, env = "STYLEDISTILL_FILTER_POLICY")]
    pub filter_policy: Option<String>,
    /// jsonl or tsv.
    #[arg(long, env = "STYLEDISTILL_EXPORT_FORMAT")]
    pub export_format: Option<String>,
    /// formality, detoxification or modernization.
    #[arg(long, env = "STYLEDISTILL_STYLE", value_parser = parse_preset)]
    pub style: Option<StylePreset>,
    #[arg(long, env = "STYLEDISTILL_SOURCE_STYLE")]
    pub source_style: Option<String>,
    #[arg(long, env = "STYLEDISTILL_TARGET_STYLE")]
    pub target_style: Option<String>,
    #[arg(long, env = "STYLEDISTILL_EXEMPLARS")]
    pub exemplars: Option<PathBuf>,
    /// Source texts, one per line.
    #[arg(long, env = "STYLEDISTILL_SOURCES")]
    pub sources: Option<PathBuf>,
    /// Gold corpus (JSONL, or sources aligned with --gold-targets).
    #[arg(long, env = "STYLEDISTILL_GOLD")]
    pub gold: Option<PathBuf>,
    #[arg(long, env = "STYLEDISTILL_GOLD_TARGETS")]
    pub gold_targets: Option<PathBuf>,
    /// live, replay or stub.
    #[arg(long, env = "STYLEDISTILL_BACKEND", value_parser = parse_backend)]
    pub backend: Option<BackendKind>,
    #[arg(long, env = "STYLEDISTILL_FIXTURE")]
    pub fixture: Option<PathBuf>,
    /// Also write completions to this replay fixture.
    #[arg(long, env = "STYLEDISTILL_RECORD")]
    pub record: Option<PathBuf>,
    #[arg(long, env = "STYLEDISTILL_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, env = "STYLEDISTILL_MODEL_ID")]
    pub model_id: Option<String>,
    #[arg(long, env = "STYLEDISTILL_TEMPERATURE")]
    pub temperature: Option<f64>,
    #[arg(long, env = "STYLEDISTILL_MAX_OUTPUT_TOKENS")]
    pub max_output_tokens: Option<u32>,
    #[arg(long, env = "STYLEDISTILL_PARALLELISM")]
    pub parallelism: Option<usize>,
    #[arg(long, env = "STYLEDISTILL_ENDPOINT")]
    pub endpoint: Option<String>,
}

fn set<T>(slot: &mut T, value: &Option<T>)
where
    T: Clone,
{
    if let Some(v) = value {
        *slot = v.clone();
    }
}

fn set_opt<T: Clone>(slot: &mut Option<T>, value: &Option<T>) {
    if value.is_some() {
        slot.clone_from(value);
    }
}

impl Overrides {
    pub fn apply(&self, c: &mut PipelineConfig) {
        set(&mut c.mode, &self.mode);
        set(&mut c.q, &self.q);
        if !self.sizes.is_empty() {
            c.sizes.clone_from(&self.sizes);
        }
        set(&mut c.seed, &self.seed);
        set(&mut c.filter_policy, &self.filter_policy);
        set(&mut c.export_format, &self.export_format);
        set_opt(&mut c.style.preset, &self.style);
        set_opt(&mut c.style.source_style, &self.source_style);
        set_opt(&mut c.style.target_style, &self.target_style);
        set_opt(&mut c.template.exemplars, &self.exemplars);
        set_opt(&mut c.data.sources, &self.sources);
        set_opt(&mut c.data.gold, &self.gold);
        set_opt(&mut c.data.gold_targets, &self.gold_targets);
        set(&mut c.backend.kind, &self.backend);
        set_opt(&mut c.backend.fixture, &self.fixture);
        set_opt(&mut c.backend.record, &self.record);
        set_opt(&mut c.backend.cache_dir, &self.cache_dir);
        set(&mut c.backend.model_id, &self.model_id);
        set(&mut c.backend.temperature, &self.temperature);
        set(&mut c.backend.max_output_tokens, &self.max_output_tokens);
        set(&mut c.backend.parallelism, &self.parallelism);
        set(&mut c.backend.http.endpoint, &self.endpoint);
    }
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    s.parse()
        .map_err(|e: styledistill_core::PipelineError| e.to_string())
}

fn parse_mode(s: &str) -> Result<PipelineMode, String> {
    s.parse()
        .map_err(|e: styledistill_core::PipelineError| e.to_string())
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse()
        .map_err(|e: styledistill_core::PipelineError| e.to_string())
}

fn parse_preset(s: &str) -> Result<StylePreset, String> {
    s.parse()
        .map_err(|e: styledistill_core::PromptError| e.to_string())
}
