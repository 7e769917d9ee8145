mod args;
mod errors;

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Parser;
use styledistill_core::bleu::{corpus_bleu, sentence_bleu, BleuConfig};
use styledistill_core::dataset::{export, read_examples, subsample, ExportFormat};
use styledistill_core::harness::{
    compare_table, evaluate_cached, rank_outputs, select_best, sweep, RunManifest, TableFormat,
};
use styledistill_core::human_eval::{EvalItem, RubricDefinition, SessionStore, SummaryFilter};
use styledistill_core::io::{parse_jsonl, read_lines, sha256_hex};
use styledistill_core::pipeline::{plan_counts, run_pipeline, PipelineConfig, Stage};

use args::{BleuArgs, Cli, Command, EvalCommand, PipelineArgs, RankArgs, SessionCommand};

fn main() {
    let cli = Cli::parse();
    let filter = if cli.verbose { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("STYLEDISTILL_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(filter)),
        )
        .with_writer(std::io::stderr)
        .init();
    let json = cli.json;
    if let Err(err) = dispatch(cli) {
        std::process::exit(errors::report(&err, json));
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let json = cli.json;
    match cli.command {
        Command::Run {
            pipeline,
            stop_after,
        } => pipeline_stage(&pipeline, stop_after, json),
        Command::Plan { pipeline } => pipeline_stage(&pipeline, Some(Stage::Plan), json),
        Command::Generate { pipeline, dry_run } => {
            if dry_run {
                let config = pipeline.load()?;
                let counts = plan_counts(&config)?;
                if json {
                    println!("{}", serde_json::to_string(&counts)?);
                } else {
                    println!(
                        "{} sources x q={} = {} requests ({} backend calls)",
                        counts.sources, config.q, counts.requests, counts.requests
                    );
                }
                Ok(())
            } else {
                pipeline_stage(&pipeline, Some(Stage::Generate), json)
            }
        }
        Command::Parse { pipeline } => pipeline_stage(&pipeline, Some(Stage::Parse), json),
        Command::Build { pipeline } => pipeline_stage(&pipeline, Some(Stage::Build), json),
        Command::Sample {
            input,
            size,
            seed,
            out,
        } => {
            let examples = read_examples(&input)?;
            let subset = subsample(&examples, size, seed)?;
            write_examples(&subset, &out)?;
            println!("{} {}", sha256_hex(fs::read(&out)?), out.display());
            Ok(())
        }
        Command::Export { input, format, out } => {
            let examples = read_examples(&input)?;
            let format: ExportFormat = format.parse()?;
            export(&examples, &out, format)?;
            println!("{} {}", sha256_hex(fs::read(&out)?), out.display());
            Ok(())
        }
        Command::Bleu(args) => bleu(&args, json),
        Command::Rank(args) => rank(&args, json),
        Command::Eval(cmd) => eval(cmd, json),
        Command::Serve {
            host,
            port,
            data_dir,
            static_dir,
        } => {
            let addr = format!("{host}:{port}")
                .parse()
                .with_context(|| format!("invalid listen address {host}:{port}"))?;
            let options = styledistill_service::ServeOptions {
                addr,
                data_dir,
                static_dir,
                rubric: RubricDefinition::builtin(),
            };
            tokio::runtime::Runtime::new()?.block_on(styledistill_service::serve(options))?;
            Ok(())
        }
        Command::Session(cmd) => session(cmd, json),
    }
}

fn write_examples(examples: &[styledistill_core::TrainingExample], out: &Path) -> Result<()> {
    let format = if out.extension().is_some_and(|e| e == "tsv") {
        ExportFormat::TsvPairs { escape: true }
    } else {
        ExportFormat::JsonlPairs
    };
    export(examples, out, format)?;
    Ok(())
}

fn pipeline_stage(args: &PipelineArgs, stop_after: Option<Stage>, json: bool) -> Result<()> {
    let config = args.load()?;
    let summary = run_pipeline(&config, &args.run_dir, stop_after)?;
    if json {
        println!(
            "{}",
            serde_json::json!({
                "run_dir": summary.run_dir,
                "completed": summary.completed,
                "reused_completions": summary.reused_completions,
                "counts": summary.counts,
                "files": summary.files,
            })
        );
    } else {
        let c = &summary.counts;
        println!(
            "{}: {} sources, {} requests, {} records, {} examples{}",
            summary.run_dir.display(),
            c.sources,
            c.requests,
            c.records,
            c.examples,
            if summary.reused_completions {
                " (completions reused)"
            } else {
                ""
            }
        );
        for f in &summary.files {
            println!("  {f}");
        }
    }
    Ok(())
}

fn read_pair(hyp: &Path, reference: &Path) -> Result<(Vec<String>, Vec<String>)> {
    let h = read_lines(hyp).with_context(|| format!("cannot read {}", hyp.display()))?;
    let r =
        read_lines(reference).with_context(|| format!("cannot read {}", reference.display()))?;
    Ok((h, r))
}

fn bleu(args: &BleuArgs, json: bool) -> Result<()> {
    let config = args.metric.config()?;
    let (hyps, refs) = read_pair(&args.hyp, &args.reference)?;
    let report = if args.sentence {
        if hyps.len() != 1 || refs.len() != 1 {
            bail!("--sentence expects exactly one line in each file");
        }
        sentence_bleu(&hyps[0], &refs[0], &config)?
    } else {
        corpus_bleu(&hyps, &refs, &config)?
    };
    if json {
        println!("{}", serde_json::to_string(&report)?);
    } else {
        println!("{:.2}", report.score);
        println!("{}", report.signature);
    }
    Ok(())
}

fn rank(args: &RankArgs, json: bool) -> Result<()> {
    let config = args.metric.config()?;
    let (hyps, refs) = read_pair(&args.hyp, &args.reference)?;
    let mut ranked = rank_outputs(&hyps, &refs, &config)?;
    if let Some(top) = args.top {
        ranked.truncate(top);
    }
    for (i, score) in ranked {
        if json {
            println!(
                "{}",
                serde_json::json!({"line": i + 1, "score": score, "hypothesis": hyps[i]})
            );
        } else {
            println!("{}\t{score:.2}\t{}", i + 1, hyps[i]);
        }
    }
    Ok(())
}

fn eval(cmd: EvalCommand, json: bool) -> Result<()> {
    match cmd {
        EvalCommand::Run { manifest, force } => {
            for m in RunManifest::load_all(&manifest)? {
                let (report, reused) = if force {
                    (styledistill_core::harness::evaluate_run(&m)?, false)
                } else {
                    evaluate_cached(&m)?
                };
                if json {
                    println!(
                        "{}",
                        serde_json::json!({"run_id": m.run_id, "reused": reused, "report": report})
                    );
                } else {
                    println!(
                        "{}\t{}\t{}\t{:.2}{}",
                        m.run_id,
                        m.method_label,
                        m.size,
                        report.score,
                        if reused { "\t(cached)" } else { "" }
                    );
                }
            }
            Ok(())
        }
        EvalCommand::Sweep {
            manifest,
            sizes,
            format,
        } => {
            let table = sweep(&RunManifest::load_all(&manifest)?, &sizes)?;
            if json {
                println!("{}", serde_json::to_string(&table)?);
            } else {
                print!("{}", table.render(parse_table_format(&format)?));
            }
            Ok(())
        }
        EvalCommand::Rank(args) => rank(&args, json),
        EvalCommand::Table { manifest, format } => {
            let mut reports = Vec::new();
            for m in RunManifest::load_all(&manifest)? {
                reports.push((m.method_label.clone(), evaluate_cached(&m)?.0));
            }
            print!("{}", compare_table(&reports, parse_table_format(&format)?)?);
            Ok(())
        }
        EvalCommand::Select { manifest, val_ref } => {
            let candidates = RunManifest::load_all(&manifest)?;
            let sel = select_best(&candidates, &val_ref)?;
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "best_index": sel.best_index,
                        "run_id": sel.best.run_id,
                        "scores": sel.scores,
                        "tied_with": sel.tied_with,
                    })
                );
            } else {
                for (c, s) in candidates.iter().zip(&sel.scores) {
                    let mark = if c.run_id == sel.best.run_id {
                        "*"
                    } else {
                        " "
                    };
                    println!("{mark} {}\t{s:.2}", c.run_id);
                }
            }
            Ok(())
        }
    }
}

fn parse_table_format(s: &str) -> Result<TableFormat> {
    s.parse()
        .map_err(|e: String| anyhow::anyhow!(errors::UsageError(e)))
}

fn session(cmd: SessionCommand, json: bool) -> Result<()> {
    match cmd {
        SessionCommand::Create {
            data_dir,
            items,
            annotator,
            size,
            seed,
        } => {
            let text = fs::read_to_string(&items)
                .with_context(|| format!("cannot read {}", items.display()))?;
            let pool: Vec<EvalItem> = parse_jsonl(&text)?;
            let store = SessionStore::open(data_dir, RubricDefinition::builtin())?;
            let id = match size {
                Some(n) => store.create_session_from_pool(&pool, &annotator, n, seed)?,
                None => store.create_session(pool, &annotator)?,
            };
            let progress = store.session(&id)?.progress();
            if json {
                println!(
                    "{}",
                    serde_json::json!({"session_id": id, "progress": progress})
                );
            } else {
                println!("{id}\t{} items", progress.total);
            }
            Ok(())
        }
        SessionCommand::Summary {
            data_dir,
            task,
            model,
        } => {
            let store = SessionStore::open(data_dir, RubricDefinition::builtin())?;
            let summary = store.summarize(&SummaryFilter { task, model })?;
            if json {
                println!("{}", serde_json::to_string(&summary)?);
            } else {
                let o = &summary.overall;
                println!(
                    "A={} B={} C={} D={} total={} acceptable={:.1}%",
                    o.a,
                    o.b,
                    o.c,
                    o.d,
                    o.total,
                    o.acceptable_rate * 100.0
                );
                for g in &summary.groups {
                    let d = &g.distribution;
                    println!(
                        "  {}/{}: A={} B={} C={} D={} acceptable={:.1}%",
                        g.model_label,
                        g.task_label,
                        d.a,
                        d.b,
                        d.c,
                        d.d,
                        d.acceptable_rate * 100.0
                    );
                }
            }
            Ok(())
        }
        SessionCommand::Export { data_dir, id, out } => {
            let store = SessionStore::open(data_dir, RubricDefinition::builtin())?;
            let csv = store.export_csv(&id)?;
            match out {
                Some(path) => styledistill_core::io::write_atomic(&path, csv.as_bytes())?,
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

impl PipelineArgs {
    /// The config file (or defaults) with command-line overrides applied.
    fn load(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        self.overrides.apply(&mut config);
        Ok(config)
    }
}

impl args::MetricArgs {
    fn config(&self) -> Result<BleuConfig> {
        Ok(BleuConfig {
            max_order: self.order,
            tokenizer: self
                .tok
                .parse()
                .map_err(|e: String| errors::UsageError(e))?,
            smoothing: self
                .smooth
                .parse()
                .map_err(|e: String| errors::UsageError(e))?,
            lowercase: self.lc,
        })
    }
}
