//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use curio_core::dialogue::{build_dialogues, DialogueSettings, SamplesPerEntry, Templates};
use curio_core::evaluation::{evaluate, EvaluationReport};
use curio_core::{AbstentionConfig, CatalogueIndex, Decision, StopwordSet};

use crate::backend::{FixtureBackend, HttpBackend, HttpBackendConfig, ModelBackend};
use crate::error::{Error, Result};
use crate::io::{
    load_config, load_ground_truth, load_stopwords, load_templates, load_videos, parse_catalogue, read_json, read_text,
    write_jsonl, write_text,
};
use crate::pipeline::{run_batch, PromptSet};
use crate::report::{render, ReportFormat};
use crate::server::{serve, ApiState};
use crate::store::{now_secs, sha256_hex, RunManifest, RunStore};

/// Exit status when an evaluation finds a false positive.
pub const EXIT_FALSE_POSITIVE: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "curio", version, about = "Catalogue-grounded artwork attribution for gallery video")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the catalogue index and optionally write it as JSON.
    Index(IndexArgs),
    /// Run the pipeline over a video list and store the run.
    Run(RunArgs),
    /// Evaluate stored runs against ground truth.
    Eval(EvalArgs),
    /// Re-decide a stored run under another config, without backend calls.
    Replay(ReplayArgs),
    /// Synthesise training dialogues from a catalogue as JSON lines.
    ExportDialogues(ExportArgs),
    /// Serve the /v1 HTTP API over a data directory.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct CatalogueArgs {
    /// Catalogue JSON (array of records).
    #[arg(long)]
    pub catalogue: Option<PathBuf>,
    /// Stopword file, one per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[command(flatten)]
    pub catalogue: CatalogueArgs,
    /// Where to write the built index.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Fixture,
    Http,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Without a catalogue every video abstains.
    #[command(flatten)]
    pub catalogue: CatalogueArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fixture")]
    pub backend: BackendKind,
    /// Fixture transcript file for the fixture backend.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// HTTP backend settings (JSON); defaults target a local server.
    #[arg(long)]
    pub http_config: Option<PathBuf>,
    /// Directory of prompt templates overriding the defaults.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    /// Video list: text (one per line) or JSON.
    #[arg(long)]
    pub videos: PathBuf,
    /// Data directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Run id; generated when omitted.
    #[arg(long)]
    pub run: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Run id; repeat for one report row per run.
    #[arg(long = "run", required = true)]
    pub runs: Vec<String>,
    /// Row labels, in the order of --run; defaults to the run ids.
    #[arg(long = "label")]
    pub labels: Vec<String>,
    #[arg(long, default_value = "markdown")]
    pub format: ReportFormat,
    /// Also write the rendered report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub run: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub catalogue: CatalogueArgs,
    /// Question templates (JSON map slot -> paraphrases).
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = curio_core::dialogue::DEFAULT_P_ABS)]
    pub p_abs: f64,
    /// Average samples per entry.
    #[arg(long, default_value_t = 3.5)]
    pub per_entry: f64,
    /// Output JSON-lines file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Data directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Config file; loaded when present, rewritten on accepted updates.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub catalogue: CatalogueArgs,
    /// Ground truth, enabling verdicts in replay responses.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
}

/// Loads the catalogue (or an empty one) and returns the index plus the
/// exact catalogue text for the run store.
fn load_index(args: &CatalogueArgs) -> Result<(CatalogueIndex, String)> {
    let stopwords = match &args.stopwords {
        Some(p) => load_stopwords(p)?,
        None => StopwordSet::default(),
    };
    let Some(path) = &args.catalogue else {
        return Ok((CatalogueIndex::empty(stopwords), "[]\n".into()));
    };
    let text = read_text(path)?;
    let records = parse_catalogue(path, &text)?;
    let index = CatalogueIndex::build(&records, stopwords).map_err(|e| Error::parse(path, e))?;
    Ok((index, text))
}

fn config_or_default(path: Option<&Path>) -> Result<AbstentionConfig> {
    path.map_or_else(|| Ok(AbstentionConfig::default()), load_config)
}

fn cmd_index(args: IndexArgs) -> Result<u8> {
    if args.catalogue.catalogue.is_none() {
        return Err(Error::NotFound("--catalogue is required".into()));
    }
    let (index, _) = load_index(&args.catalogue)?;
    if let Some(out) = &args.out {
        crate::io::write_json(out, &index)?;
    }
    let groups = index.dedup_key.values().collect::<std::collections::BTreeSet<_>>().len();
    println!("{} entries, {} dedup groups, {} indexed tokens", index.len(), groups, index.idf.weights.len());
    Ok(0)
}

fn make_backend(args: &RunArgs) -> Result<Box<dyn ModelBackend>> {
    Ok(match args.backend {
        BackendKind::Fixture => {
            let path = args
                .fixtures
                .as_ref()
                .ok_or_else(|| Error::NotFound("--fixtures is required with --backend fixture".into()))?;
            Box::new(FixtureBackend::load(path)?)
        }
        BackendKind::Http => {
            let cfg: HttpBackendConfig = match &args.http_config {
                Some(p) => read_json(p)?,
                None => HttpBackendConfig::default(),
            };
            Box::new(HttpBackend::new(cfg)?)
        }
    })
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let cfg = config_or_default(args.config.as_deref())?;
    let (index, catalogue_text) = load_index(&args.catalogue)?;
    let videos = load_videos(&args.videos)?;
    let prompts = match &args.prompts {
        Some(dir) => PromptSet::load_dir(dir)?,
        None => PromptSet::default(),
    };
    let backend = make_backend(&args)?;
    let store = RunStore::new(&args.out);
    let started_at = now_secs();
    let run_id = args.run.clone().unwrap_or_else(|| {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.subsec_nanos());
        format!("run-{started_at}-{nanos:09}")
    });
    if store.exists(&run_id) {
        return Err(Error::parse(store.run_dir(&run_id)?, "run already exists; choose another --run id"));
    }

    let results = run_batch(&videos, backend.as_ref(), &index, &cfg, &prompts);
    let manifest = RunManifest {
        run_id: run_id.clone(),
        config: cfg,
        backend: backend.descriptor().clone(),
        catalogue_sha256: sha256_hex(catalogue_text.as_bytes()),
        catalogue_entries: index.len(),
        stopwords: index.stopwords.iter().map(String::from).collect(),
        videos: videos.iter().map(|v| v.video.clone()).collect(),
        started_at,
        finished_at: now_secs(),
    };
    store.save_run(&manifest, &catalogue_text, &results)?;

    let accepts = results.iter().filter(|r| r.decision.is_accept()).count();
    let failures = results.iter().filter(|r| !r.failed_stages.is_empty()).count();
    println!("run {run_id}: {} videos, {accepts} accepted, {failures} with failed stages", results.len());
    Ok(0)
}

fn cmd_eval(args: EvalArgs) -> Result<u8> {
    let gt = load_ground_truth(&args.gt)?;
    let store = RunStore::new(&args.out);
    let mut reports: Vec<EvaluationReport> = Vec::new();
    for (i, run) in args.runs.iter().enumerate() {
        let manifest = store.manifest(run)?;
        let index = store.index(run)?;
        let results = store.results(run)?;
        let label = args.labels.get(i).unwrap_or(run);
        reports.push(evaluate(label, &results, &gt, &index, &manifest.config)?);
    }
    let text = render(&reports, args.format);
    print!("{text}");
    if let Some(path) = &args.report {
        write_text(path, &text)?;
    }
    let fps: usize = reports.iter().map(|r| r.false_positives).sum();
    if fps > 0 {
        eprintln!("{fps} false positive(s)");
        return Ok(EXIT_FALSE_POSITIVE);
    }
    Ok(0)
}

fn cmd_replay(args: ReplayArgs) -> Result<u8> {
    let cfg = load_config(&args.config)?;
    let store = RunStore::new(&args.out);
    let decisions = store.replay(&args.run, &cfg)?;
    let rows: Vec<serde_json::Value> = decisions
        .iter()
        .map(|d| {
            serde_json::json!({
                "video": d.video,
                "decision": d.record.decision,
                "regime": d.record.regime,
                "matched_entry_id": d.record.matched_entry_id,
                "combined_score": d.record.combined_score,
                "margin": d.record.margin,
                "reasoning": d.record.reasoning,
            })
        })
        .collect();
    let out = serde_json::json!({
        "run_id": args.run,
        "videos": decisions.len(),
        "accepts": decisions.iter().filter(|d| d.record.decision == Decision::Accept).count(),
        "decisions": rows,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json value serialises"));
    Ok(0)
}

fn cmd_export(args: ExportArgs) -> Result<u8> {
    if args.catalogue.catalogue.is_none() {
        return Err(Error::NotFound("--catalogue is required".into()));
    }
    let (index, _) = load_index(&args.catalogue)?;
    let templates = match &args.templates {
        Some(p) => load_templates(p)?,
        None => Templates::default(),
    };
    let settings = DialogueSettings {
        per_entry: SamplesPerEntry::Average(args.per_entry),
        p_abs: args.p_abs,
        seed: args.seed,
        ..DialogueSettings::default()
    };
    let samples = build_dialogues(&index, &templates, &settings)?;
    let n = write_jsonl(&args.out, &samples)?;
    let abstentions = samples.iter().filter(|s| s.is_abstention).count();
    println!("{n} samples written to {} ({abstentions} abstention)", args.out.display());
    Ok(0)
}

fn cmd_serve(args: ServeArgs) -> Result<u8> {
    let cfg = match &args.config {
        Some(p) if p.exists() => load_config(p)?,
        _ => AbstentionConfig::default(),
    };
    let mut state = ApiState::new(RunStore::new(&args.out), cfg);
    if let Some(p) = args.config {
        state = state.with_config_path(p);
    }
    if args.catalogue.catalogue.is_some() {
        state = state.with_catalogue(load_index(&args.catalogue)?.0);
    }
    if let Some(gt) = &args.gt {
        state = state.with_ground_truth(load_ground_truth(gt)?);
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io(&args.out, e))?;
    runtime
        .block_on(serve(Arc::new(state), &args.addr))
        .map_err(|e| Error::io(&args.out, e))?;
    Ok(0)
}

pub fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Replay(a) => cmd_replay(a),
        Command::ExportDialogues(a) => cmd_export(a),
        Command::Serve(a) => cmd_serve(a),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
