//! `tiam` command line.
//!
//! Exit codes: 0 success, 1 validation failure, 2 I/O failure. Verbosity
//! comes from `TIAM_LOG` (default `warn`).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::analytics::{build_report, pair_tiam, per_seed_tiam, select_seeds, write_report};
use crate::color::ReferencePalette;
use crate::config::{ConfigOverlay, RunConfig};
use crate::embedding::{classical_mds, correlate, DissimilarityMatrix, Embedding2D};
use crate::error::{Error, Result};
use crate::ingest::{validate_results, ResultsFile};
use crate::io_util;
use crate::prompt::{PromptDataset, Template};
use crate::scoring::{score_corpus, Coverage, Outcome, Thresholds};

#[derive(Debug, Parser)]
#[command(name = "tiam", version, about = "Score text-to-image alignment from detector output")]
struct Cli {
    /// TOML file with run settings. Flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expand a template into a prompt dataset.
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        /// Output file (default: <output-dir>/dataset.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a dataset and/or a results file against their schemas.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Filter, deduplicate and score a results file.
    Score {
        #[command(flatten)]
        common: CommonArgs,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Record binding verdicts for every colored detection.
        #[arg(long)]
        audit: bool,
    },
    /// Aggregate scored outcomes into report tables.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        model_name: Option<String>,
    },
    /// Embed the object-pair dissimilarities of a two-object run in 2D.
    Mds {
        #[command(flatten)]
        common: CommonArgs,
        /// Embed this square CSV matrix instead of the outcomes.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// External distance matrix (CSV) to correlate against.
        #[arg(long)]
        external: Option<PathBuf>,
    },
    /// Write the k best and k worst seeds.
    Seeds {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(short, long)]
        k: usize,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Template JSON
    #[arg(long)]
    template: Option<PathBuf>,
    /// Prompt dataset JSON written by `generate`
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Detector results JSON
    #[arg(long)]
    results: Option<PathBuf>,
    /// Outcome stream written by `score` (default: <output-dir>/outcomes.jsonl).
    #[arg(long)]
    outcomes: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Drop detections below this confidence [default: 0.25]
    #[arg(long)]
    confidence_threshold: Option<f64>,
    /// Remove cross-label mask pairs at or above this IoU [default: 0.95]
    #[arg(long)]
    dedup_iou: Option<f64>,
    /// Minimum share of mask pixels in the requested color [default: 0.40]
    #[arg(long)]
    binding_threshold: Option<f64>,
    /// Warn about prompts with fewer images [default: 32]
    #[arg(long)]
    min_images_per_prompt: Option<usize>,
    /// Reference color palette JSON (default: built in)
    #[arg(long)]
    palette: Option<PathBuf>,
}

impl CommonArgs {
    fn overlay(&self) -> ConfigOverlay {
        ConfigOverlay {
            template_path: self.template.clone(),
            dataset_path: self.dataset.clone(),
            results_path: self.results.clone(),
            outcomes_path: self.outcomes.clone(),
            output_dir: self.output_dir.clone(),
            confidence_threshold: self.confidence_threshold,
            dedup_iou: self.dedup_iou,
            binding_threshold: self.binding_threshold,
            min_images_per_prompt: self.min_images_per_prompt,
            palette_path: self.palette.clone(),
        }
    }
}

/// Written next to the outcome stream by `score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub model_name: String,
    pub dataset_ref: String,
    pub thresholds: Thresholds,
    pub coverage: Coverage,
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("TIAM_LOG", "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let file = cli.config.as_deref().map(ConfigOverlay::from_file).transpose()?;
    let resolve = |c: &CommonArgs| RunConfig::resolve(file.as_ref(), &c.overlay());
    match &cli.command {
        Command::Generate { common, out } => cmd_generate(&resolve(common)?, out.as_deref()),
        Command::Validate { common } => cmd_validate(&resolve(common)?),
        Command::Score { common, threads, audit } => cmd_score(&resolve(common)?, *threads, *audit),
        Command::Report { common, model_name } => cmd_report(&resolve(common)?, model_name.as_deref()),
        Command::Mds { common, matrix, external } => cmd_mds(&resolve(common)?, matrix.as_deref(), external.as_deref()),
        Command::Seeds { common, k } => cmd_seeds(&resolve(common)?, *k),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn load_dataset(c: &RunConfig) -> Result<PromptDataset> {
    match (&c.dataset_path, &c.template_path) {
        (Some(d), _) => PromptDataset::load(d),
        (None, Some(t)) => PromptDataset::generate(&Template::load(t)?),
        (None, None) => Err(Error::Config("one of --dataset or --template is required".into())),
    }
}

fn load_palette(c: &RunConfig) -> Result<ReferencePalette> {
    match &c.palette_path {
        Some(p) => ReferencePalette::load(p),
        None => Ok(ReferencePalette::standard()),
    }
}

fn outcomes_path(c: &RunConfig) -> PathBuf {
    c.outcomes_path.clone().unwrap_or_else(|| c.output_dir.join("outcomes.jsonl"))
}

pub fn cmd_generate(c: &RunConfig, out: Option<&Path>) -> Result<i32> {
    let t = c
        .template_path
        .as_ref()
        .ok_or_else(|| Error::Config("--template is required".into()))?;
    let ds = PromptDataset::generate(&Template::load(t)?)?;
    let out = match out {
        Some(p) => p.to_path_buf(),
        None => {
            ensure_dir(&c.output_dir)?;
            c.output_dir.join("dataset.json")
        }
    };
    io_util::write_atomic(&out, ds.to_json()?.as_bytes())?;
    println!("{} prompts -> {}", ds.count, out.display());
    Ok(0)
}

pub fn cmd_validate(c: &RunConfig) -> Result<i32> {
    if c.dataset_path.is_none() && c.template_path.is_none() && c.results_path.is_none() {
        return Err(Error::Config("nothing to validate: pass --dataset, --template or --results".into()));
    }
    let dataset = if c.dataset_path.is_some() || c.template_path.is_some() {
        let ds = load_dataset(c)?;
        println!("dataset: {} prompts, ok", ds.count);
        Some(ds)
    } else {
        None
    };
    let Some(results) = &c.results_path else {
        return Ok(0);
    };
    let text = io_util::read_to_string(results)?;
    let file = match ResultsFile::from_json(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{}: {e}", results.display());
            return Ok(1);
        }
    };
    let errors = validate_results(&file, dataset.as_ref());
    for e in &errors {
        eprintln!("{}: {e}", results.display());
    }
    if errors.is_empty() {
        println!("results: {} records, ok", file.records.len());
        Ok(0)
    } else {
        println!("results: {} problems", errors.len());
        Ok(1)
    }
}

pub fn cmd_score(c: &RunConfig, threads: Option<usize>, audit: bool) -> Result<i32> {
    let dataset = load_dataset(c)?;
    let palette = load_palette(c)?;
    let results_path = c
        .results_path
        .as_ref()
        .ok_or_else(|| Error::Config("--results is required".into()))?;
    let file = ResultsFile::from_json(&io_util::read_to_string(results_path)?)?;
    let thresholds = c.thresholds(audit);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let (outcomes, coverage) =
        pool.install(|| score_corpus(&dataset, &file.records, &palette, &thresholds, c.min_images_per_prompt));

    for u in &coverage.under_sampled {
        warn!(
            "prompt {} has {} images, fewer than {}",
            u.prompt_id, u.images, c.min_images_per_prompt
        );
    }
    for r in &coverage.rejects {
        warn!("record {} ({}, seed {}) rejected: {}", r.record, r.prompt_id, r.seed, r.reason);
    }
    if !coverage.missing.is_empty() {
        warn!("{} (prompt, seed) combinations have no record", coverage.missing.len());
    }

    ensure_dir(&c.output_dir)?;
    let mut stream = String::new();
    for o in &outcomes {
        stream.push_str(&serde_json::to_string(o)?);
        stream.push('\n');
    }
    let out = outcomes_path(c);
    io_util::write_atomic(&out, stream.as_bytes())?;
    let summary = ScoreSummary {
        model_name: file.model_name.clone(),
        dataset_ref: file.dataset_ref.clone(),
        thresholds,
        coverage,
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    io_util::write_atomic(&c.output_dir.join("coverage.json"), json.as_bytes())?;
    info!("{} outcomes -> {}", outcomes.len(), out.display());
    println!(
        "{} records, {} outcomes, {} rejected",
        summary.coverage.records_in,
        summary.coverage.outcomes,
        summary.coverage.rejects.len()
    );
    Ok(0)
}

/// Read an outcome stream, one JSON object per line.
pub fn read_outcomes(path: &Path) -> Result<Vec<Outcome>> {
    let text = io_util::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::schema(Some(i), "outcome", e.to_string())))
        .collect()
}

fn model_name_for(c: &RunConfig, explicit: Option<&str>) -> String {
    if let Some(m) = explicit {
        return m.to_string();
    }
    let summary = outcomes_path(c).parent().map(|d| d.join("coverage.json"));
    summary
        .and_then(|p| std::fs::read_to_string(p).ok())
        .and_then(|t| serde_json::from_str::<ScoreSummary>(&t).ok())
        .map_or_else(|| "unknown".to_string(), |s| s.model_name)
}

pub fn cmd_report(c: &RunConfig, model_name: Option<&str>) -> Result<i32> {
    let dataset = load_dataset(c)?;
    let outcomes = read_outcomes(&outcomes_path(c))?;
    let report = build_report(&outcomes, &dataset, &model_name_for(c, model_name))?;
    ensure_dir(&c.output_dir)?;
    let written = write_report(&report, &c.output_dir)?;
    println!("TIAM {} over {} images; {} files written", report.global_tiam, report.n_outcomes, written.len());
    Ok(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MdsSummary {
    embedding: Embedding2D,
    /// Pearson correlation against the external matrix, when one was given.
    correlation: Option<f64>,
}

pub fn cmd_mds(c: &RunConfig, matrix: Option<&Path>, external: Option<&Path>) -> Result<i32> {
    let d = match matrix {
        Some(p) => DissimilarityMatrix::from_csv(p)?,
        None => {
            let dataset = load_dataset(c)?;
            let outcomes = read_outcomes(&outcomes_path(c))?;
            if outcomes.is_empty() {
                return Err(Error::EmptyInput("no outcomes"));
            }
            DissimilarityMatrix::from_pair_scores(&pair_tiam(&outcomes, &dataset)?)?
        }
    };
    let emb = classical_mds(&d)?;
    if emb.deficient {
        warn!("fewer than two positive eigenvalues; missing axes are zero");
    }
    let correlation = external
        .map(|p| DissimilarityMatrix::from_csv(p).and_then(|x| correlate(&d, &x)))
        .transpose()?;

    ensure_dir(&c.output_dir)?;
    let mut m = String::from("label");
    for l in &d.labels {
        m.push(',');
        m.push_str(l);
    }
    m.push('\n');
    for (l, row) in d.labels.iter().zip(&d.values) {
        m.push_str(l);
        for v in row {
            m.push_str(&format!(",{v}"));
        }
        m.push('\n');
    }
    io_util::write_atomic(&c.output_dir.join("dissimilarity.csv"), m.as_bytes())?;
    io_util::write_atomic(&c.output_dir.join("embedding.csv"), emb.to_csv().as_bytes())?;
    let summary = MdsSummary { embedding: emb, correlation };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    io_util::write_atomic(&c.output_dir.join("embedding.json"), json.as_bytes())?;
    println!("stress {}", summary.embedding.stress);
    if let Some(r) = correlation {
        println!("correlation {r}");
    }
    Ok(0)
}

pub fn cmd_seeds(c: &RunConfig, k: usize) -> Result<i32> {
    let outcomes = read_outcomes(&outcomes_path(c))?;
    let profiles = per_seed_tiam(&outcomes)?;
    let sel = select_seeds(&profiles, k)?;
    ensure_dir(&c.output_dir)?;
    let lines = |v: &[u64]| v.iter().map(|s| format!("{s}\n")).collect::<String>();
    io_util::write_atomic(&c.output_dir.join("best_seeds.txt"), lines(&sel.best).as_bytes())?;
    io_util::write_atomic(&c.output_dir.join("worst_seeds.txt"), lines(&sel.worst).as_bytes())?;
    println!("best {:?}, worst {:?}", sel.best, sel.worst);
    Ok(0)
}
