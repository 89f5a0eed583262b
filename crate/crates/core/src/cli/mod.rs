//! Command-line entry point.
//!
//! Every subcommand reads its settings from one [`ExperimentConfig`], built
//! from defaults, then the `--config` file, then `--set key=value` pairs,
//! then the dedicated flags. Artifacts go under `--out`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{compute_stats, fleiss_kappa, load_annotations, load_manifest, ManifestEntry, ManifestError};
use crate::fusion::{load_checkpoint, save_checkpoint, FusionVariant};
use crate::harness::{
    self, corpus_dims, cross_validate, evaluate, parse_subsets, render_table, run_ablation_grid, synthetic,
    train_one, write_records, Classifier, ExperimentConfig, HarnessError, NetworkClassifier, Sample,
};
use crate::ingest::{
    cache_bundle, ingest_entry, load_cached, write_file_atomic, AutoSource, ColorKeyDetector, EncoderSet,
    IngestError, IngestOptions,
};
use crate::{rng, ModalitySet};

/// Exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Usage = 2,
    Config = 3,
    MissingInput = 4,
    Data = 5,
    Training = 6,
}

/// A failure with its class and a one-line message.
#[derive(Debug)]
pub struct Failure {
    pub code: ExitCode,
    pub message: String,
}

impl Failure {
    fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    fn class(&self) -> &'static str {
        match self.code {
            ExitCode::Ok => "ok",
            ExitCode::Usage => "usage",
            ExitCode::Config => "config",
            ExitCode::MissingInput => "input",
            ExitCode::Data => "data",
            ExitCode::Training => "training",
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = match e.root() {
            HarnessError::Config(_) => ExitCode::Config,
            HarnessError::Io(_) => ExitCode::MissingInput,
            HarnessError::Data(_) | HarnessError::Contract(_) | HarnessError::Folds(_) => ExitCode::Data,
            HarnessError::Fusion(crate::fusion::FusionError::Config(_)) => ExitCode::Data,
            _ => ExitCode::Training,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ManifestError> for Failure {
    fn from(e: ManifestError) -> Self {
        let code = match e {
            ManifestError::Io { .. } => ExitCode::MissingInput,
            _ => ExitCode::Data,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let code = match e {
            IngestError::Io { .. } => ExitCode::MissingInput,
            _ => ExitCode::Data,
        };
        Failure::new(code, e.to_string())
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(ExitCode::MissingInput, format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "multipcl", version, about = "Multimodal PCL video classification")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Modality subset such as V+T; for `grid`, a comma-separated list.
    #[arg(long, global = true)]
    pub subset: Option<String>,
    #[arg(long, global = true, value_name = "mhca|fc")]
    pub variant: Option<String>,
    /// Config override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check manifest invariants.
    Validate { manifest: Option<PathBuf> },
    /// Corpus statistics.
    Stats { manifest: Option<PathBuf> },
    /// Fleiss' kappa of an annotation CSV (item id, then one column per annotator).
    Kappa { annotations: PathBuf },
    /// Extract and cache features for every manifest entry.
    Ingest { manifest: Option<PathBuf> },
    /// Train on the whole corpus and save a checkpoint.
    Train,
    /// k-fold cross-validation of one configuration.
    Eval,
    /// Cross-validation over modality subsets and fusion variants.
    Grid,
    /// Score every corpus video with a saved checkpoint.
    Predict {
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
    },
}

impl Args {
    /// Defaults, then the config file, then `--set`, then dedicated flags.
    pub fn resolve_config(&self) -> Result<ExperimentConfig, Failure> {
        let base = match &self.config {
            Some(path) if !path.exists() => {
                return Err(Failure::new(ExitCode::MissingInput, format!("config file {} not found", path.display())))
            }
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        if let Some(jobs) = self.jobs {
            overrides.push(format!("jobs={jobs}"));
        }
        if !matches!(self.command, Command::Grid) {
            if let Some(subset) = &self.subset {
                overrides.push(format!("subset={subset}"));
            }
            if let Some(variant) = &self.variant {
                overrides.push(format!("variant={variant}"));
            }
        }
        Ok(base.with_overrides(&overrides)?)
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parse `args` (program name first) and run; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => ExitCode::Usage as i32,
            };
        }
    };
    let level = match args.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    match execute(&args) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("multipcl: {} error: {}", f.class(), f.message);
            f.code as i32
        }
    }
}

pub fn execute(args: &Args) -> Result<(), Failure> {
    let config = args.resolve_config()?;
    match &args.command {
        Command::Validate { manifest } => validate(&manifest_path(manifest, &config)?),
        Command::Stats { manifest } => stats(&manifest_path(manifest, &config)?, &args.out),
        Command::Kappa { annotations } => kappa(annotations, &args.out),
        Command::Ingest { manifest } => ingest(&manifest_path(manifest, &config)?, &config, &args.out),
        Command::Train => train(&config, &args.out),
        Command::Eval => eval(&config, &args.out),
        Command::Grid => grid(args, &config),
        Command::Predict { checkpoint } => {
            let path = checkpoint.clone().unwrap_or_else(|| args.out.join("model.pclm"));
            predict(&config, &path, &args.out)
        }
    }
}

fn manifest_path(given: &Option<PathBuf>, config: &ExperimentConfig) -> Result<PathBuf, Failure> {
    match given {
        Some(p) => Ok(p.clone()),
        None if config.corpus.is_empty() || config.corpus.starts_with("synthetic:") => Err(Failure::new(
            ExitCode::Config,
            "no manifest given (pass a path or set corpus in the config)",
        )),
        None => Ok(PathBuf::from(&config.corpus)),
    }
}

fn create_out(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    write_file_atomic(path, bytes).map_err(|e| io_failure(path, e))
}

fn to_json_line<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(value).expect("records serialize");
    bytes.push(b'\n');
    bytes
}

fn validate(path: &Path) -> Result<(), Failure> {
    let entries = load_manifest(path)?;
    let positives = entries.iter().filter(|e| e.label.is_positive()).count();
    let spans: usize = entries.iter().map(|e| e.spans.len()).sum();
    println!("{}: ok, {} entries ({positives} PCL), {spans} spans", path.display(), entries.len());
    Ok(())
}

fn stats(path: &Path, out: &Path) -> Result<(), Failure> {
    let entries = load_manifest(path)?;
    let stats = compute_stats(&entries).map_err(|e| Failure::new(ExitCode::Data, e.to_string()))?;
    create_out(out)?;
    write_output(&out.join("stats.json"), &to_json_line(&stats))?;
    println!("{stats}");
    Ok(())
}

#[derive(Serialize)]
struct KappaRecord {
    items: usize,
    annotators: usize,
    categories: Vec<String>,
    kappa: f64,
}

fn kappa(path: &Path, out: &Path) -> Result<(), Failure> {
    if !path.exists() {
        return Err(Failure::new(ExitCode::MissingInput, format!("{} not found", path.display())));
    }
    let matrix = load_annotations(path).map_err(|e| Failure::new(ExitCode::Data, e.to_string()))?;
    let kappa = fleiss_kappa(&matrix).map_err(|e| Failure::new(ExitCode::Data, e.to_string()))?;
    let record = KappaRecord {
        items: matrix.items(),
        annotators: matrix.annotators(),
        categories: matrix.category_names().to_vec(),
        kappa,
    };
    create_out(out)?;
    write_output(&out.join("kappa.json"), &to_json_line(&record))?;
    println!("kappa = {kappa:.4} ({} items, {} annotators)", record.items, record.annotators);
    Ok(())
}

/// File name of an entry's feature cache.
pub fn cache_file_name(id: &str) -> String {
    let safe: String =
        id.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' }).collect();
    format!("{safe}.pclf")
}

fn cache_dir(config: &ExperimentConfig, out: &Path) -> PathBuf {
    out.join(&config.cache_dir)
}

fn media_root(config: &ExperimentConfig, manifest: &Path) -> PathBuf {
    if config.media_root.is_empty() {
        manifest.parent().map(Path::to_path_buf).unwrap_or_default()
    } else {
        PathBuf::from(&config.media_root)
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| Failure::new(ExitCode::Config, e.to_string()))
}

/// Features for every entry, from the cache when present unless `refresh`.
fn manifest_samples(
    entries: &[ManifestEntry],
    config: &ExperimentConfig,
    manifest: &Path,
    out: &Path,
    refresh: bool,
) -> Result<Vec<Sample>, Failure> {
    let dir = cache_dir(config, out);
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let root = media_root(config, manifest);
    let encoders =
        EncoderSet::toy(config.video_dim, config.face_dim, config.text_dim, rng::derive_seed(config.seed, "encoders", 0));
    let options = IngestOptions {
        target_fps: config.target_fps,
        max_frames: config.max_frames,
        sample_rate: 16_000,
        modalities: ModalitySet::all(),
    };
    let source = AutoSource::default();
    let detector = ColorKeyDetector::default();
    let one = |entry: &ManifestEntry| -> Result<Sample, Failure> {
        let path = dir.join(cache_file_name(&entry.id));
        let bundle = if !refresh && path.exists() {
            load_cached(&path)?
        } else {
            let bundle = ingest_entry(entry, &root, &source, &detector, &encoders, None, &options)?;
            cache_bundle(&bundle, &path)?;
            bundle
        };
        Ok(Sample { id: entry.id.clone(), label: entry.label, bundle })
    };
    pool(config.jobs)?.install(|| entries.par_iter().map(one).collect())
}

/// The corpus named by `config.corpus`: a synthetic generator or a manifest
/// whose features are cached under `out`.
pub fn load_corpus(config: &ExperimentConfig, out: &Path) -> Result<Vec<Sample>, Failure> {
    let dims = synthetic::SyntheticDims {
        video: config.video_dim,
        face: config.face_dim,
        audio: 13,
        text: config.text_dim,
    };
    let corpus = match config.corpus.as_str() {
        "" => return Err(Failure::new(ExitCode::Config, "config has no corpus")),
        "synthetic:separable" => synthetic::separable(config.corpus_size, config.seed, dims, 0.5)?,
        "synthetic:agreement" => synthetic::agreement(config.corpus_size, config.seed, dims, 0.3)?.0,
        other if other.starts_with("synthetic:") => {
            return Err(Failure::new(ExitCode::Config, format!("unknown synthetic corpus {other:?}")))
        }
        path => {
            let manifest = Path::new(path);
            let entries = load_manifest(manifest)?;
            manifest_samples(&entries, config, manifest, out, false)?
        }
    };
    Ok(corpus)
}

fn ingest(manifest: &Path, config: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let entries = load_manifest(manifest)?;
    let samples = manifest_samples(&entries, config, manifest, out, true)?;
    println!("cached features for {} videos in {}", samples.len(), cache_dir(config, out).display());
    Ok(())
}

fn train(config: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let corpus = load_corpus(config, out)?;
    let dims = corpus_dims(&corpus)?;
    let mut model = NetworkClassifier::from_config(config, &dims, 0)?;
    let all: Vec<&Sample> = corpus.iter().collect();
    let trace = train_one(config, &all, &[], &mut model, 0)?;
    create_out(out)?;
    let mut lines = Vec::new();
    for record in &trace {
        lines.extend(to_json_line(record));
    }
    write_output(&out.join("trace.jsonl"), &lines)?;
    write_output(&out.join("config.toml"), config.to_toml_string().as_bytes())?;
    save_checkpoint(&model.into_model(), out.join("model.pclm"))
        .map_err(|e| Failure::new(ExitCode::MissingInput, e.to_string()))?;
    if let Some(last) = trace.last() {
        println!("epoch {}: loss {:.4}, training {}", last.epoch, last.loss, last.report.metrics.row());
    }
    Ok(())
}

fn write_report(rows: &[harness::CvReport], out: &Path, stem: &str) -> Result<(), Failure> {
    create_out(out)?;
    let mut records = Vec::new();
    write_records(&mut records, rows).expect("in-memory write");
    write_output(&out.join(format!("{stem}.jsonl")), &records)?;
    let table = render_table(rows);
    write_output(&out.join(format!("{stem}.txt")), table.as_bytes())?;
    print!("{table}");
    let _ = std::io::stdout().flush();
    Ok(())
}

fn eval(config: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let corpus = load_corpus(config, out)?;
    let report = cross_validate(config, &corpus)?;
    write_report(&[report], out, "eval")
}

fn grid(args: &Args, config: &ExperimentConfig) -> Result<(), Failure> {
    let subsets = match &args.subset {
        Some(list) => parse_subsets(list)?,
        None => harness::standard_subsets(),
    };
    let variants = match &args.variant {
        Some(v) => vec![v.parse::<FusionVariant>().map_err(|e| Failure::new(ExitCode::Config, e))?],
        None => vec![FusionVariant::Mhca, FusionVariant::Fc],
    };
    let corpus = load_corpus(config, &args.out)?;
    let rows = run_ablation_grid(&corpus, config, &subsets, &variants)?;
    write_report(&rows, &args.out, "grid")
}

#[derive(Serialize)]
struct Prediction<'a> {
    id: &'a str,
    label: u8,
    probability: f64,
}

fn predict(config: &ExperimentConfig, checkpoint: &Path, out: &Path) -> Result<(), Failure> {
    if !checkpoint.exists() {
        return Err(Failure::new(ExitCode::MissingInput, format!("checkpoint {} not found", checkpoint.display())));
    }
    let model = load_checkpoint(checkpoint, None).map_err(|e| Failure::new(ExitCode::Data, e.to_string()))?;
    let corpus = load_corpus(config, out)?;
    let classifier = NetworkClassifier::new(model, config.learning_rate, 0);
    let samples: Vec<&Sample> = corpus.iter().collect();
    let mut lines = Vec::new();
    for s in &samples {
        let probability = classifier.predict_proba(s)?;
        let label = u8::from(probability >= config.threshold);
        lines.extend(to_json_line(&Prediction { id: &s.id, label, probability }));
    }
    create_out(out)?;
    write_output(&out.join("predictions.jsonl"), &lines)?;
    let (report, _) = evaluate(&classifier, &samples, config.threshold)?;
    println!("{} videos scored; against corpus labels: {}", samples.len(), report.metrics.row());
    Ok(())
}
