//! `noiseflood` command-line front-end.
//!
//! Exit codes: 0 success, 1 some rows failed, 2 configuration or input
//! error, 3 classifier failure.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use noiseflood::audio::FrequencyBand;
use noiseflood::classifier::{BandEnergyToyClassifier, ClassifierError, ClassifierHandle, ExternalClassifier, ExternalOptions};
use noiseflood::dataset::{write_scores, DatasetError, Manifest, ManifestRow, ScoreParams, ScoreTable};
use noiseflood::detection::{
    learn_band_thresholds, learn_threshold, band_scores, learn_vote_threshold, DetectionError, VotingModel,
};
use noiseflood::evaluation::{comparison_line, evaluate, merge_comparison, EvalError};
use noiseflood::flooding::{
    canonical_index, score_dataset, DatasetScores, FailureKind, FloodingConfig, FloodingError, ScoreVector, BAND_KEYS,
    CANONICAL_BANDS, DEFAULT_EPS_MAX, DEFAULT_STEP, NUM_BANDS,
};
use noiseflood::model::{sha256_hex, Detector, DetectorModel, ModelError, ModelFile, Provenance};
use noiseflood::synth::{generate_set, write_dataset, SynthError, SynthParams};
use noiseflood::trees::{
    decide, fit_adaboost, fit_forest, fit_gboost, fit_tree, ForestParams, GBoostParams, TrainSet, TreeError, TreeParams,
    DEFAULT_ADABOOST_STAGES, DEFAULT_MAX_DEPTH, DEFAULT_MIN_LEAF,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARTIAL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_CLASSIFIER: u8 = 3;

const TOOL: &str = concat!("noiseflood ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("classifier failure: {0}")]
    Classifier(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Classifier(_) => EXIT_CLASSIFIER,
        }
    }
}

fn config(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        config(e)
    }
}
impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        config(e)
    }
}
impl From<DetectionError> for CliError {
    fn from(e: DetectionError) -> Self {
        config(e)
    }
}
impl From<TreeError> for CliError {
    fn from(e: TreeError) -> Self {
        config(e)
    }
}
impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        config(e)
    }
}
impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        config(e)
    }
}
impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::InvalidConfig(m) => CliError::Config(m),
            other => CliError::Classifier(other.to_string()),
        }
    }
}
impl From<FloodingError> for CliError {
    fn from(e: FloodingError) -> Self {
        match e {
            FloodingError::Classifier(c) => c.into(),
            other => config(other),
        }
    }
}

/// How a classifier is obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassifierSpec {
    /// The built-in band-energy toy classifier.
    BandEnergy,
    /// An external process speaking the line protocol.
    Exec(Vec<String>),
}

impl FromStr for ClassifierSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "builtin:band-energy" {
            return Ok(Self::BandEnergy);
        }
        if let Some(cmd) = s.strip_prefix("exec:") {
            let argv = shlex::split(cmd).ok_or_else(|| format!("cannot parse command `{cmd}`"))?;
            if argv.is_empty() {
                return Err("empty exec command".into());
            }
            return Ok(Self::Exec(argv));
        }
        Err(format!("unknown classifier `{s}` (expected builtin:band-energy or exec:<command>)"))
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BandEnergy => f.write_str("builtin:band-energy"),
            Self::Exec(argv) => write!(f, "exec:{}", shlex::try_join(argv.iter().map(String::as_str)).unwrap_or_default()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "noiseflood", version, about = "Detect adversarial audio by noise flooding")]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute flooding score vectors for every row of a manifest.
    Score(ScoreArgs),
    /// Learn a detector from a score CSV.
    Train(TrainArgs),
    /// Score audio and report a verdict per input.
    Detect(DetectArgs),
    /// Evaluate a detector on a labelled score CSV.
    Eval(EvalArgs),
    /// Write a synthetic fragile/robust dataset for the toy classifier.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ClassifierArgs {
    /// `builtin:band-energy` or `exec:<command>`.
    #[arg(long, default_value = "builtin:band-energy")]
    pub classifier: ClassifierSpec,
    /// Seconds to wait for an external classifier's handshake.
    #[arg(long, default_value_t = 30)]
    pub handshake_timeout: u64,
    /// Seconds to wait for each external classification.
    #[arg(long, default_value_t = 30)]
    pub response_timeout: u64,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Noise-bound increment per search step.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: u32,
    /// Largest noise bound tried.
    #[arg(long, default_value_t = DEFAULT_EPS_MAX)]
    pub eps_max: u32,
    #[arg(long)]
    pub seed: u64,
    /// Comma-separated subset of: unfiltered,0-2000,2000-4000,4000-6000,6000-8000.
    #[arg(long, value_delimiter = ',')]
    pub bands: Option<Vec<FrequencyBand>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectorKind {
    Threshold,
    Majority,
    Ltv,
    Tree,
    Forest,
    Adaboost,
    Gboost,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Score CSV with ground truth.
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, value_enum)]
    pub kind: DetectorKind,
    /// Band of a single-threshold detector.
    #[arg(long, default_value = "unfiltered")]
    pub band: FrequencyBand,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MIN_LEAF)]
    pub min_leaf: usize,
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,
    #[arg(long, default_value_t = 2)]
    pub max_features: usize,
    /// Grow forest trees on the full training set instead of resamples.
    #[arg(long)]
    pub no_bootstrap: bool,
    /// Boosting stages (AdaBoost default 50, gradient boosting 100).
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    /// Forest seed (defaults to the seed the scores were computed with).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["manifest", "wav"])))]
pub struct DetectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub wav: Option<PathBuf>,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Must match the model's training scores if given.
    #[arg(long)]
    pub step: Option<u32>,
    /// Must match the model's training scores if given.
    #[arg(long)]
    pub eps_max: Option<u32>,
    #[arg(long)]
    pub seed: u64,
    /// Verdict file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Test score CSV with ground truth.
    #[arg(long)]
    pub scores: PathBuf,
    /// Report directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Method name in reports (defaults to the detector's name).
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub fragile: usize,
    #[arg(long, default_value_t = 200)]
    pub robust: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output directory (receives manifest.csv and wav/).
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            e.exit_code() as u8
        }
    }
}

pub fn run(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Score(a) => cmd_score(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Detect(a) => cmd_detect(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Synth(a) => cmd_synth(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let ctx = |e: io::Error| config(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(ctx)?;
    tmp.write_all(bytes).map_err(ctx)?;
    tmp.persist(path).map_err(|e| ctx(e.error))?;
    Ok(())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))
}

fn build_classifier(args: &ClassifierArgs) -> Result<ClassifierHandle, CliError> {
    Ok(match &args.classifier {
        ClassifierSpec::BandEnergy => ClassifierHandle::new(BandEnergyToyClassifier::speech_bands()),
        ClassifierSpec::Exec(argv) => {
            let opts = ExternalOptions {
                handshake_timeout: Duration::from_secs(args.handshake_timeout),
                response_timeout: Duration::from_secs(args.response_timeout),
            };
            ClassifierHandle::new(ExternalClassifier::spawn(argv, opts)?)
        }
    })
}

fn workers(args: &ClassifierArgs) -> usize {
    args.workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

/// Canonical band indices for `--bands`, in canonical order.
pub fn band_indices(bands: Option<&[FrequencyBand]>) -> Result<Vec<usize>, CliError> {
    let Some(bands) = bands else {
        return Ok((0..NUM_BANDS).collect());
    };
    let mut idx = Vec::new();
    for b in bands {
        let i = canonical_index(*b).ok_or_else(|| config(format!("band {b} is not one of the five canonical bands")))?;
        if idx.contains(&i) {
            return Err(config(format!("band {b} listed twice")));
        }
        idx.push(i);
    }
    if idx.is_empty() {
        return Err(config("no bands selected"));
    }
    idx.sort_unstable();
    Ok(idx)
}

fn band_list(idx: &[usize]) -> String {
    idx.iter().map(|&i| CANONICAL_BANDS[i].to_string()).collect::<Vec<_>>().join(",")
}

/// Exit code for a scoring run with per-row failures.
fn failure_code(scores: &DatasetScores) -> u8 {
    if scores.failures.is_empty() {
        return EXIT_OK;
    }
    for f in &scores.failures {
        eprintln!("row {} ({}): {}", f.index + 1, f.id, f.message);
    }
    if scores.failures.iter().any(|f| f.kind == FailureKind::Classifier) {
        EXIT_CLASSIFIER
    } else {
        EXIT_PARTIAL
    }
}

pub fn cmd_score(a: &ScoreArgs) -> Result<u8, CliError> {
    let cfg = FloodingConfig::new(a.step, a.eps_max, FrequencyBand::Unfiltered, a.seed)?;
    let bands = band_indices(a.bands.as_deref())?;
    let manifest_bytes = read_bytes(&a.manifest)?;
    let manifest = Manifest::load(&a.manifest)?;
    let m = build_classifier(&a.classifier)?;

    log::info!("scoring {} rows on {} band(s)", manifest.rows.len(), bands.len());
    let scores = score_dataset(&manifest, &m, &cfg, &bands, workers(&a.classifier))?;

    let comments = vec![
        format!("tool: {TOOL}"),
        "command: score".to_owned(),
        format!("manifest: {}", a.manifest.display()),
        format!("manifest_sha256: {}", sha256_hex(&manifest_bytes)),
        format!("classifier: {}", a.classifier.classifier),
        format!("seed: {}", a.seed),
        format!("s: {}", a.step),
        format!("eps_max: {}", a.eps_max),
        format!("bands: {}", band_list(&bands)),
    ];
    let mut buf = Vec::new();
    write_scores(&mut buf, &scores.rows, ScoreParams { seed: a.seed, step: a.step, eps_max: a.eps_max }, &comments)?;
    write_atomic(&a.out, &buf)?;
    eprintln!(
        "scored {} of {} rows ({} classifier calls) -> {}",
        scores.rows.len(),
        manifest.rows.len(),
        m.calls(),
        a.out.display()
    );
    Ok(failure_code(&scores))
}

fn training_f1(detector: &dyn Detector, train: &[ScoreVector]) -> Result<f64, CliError> {
    Ok(evaluate(detector, train, "")?.f1)
}

pub fn cmd_train(a: &TrainArgs) -> Result<u8, CliError> {
    let bytes = read_bytes(&a.scores)?;
    let table = ScoreTable::load(&a.scores)?;
    let params = table.params.ok_or_else(|| config(format!("{} has no rows", a.scores.display())))?;
    let train = table.vectors();
    let mut hp: BTreeMap<String, serde_json::Value> = BTreeMap::new();
    let mut seed = params.seed;

    let detector = match a.kind {
        DetectorKind::Threshold => {
            let idx = canonical_index(a.band).ok_or_else(|| config(format!("band {} is not canonical", a.band)))?;
            hp.insert("band".into(), json!(a.band.to_string()));
            let m = learn_threshold(&band_scores(&train, idx)?, a.band)?;
            println!(
                "threshold {} on band {} (info gain {:.6} bits{})",
                m.threshold,
                m.band,
                m.stats.info_gain,
                if m.stats.degenerate { ", degenerate: all scores equal" } else { "" }
            );
            DetectorModel::Threshold(m)
        }
        DetectorKind::Majority | DetectorKind::Ltv => {
            let members = learn_band_thresholds(&train)?;
            for m in &members {
                println!("member {}: threshold {} (info gain {:.6} bits)", m.band, m.threshold, m.stats.info_gain);
            }
            if a.kind == DetectorKind::Majority {
                DetectorModel::Majority(VotingModel::majority(members)?)
            } else {
                let m = learn_vote_threshold(&train, members)?;
                for (k, f1) in m.training_f1.iter().enumerate() {
                    println!("k={}: training F1 {f1:.6}", k + 1);
                }
                println!("vote threshold k={}", m.vote_threshold);
                DetectorModel::Ltv(m)
            }
        }
        DetectorKind::Tree => {
            let p = TreeParams { max_depth: a.max_depth.unwrap_or(DEFAULT_MAX_DEPTH), min_leaf: a.min_leaf };
            hp.insert("max_depth".into(), json!(p.max_depth));
            hp.insert("min_leaf".into(), json!(p.min_leaf));
            DetectorModel::Tree { root: fit_tree(&TrainSet::from_vectors(&train)?, &p)? }
        }
        DetectorKind::Forest => {
            seed = a.seed.unwrap_or(params.seed);
            let p = ForestParams {
                n_trees: a.n_trees,
                max_features: a.max_features,
                max_depth: a.max_depth.unwrap_or(ForestParams::default().max_depth),
                min_leaf: a.min_leaf,
                bootstrap: !a.no_bootstrap,
                seed,
            };
            hp.insert("n_trees".into(), json!(p.n_trees));
            hp.insert("max_features".into(), json!(p.max_features));
            hp.insert("max_depth".into(), json!(p.max_depth));
            hp.insert("min_leaf".into(), json!(p.min_leaf));
            hp.insert("bootstrap".into(), json!(p.bootstrap));
            DetectorModel::Forest(fit_forest(&TrainSet::from_vectors(&train)?, &p)?)
        }
        DetectorKind::Adaboost => {
            let stages = a.stages.unwrap_or(DEFAULT_ADABOOST_STAGES);
            hp.insert("stages".into(), json!(stages));
            let m = fit_adaboost(&TrainSet::from_vectors(&train)?, stages)?;
            println!("{} stage(s); training error bound {:.6}", m.stages.len(), m.training_error_bound());
            DetectorModel::Adaboost(m)
        }
        DetectorKind::Gboost => {
            let d = GBoostParams::default();
            let p = GBoostParams {
                n_stages: a.stages.unwrap_or(d.n_stages),
                learning_rate: a.learning_rate,
                max_depth: a.max_depth.unwrap_or(d.max_depth),
                min_leaf: a.min_leaf,
            };
            hp.insert("stages".into(), json!(p.n_stages));
            hp.insert("learning_rate".into(), json!(p.learning_rate));
            hp.insert("max_depth".into(), json!(p.max_depth));
            hp.insert("min_leaf".into(), json!(p.min_leaf));
            let m = fit_gboost(&TrainSet::from_vectors(&train)?, &p)?;
            if let (Some(first), Some(last)) = (m.loss_trace.first(), m.loss_trace.last()) {
                println!("training log-loss {first:.6} -> {last:.6}");
            }
            DetectorModel::Gboost(m)
        }
    };
    println!("{}: training F1 {:.6} on {} rows", detector.name(), training_f1(&detector, &train)?, train.len());

    let provenance = Provenance {
        seed,
        step: params.step,
        eps_max: params.eps_max,
        training_rows: train.len(),
        dataset_sha256: sha256_hex(&bytes),
        hyperparameters: hp,
        tool_version: TOOL.to_owned(),
    };
    write_atomic(&a.out, ModelFile::new(detector, provenance).to_json().as_bytes())?;
    Ok(EXIT_OK)
}

fn check_search_params(model: &Provenance, step: u32, eps_max: u32, what: &str) -> Result<(), CliError> {
    if model.step != step || model.eps_max != eps_max {
        return Err(config(format!(
            "model/config mismatch: model was trained on scores with s={} eps_max={}, {what} has s={step} eps_max={eps_max}",
            model.step, model.eps_max
        )));
    }
    Ok(())
}

pub fn cmd_detect(a: &DetectArgs) -> Result<u8, CliError> {
    let model = ModelFile::load(&a.model)?;
    let step = a.step.unwrap_or(model.provenance.step);
    let eps_max = a.eps_max.unwrap_or(model.provenance.eps_max);
    check_search_params(&model.provenance, step, eps_max, "the command line")?;
    let cfg = FloodingConfig::new(step, eps_max, FrequencyBand::Unfiltered, a.seed)?;
    let bands = model.detector.required_bands();

    let (manifest, source) = match (&a.manifest, &a.wav) {
        (Some(p), _) => (Manifest::load(p)?, p.display().to_string()),
        (None, Some(w)) => {
            let id = w.file_stem().map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned());
            let row = ManifestRow { id, path: w.display().to_string(), is_adversarial: None, source: None, target: None };
            (Manifest { base_dir: PathBuf::new(), rows: vec![row] }, w.display().to_string())
        }
        (None, None) => return Err(config("one of --manifest or --wav is required")),
    };
    let m = build_classifier(&a.classifier)?;
    let scores = score_dataset(&manifest, &m, &cfg, &bands, workers(&a.classifier))?;

    let mut out = String::new();
    out.push_str(&format!("# tool: {TOOL}\n# command: detect\n# model_sha256: {}\n", model.config_hash()));
    out.push_str(&format!("# detector: {}\n# input: {source}\n", model.detector.name()));
    out.push_str(&format!("# classifier: {}\n# seed: {}\n# s: {step}\n# eps_max: {eps_max}\n", a.classifier.classifier, a.seed));
    out.push_str("id,verdict,probability");
    for k in BAND_KEYS {
        out.push_str(&format!(",eps_{k}"));
    }
    out.push('\n');
    for row in &scores.rows {
        let p = model.detector.predict(&row.vector).map_err(config)?;
        out.push_str(&format!(
            "{},{},{:.6}",
            row.id,
            if p.adversarial { "adversarial" } else { "benign" },
            p.probability
        ));
        for s in &row.vector.scores {
            out.push(',');
            if let Some(s) = s {
                out.push_str(&s.epsilon.to_string());
            }
        }
        out.push('\n');
    }
    match &a.out {
        Some(path) => write_atomic(path, out.as_bytes())?,
        None => print!("{out}"),
    }
    Ok(failure_code(&scores))
}

fn file_stem_for(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn cmd_eval(a: &EvalArgs) -> Result<u8, CliError> {
    let model = ModelFile::load(&a.model)?;
    let table = ScoreTable::load(&a.scores)?;
    let params = table.params.ok_or_else(|| config(format!("{} has no rows", a.scores.display())))?;
    check_search_params(&model.provenance, params.step, params.eps_max, "the test scores")?;
    let test = table.vectors();
    let report = evaluate(&model.detector, &test, &model.config_hash())?;

    let name = a.name.clone().unwrap_or_else(|| model.detector.name());
    let stem = file_stem_for(&name);
    fs::create_dir_all(&a.out).map_err(|e| config(format!("cannot create {}: {e}", a.out.display())))?;
    let provenance = vec![
        format!("tool: {TOOL}"),
        format!("model: {}", a.model.display()),
        format!("test_scores: {}", a.scores.display()),
        format!("test_scores_sha256: {}", sha256_hex(&read_bytes(&a.scores)?)),
        format!("seed: {}", params.seed),
        format!("s: {}", params.step),
        format!("eps_max: {}", params.eps_max),
    ];
    write_atomic(&a.out.join(format!("{stem}.report.txt")), report.render_text(&provenance).as_bytes())?;
    match &report.matrix {
        Some(m) => write_atomic(&a.out.join(format!("{stem}.matrix.csv")), m.to_csv().as_bytes())?,
        None => log::warn!("adversarial rows lack source/target labels; no recall matrix written"),
    }
    let cmp_path = a.out.join("comparison.csv");
    let existing = fs::read_to_string(&cmp_path).ok();
    let merged = merge_comparison(existing.as_deref(), &name, &comparison_line(&name, &report));
    write_atomic(&cmp_path, merged.as_bytes())?;

    println!("{}", comparison_line(&name, &report));
    Ok(EXIT_OK)
}

pub fn cmd_synth(a: &SynthArgs) -> Result<u8, CliError> {
    let set = generate_set(a.fragile, a.robust, &SynthParams::default(), a.seed)?;
    let manifest = write_dataset(&a.out, &set)?;
    eprintln!("wrote {} examples to {}", manifest.rows.len(), a.out.display());
    Ok(EXIT_OK)
}

/// Fraction of rows whose verdict matches the ground truth.
pub fn accuracy(detector: &dyn Detector, rows: &[ScoreVector]) -> f64 {
    let ok = rows
        .iter()
        .filter(|v| detector.predict(v).is_ok_and(|p| Some(decide(p.probability)) == v.is_adversarial))
        .count();
    ok as f64 / rows.len().max(1) as f64
}
