//! The `cwi` command line: stats | align | train | predict | eval | experiment.
//!
//! Settings come from an optional JSON config file (`--config`); flags given
//! on the command line win over it. Exit codes: 0 success, 1 invalid input,
//! 2 missing resource, 3 numerical failure.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::alignment::{
    chain_to_pivot, BilingualDictionary, FitRecord, RefinementConfig, PIVOT, REPORT_SCHEMA_VERSION,
};
use crate::corpus::{preprocess, stats, to_sequences, CorpusStats, Genre, Language, Split};
use crate::embeddings::{EmbeddingTable, SharedSpace, DEFAULT_MAX_VOCAB};
use crate::error::{Error, Result};
use crate::eval::{
    classify_file_name, combination_label, derive_seed, evaluate, grid_specs, load_corpus, predict_corpus,
    write_reports_jsonl, ConfusionCounts, CorpusKey, CorpusStore, DataIndex, EvalReport, ExperimentRunner,
    ExperimentSpec, Grid, ModelKind, Target, SCHEMA_VERSION,
};
use crate::tagger::{
    checkpoint, encode_sequences, train_encoded, BiLstmClassifier, ComplexityClassifier, ConstantClassifier, EchoGold,
    Prediction, TaggerModel, TrainingConfig,
};

/// Settings file contents. Every field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub data_root: Option<PathBuf>,
    pub embeddings_root: Option<PathBuf>,
    pub dictionaries_root: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub max_vocab: usize,
    pub jobs: Option<usize>,
    pub training: TrainingConfig,
    pub alignment: RefinementConfig,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            data_root: None,
            embeddings_root: None,
            dictionaries_root: None,
            output_dir: None,
            seed: 0,
            max_vocab: DEFAULT_MAX_VOCAB,
            jobs: None,
            training: TrainingConfig::default(),
            alignment: RefinementConfig::default(),
        }
    }
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            context: path.display().to_string(),
            source: e,
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "cwi", version, about = "Cross-lingual complex word identification")]
pub struct Cli {
    /// JSON config file; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Top-level seed every random component is derived from
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory that receives every output file
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Complex / non-complex counts per file and in total
    Stats(StatsArgs),
    /// Map DE/ES/FR embeddings into the English space
    Align(AlignArgs),
    /// Train a BiLSTM tagger and write a checkpoint
    Train(TrainArgs),
    /// Append predicted label and probability to every line of a TSV file
    Predict(PredictArgs),
    /// Score predictions or a model against gold labels
    Eval(EvalArgs),
    /// Run experiment cells and tabulate them
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CorpusKeyArgs {
    /// Language of the file when its name does not say (EN, DE, ES, FR)
    #[arg(long)]
    pub language: Option<Language>,
    /// Genre of the file when its name does not say
    #[arg(long)]
    pub genre: Option<Genre>,
    /// Split of the file when its name does not say (train, dev, test)
    #[arg(long)]
    pub split: Option<Split>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// CWI 2018 TSV files
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[command(flatten)]
    pub key: CorpusKeyArgs,
    /// Print JSON instead of a table
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Directory with <iso>.vec files (en.vec, de.vec, ...)
    #[arg(long, value_name = "DIR")]
    pub embeddings_root: Option<PathBuf>,
    /// Directory with en-<iso> dictionaries (en-de.txt, en-es.0-5000.txt, ...)
    #[arg(long, value_name = "DIR")]
    pub dictionaries_root: Option<PathBuf>,
    /// Languages to map into English
    #[arg(long, value_delimiter = ',', default_value = "DE,ES,FR")]
    pub languages: Vec<Language>,
    /// Keep only the most frequent words of each .vec file
    #[arg(long)]
    pub max_vocab: Option<usize>,
    /// Refinement iterations
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Neighbourhood size of CSLS
    #[arg(long)]
    pub k_csls: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainingArgs {
    /// RMSprop learning rate
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Passes over the training data
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Sequences per update
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// LSTM hidden units per direction
    #[arg(long)]
    pub hidden_size: Option<usize>,
}

impl TrainingArgs {
    fn apply(&self, cfg: &mut TrainingConfig) {
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.hidden_size {
            cfg.hidden_size = v;
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory holding the CWI 2018 TSV files
    #[arg(long, value_name = "DIR")]
    pub data_root: Option<PathBuf>,
    /// Directory with aligned <iso>.vec files
    #[arg(long, value_name = "DIR")]
    pub embeddings_root: Option<PathBuf>,
    /// Training languages
    #[arg(long, value_delimiter = ',', required = true)]
    pub train_languages: Vec<Language>,
    /// Target whose training split provides the shots
    #[arg(long)]
    pub target: Option<Target>,
    /// Target-language training instances to add
    #[arg(long, default_value_t = 0)]
    pub shots: usize,
    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Checkpoint written by `cwi train`
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// Directory with aligned <iso>.vec files
    #[arg(long, value_name = "DIR")]
    pub embeddings_root: Option<PathBuf>,
    /// Use a baseline instead of a checkpoint (echo-gold, constant-zero)
    #[arg(long)]
    pub baseline: Option<ModelKind>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// TSV file to label
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub key: CorpusKeyArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output file (default: <output-dir>/<input stem>.pred.tsv)
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions TSV written by `cwi predict`
    #[arg(long, value_name = "FILE", conflicts_with = "input")]
    pub predictions: Option<PathBuf>,
    /// Gold TSV to predict and score
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub key: CorpusKeyArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON file with one spec or a list of specs
    #[arg(long, value_name = "FILE", conflicts_with = "grid")]
    pub spec: Option<PathBuf>,
    /// Run all 7 training combinations against all 6 targets
    #[arg(long)]
    pub grid: bool,
    /// Target-language shots for --grid cells
    #[arg(long, default_value_t = 0)]
    pub shots: usize,
    /// Model for --grid cells (bilstm, echo-gold, constant-zero)
    #[arg(long, default_value = "bilstm")]
    pub model: ModelKind,
    /// Directory holding the CWI 2018 TSV files
    #[arg(long, value_name = "DIR")]
    pub data_root: Option<PathBuf>,
    /// Directory with aligned <iso>.vec files
    #[arg(long, value_name = "DIR")]
    pub embeddings_root: Option<PathBuf>,
    /// Cells run in parallel (default: number of cores)
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub training: TrainingArgs,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Ctx {
    config: CliConfig,
    output_dir: Option<PathBuf>,
}

impl Ctx {
    fn output_dir(&self) -> Result<PathBuf> {
        let dir = self
            .output_dir
            .clone()
            .ok_or_else(|| Error::invalid("--output-dir is required (flag or config)"))?;
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(dir)
    }
}

fn pick_dir(flag: &Option<PathBuf>, cfg: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    let dir = flag
        .clone()
        .or_else(|| cfg.clone())
        .ok_or_else(|| Error::invalid(format!("--{name} is required (flag or config)")))?;
    if !dir.is_dir() {
        return Err(Error::missing(name.replace('-', " "), dir));
    }
    Ok(dir)
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::missing(what, path))
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    let ctx = Ctx {
        output_dir: cli.output_dir.clone().or_else(|| config.output_dir.clone()),
        config,
    };
    match cli.command {
        Command::Stats(a) => cmd_stats(&a),
        Command::Align(a) => cmd_align(&ctx, &a),
        Command::Train(a) => cmd_train(&ctx, &a),
        Command::Predict(a) => cmd_predict(&ctx, &a),
        Command::Eval(a) => cmd_eval(&ctx, &a),
        Command::Experiment(a) => cmd_experiment(&ctx, &a),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        context: "serializing output".into(),
        source: e,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Corpus identity of a file, from its name or the flags (flags win).
fn corpus_key(path: &Path, flags: &CorpusKeyArgs) -> Result<CorpusKey> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let name = name.replace(".pred.tsv", ".tsv");
    let guess = classify_file_name(&name);
    let language = flags.language.or(guess.map(|k| k.0)).ok_or_else(|| {
        Error::invalid(format!(
            "cannot tell the language of {}; pass --language",
            path.display()
        ))
    })?;
    let genre = flags.genre.or(guess.map(|k| k.1)).unwrap_or(match language {
        Language::En => Genre::Mixed,
        _ => Genre::Wikipedia,
    });
    let split = flags.split.or(guess.map(|k| k.2)).unwrap_or(Split::Test);
    Ok((language, genre, split))
}

#[derive(Serialize)]
struct FileStats {
    path: PathBuf,
    language: Language,
    genre: Genre,
    split: Split,
    #[serde(flatten)]
    counts: CorpusStats,
}

#[derive(Serialize)]
struct StatsReport {
    schema_version: u32,
    files: Vec<FileStats>,
    total: CorpusStats,
}

fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let mut files = Vec::new();
    let mut total = CorpusStats::default();
    for path in &a.files {
        require_file(path, "corpus file")?;
        let (language, genre, split) = corpus_key(path, &a.key)?;
        let corpus = load_corpus(path, language, genre, split)?;
        let counts = stats(&corpus);
        total = total + counts;
        files.push(FileStats {
            path: path.clone(),
            language,
            genre,
            split,
            counts,
        });
    }
    let report = StatsReport {
        schema_version: SCHEMA_VERSION,
        files,
        total,
    };
    if a.json {
        println!("{}", to_json(&report)?);
    } else {
        println!("{:<40} {:>4} {:>10} {:>12}", "file", "lang", "complex", "non-complex");
        for f in &report.files {
            println!(
                "{:<40} {:>4} {:>10} {:>12}",
                f.path.display(),
                f.language.code(),
                f.counts.complex,
                f.counts.noncomplex
            );
        }
        println!(
            "{:<40} {:>4} {:>10} {:>12}",
            "total", "", total.complex, total.noncomplex
        );
    }
    Ok(())
}

/// Finds `en-<iso>*.txt` (or `<iso>-en*.txt`) in `dir`; the first by name wins.
fn find_dictionary(dir: &Path, lang: Language) -> Result<BilingualDictionary> {
    let (fwd, rev) = (
        format!("{}-{}", PIVOT.iso(), lang.iso()),
        format!("{}-{}", lang.iso(), PIVOT.iso()),
    );
    let mut candidates: Vec<(PathBuf, bool)> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter_map(|p| {
            let name = p.file_name()?.to_str()?.to_string();
            if !name.ends_with(".txt") {
                return None;
            }
            let stem = name.trim_end_matches(".txt");
            let matches = |prefix: &str| stem == prefix || stem.starts_with(&format!("{prefix}."));
            if matches(&fwd) {
                Some((p, true))
            } else if matches(&rev) {
                Some((p, false))
            } else {
                None
            }
        })
        .collect();
    candidates.sort();
    let (path, english_first) = candidates
        .into_iter()
        .next()
        .ok_or_else(|| Error::missing(format!("{fwd} dictionary"), dir.join(format!("{fwd}.txt"))))?;
    if english_first {
        BilingualDictionary::load_path(&path, PIVOT, lang)
    } else {
        BilingualDictionary::load_path(&path, lang, PIVOT)
    }
}

#[derive(Serialize)]
struct AlignReport {
    schema_version: u32,
    dim: usize,
    maps: Vec<FitRecord>,
}

fn cmd_align(ctx: &Ctx, a: &AlignArgs) -> Result<()> {
    let emb_root = pick_dir(&a.embeddings_root, &ctx.config.embeddings_root, "embeddings-root")?;
    let dict_root = pick_dir(&a.dictionaries_root, &ctx.config.dictionaries_root, "dictionaries-root")?;
    let mut refine_cfg = ctx.config.alignment;
    if let Some(v) = a.iterations {
        refine_cfg.iterations = v;
    }
    if let Some(v) = a.k_csls {
        refine_cfg.k_csls = v;
    }
    refine_cfg.validate()?;
    let max_vocab = a.max_vocab.unwrap_or(ctx.config.max_vocab);
    let mut langs: Vec<Language> = a.languages.iter().copied().filter(|&l| l != PIVOT).collect();
    langs.sort();
    langs.dedup();

    // Check every input before the expensive part.
    let mut dicts = BTreeMap::new();
    for &l in &langs {
        require_file(&emb_root.join(format!("{}.vec", l.iso())), "embedding file")?;
        dicts.insert(l, find_dictionary(&dict_root, l)?);
    }
    require_file(&emb_root.join(format!("{}.vec", PIVOT.iso())), "embedding file")?;
    let out_dir = ctx.output_dir()?;

    let mut all = vec![PIVOT];
    all.extend(&langs);
    let space = SharedSpace::load_dir(&emb_root, &all, max_vocab)?;
    let tables: BTreeMap<Language, EmbeddingTable> = all
        .iter()
        .map(|&l| {
            let (unit, zeros) = space.table(l).expect("loaded").normalize();
            if zeros > 0 {
                log::warn!("{l}: {zeros} zero vectors");
            }
            (l, unit)
        })
        .collect();
    let pivot = chain_to_pivot(&tables, &dicts, &refine_cfg)?;
    for (l, table) in &pivot.tables {
        table.write_path(&out_dir.join(format!("{}.vec", l.iso())))?;
    }
    let report = AlignReport {
        schema_version: REPORT_SCHEMA_VERSION,
        dim: space.dim().unwrap_or(0),
        maps: pivot.maps.values().map(|m| m.record()).collect(),
    };
    let json = to_json(&report)?;
    write_file(&out_dir.join("alignment_report.json"), &json)?;
    println!("{json}");
    Ok(())
}

fn load_space(root: &Path, langs: impl IntoIterator<Item = Language>, max_vocab: usize) -> Result<SharedSpace> {
    let mut langs: Vec<Language> = langs.into_iter().collect();
    langs.sort();
    langs.dedup();
    SharedSpace::load_dir(root, &langs, max_vocab)
}

fn training_config(ctx: &Ctx, args: &TrainingArgs) -> Result<TrainingConfig> {
    let mut cfg = ctx.config.training.clone();
    args.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct TrainLogLine {
    schema_version: u32,
    epoch: usize,
    mean_loss: f64,
}

fn cmd_train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let data_root = pick_dir(&a.data_root, &ctx.config.data_root, "data-root")?;
    let emb_root = pick_dir(&a.embeddings_root, &ctx.config.embeddings_root, "embeddings-root")?;
    let mut cfg = training_config(ctx, &a.training)?;
    let target = match (a.target, a.shots) {
        (Some(t), _) => t,
        (None, 0) => Target::ALL
            .into_iter()
            .find(|t| !a.train_languages.contains(&t.language()))
            .unwrap_or(Target::Fr),
        (None, _) => return Err(Error::invalid("--shots needs --target")),
    };
    let mut spec = ExperimentSpec::new(a.train_languages.iter().copied(), target, a.shots, ctx.config.seed);
    spec.training = Some(cfg.clone());
    spec.validate()?;
    let out_dir = ctx.output_dir()?;

    let store = CorpusStore::load(&DataIndex::discover(&data_root)?)?;
    let mut langs: Vec<Language> = a.train_languages.clone();
    if a.shots > 0 {
        langs.push(target.language());
    }
    let space = load_space(&emb_root, langs, ctx.config.max_vocab)?;
    let runner = ExperimentRunner::new(&store, Some(&space), cfg.clone());
    let train = runner.training_corpus(&spec, spec.seed)?;
    cfg.seed = derive_seed(spec.seed, "shuffle");
    let dim = space.dim().ok_or_else(|| Error::invalid("embedding space is empty"))?;
    let init = TaggerModel::init(dim, cfg.hidden_size, derive_seed(spec.seed, "init"))?;
    let data = encode_sequences(&to_sequences(&train)?, &space);
    let outcome = train_encoded(init, &data, &cfg, |_, _| Ok(()))?;

    checkpoint::save(&outcome.model, &out_dir.join("model.json"))?;
    let log_path = out_dir.join("training_log.jsonl");
    let mut log = String::new();
    for e in &outcome.log {
        let line = serde_json::to_string(&TrainLogLine {
            schema_version: SCHEMA_VERSION,
            epoch: e.epoch,
            mean_loss: e.mean_loss,
        })
        .expect("log line serializes");
        log.push_str(&line);
        log.push('\n');
    }
    write_file(&log_path, &log)?;
    println!(
        "trained on {} instances ({}), final loss {:.6}",
        train.len(),
        combination_label(&spec.train_languages),
        outcome.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

enum LoadedModel {
    Bilstm(Box<(TaggerModel, SharedSpace)>),
    Baseline(ModelKind),
}

fn load_model(ctx: &Ctx, m: &ModelArgs, language: Language) -> Result<LoadedModel> {
    if let Some(b) = m.baseline {
        if b == ModelKind::Bilstm {
            return Err(Error::invalid("--baseline takes echo-gold or constant-zero"));
        }
        return Ok(LoadedModel::Baseline(b));
    }
    let ck = m
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::invalid("pass --checkpoint or --baseline"))?;
    require_file(ck, "checkpoint")?;
    let emb_root = pick_dir(&m.embeddings_root, &ctx.config.embeddings_root, "embeddings-root")?;
    let model = checkpoint::load(ck)?;
    let space = load_space(&emb_root, [language], ctx.config.max_vocab)?;
    if space.dim() != Some(model.input_dim()) {
        return Err(Error::invalid(format!(
            "checkpoint expects {}-dimensional inputs, embeddings have {:?}",
            model.input_dim(),
            space.dim()
        )));
    }
    Ok(LoadedModel::Bilstm(Box::new((model, space))))
}

fn with_classifier<T>(
    loaded: &LoadedModel,
    corpus: &crate::corpus::Corpus,
    f: impl FnOnce(&dyn ComplexityClassifier) -> Result<T>,
) -> Result<T> {
    match loaded {
        LoadedModel::Bilstm(b) => f(&BiLstmClassifier::new(&b.0, &b.1)),
        LoadedModel::Baseline(ModelKind::EchoGold) => f(&EchoGold { corpus }),
        LoadedModel::Baseline(_) => f(&ConstantClassifier {
            probability: 0.0,
            threshold: 0.5,
        }),
    }
}

fn cmd_predict(ctx: &Ctx, a: &PredictArgs) -> Result<()> {
    require_file(&a.input, "input file")?;
    let (language, genre, split) = corpus_key(&a.input, &a.key)?;
    let loaded = load_model(ctx, &a.model, language)?;
    let output = match &a.output {
        Some(p) => p.clone(),
        None => {
            let stem = a.input.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
            ctx.output_dir()?.join(format!("{stem}.pred.tsv"))
        }
    };
    let raw = load_corpus(&a.input, language, genre, split)?;
    let (clean, report) = preprocess(&raw);
    let predictions = with_classifier(&loaded, &clean, |c| predict_corpus(c, &clean))?;
    if !report.dropped.is_empty() {
        log::warn!(
            "{} instances had no usable span after cleaning and are written as label 0",
            report.dropped.len()
        );
    }
    // Position i of the raw corpus -> its prediction, None when dropped.
    let mut kept = predictions.iter();
    let aligned: Vec<Option<Prediction>> = (0..raw.instances.len())
        .map(|i| {
            if report.dropped.binary_search(&i).is_ok() {
                None
            } else {
                kept.next().copied()
            }
        })
        .collect();

    let file = File::open(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let out = File::create(&output).map_err(|e| Error::io(&output, e))?;
    let mut out = BufWriter::new(out);
    let mut idx = 0usize;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(&a.input, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let (label, prob) = aligned
            .get(idx)
            .copied()
            .flatten()
            .map_or((0, 0.0), |p| (p.label, p.probability));
        idx += 1;
        writeln!(out, "{line}\t{label}\t{prob:.6}").map_err(|e| Error::io(&output, e))?;
    }
    out.flush().map_err(|e| Error::io(&output, e))?;
    println!("wrote {} predictions to {}", idx, output.display());
    Ok(())
}

/// Gold and predicted labels from a predictions TSV.
pub fn read_prediction_labels(path: &Path) -> Result<ConfusionCounts> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut counts = ConfusionCounts::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |message: String| Error::Parse { line: i + 1, message }.in_file(path);
        if fields.len() != 13 {
            return Err(bad(format!("expected 13 fields, found {}", fields.len())));
        }
        let gold: u8 = fields[9]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad gold label '{}'", fields[9])))?;
        let pred: u8 = fields[11]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad predicted label '{}'", fields[11])))?;
        counts.record(gold, pred).map_err(|e| e.in_file(path))?;
    }
    Ok(counts)
}

fn cmd_eval(ctx: &Ctx, a: &EvalArgs) -> Result<()> {
    let report = if let Some(pred) = &a.predictions {
        require_file(pred, "predictions file")?;
        let (language, genre, split) = corpus_key(pred, &a.key)?;
        EvalReport::from_counts(read_prediction_labels(pred)?, language, genre, split)
    } else {
        let input = a
            .input
            .as_ref()
            .ok_or_else(|| Error::invalid("pass --predictions or --input"))?;
        require_file(input, "input file")?;
        let (language, genre, split) = corpus_key(input, &a.key)?;
        let loaded = load_model(ctx, &a.model, language)?;
        let (corpus, _) = preprocess(&load_corpus(input, language, genre, split)?);
        let mut r = with_classifier(&loaded, &corpus, |c| evaluate(c, &corpus))?;
        r.model_id = match &loaded {
            LoadedModel::Bilstm(..) => ModelKind::Bilstm.id().into(),
            LoadedModel::Baseline(b) => b.id().into(),
        };
        r
    };
    let json = to_json(&report)?;
    if let Some(dir) = &ctx.output_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("eval_report.json"), &json)?;
    }
    println!("{json}");
    Ok(())
}

/// A spec file holds one spec or a list of them.
#[derive(Deserialize)]
#[serde(untagged)]
enum SpecFile {
    One(ExperimentSpec),
    Many(Vec<ExperimentSpec>),
}

pub fn load_specs(path: &Path) -> Result<Vec<ExperimentSpec>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed: SpecFile = serde_json::from_str(&text).map_err(|e| Error::Json {
        context: path.display().to_string(),
        source: e,
    })?;
    let specs = match parsed {
        SpecFile::One(s) => vec![s],
        SpecFile::Many(v) => v,
    };
    if specs.is_empty() {
        return Err(Error::invalid("spec file lists no experiments"));
    }
    for s in &specs {
        s.validate().map_err(|e| e.in_file(path))?;
    }
    Ok(specs)
}

fn cell_file_name(spec: &ExperimentSpec, run: usize) -> String {
    format!(
        "{}_{}_shots{}_seed{}_run{}.json",
        combination_label(&spec.train_languages),
        spec.target,
        spec.shots,
        spec.seed,
        run
    )
}

fn cmd_experiment(ctx: &Ctx, a: &ExperimentArgs) -> Result<()> {
    let specs = if a.grid {
        grid_specs(a.shots, ctx.config.seed, a.model)
    } else {
        let path = a.spec.as_ref().ok_or_else(|| Error::invalid("pass --spec or --grid"))?;
        require_file(path, "spec file")?;
        load_specs(path)?
    };
    let data_root = pick_dir(&a.data_root, &ctx.config.data_root, "data-root")?;
    let training = training_config(ctx, &a.training)?;
    let needs_space = specs.iter().any(|s| s.model == ModelKind::Bilstm);
    let emb_root = if needs_space {
        Some(pick_dir(
            &a.embeddings_root,
            &ctx.config.embeddings_root,
            "embeddings-root",
        )?)
    } else {
        None
    };
    let out_dir = ctx.output_dir()?;

    let store = CorpusStore::load(&DataIndex::discover(&data_root)?)?;
    let space = match &emb_root {
        Some(root) => {
            let langs = specs
                .iter()
                .flat_map(|s| s.train_languages.iter().copied().chain([s.target.language()]));
            Some(load_space(root, langs, ctx.config.max_vocab)?)
        }
        None => None,
    };
    let runner = ExperimentRunner::new(&store, space.as_ref(), training);
    let jobs = a.jobs.or(ctx.config.jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let results = pool.install(|| runner.run_all(&specs));

    let ck_dir = out_dir.join("checkpoints");
    let mut reports = Vec::new();
    let mut first_error = None;
    for (spec, res) in specs.iter().zip(results) {
        match res {
            Ok(outcome) => {
                if !outcome.models.is_empty() {
                    fs::create_dir_all(&ck_dir).map_err(|e| Error::io(&ck_dir, e))?;
                }
                for (i, m) in outcome.models.iter().enumerate() {
                    checkpoint::save(m, &ck_dir.join(cell_file_name(spec, i)))?;
                }
                reports.push(outcome.report);
            }
            Err(e) => {
                eprintln!("cell {} failed: {e}", spec.label());
                first_error.get_or_insert(e);
            }
        }
    }
    let jsonl = out_dir.join("reports.jsonl");
    let mut buf = Vec::new();
    write_reports_jsonl(&reports, &mut buf)?;
    fs::write(&jsonl, buf).map_err(|e| Error::io(&jsonl, e))?;
    if !reports.is_empty() {
        let grid = Grid::from_reports(&reports)?;
        write_file(&out_dir.join("grid.json"), &grid.to_json())?;
        let text = grid.render_text();
        write_file(&out_dir.join("grid.txt"), &text)?;
        print!("{text}");
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<CliConfig>(r#"{"seed": 3}"#).is_ok());
        assert!(serde_json::from_str::<CliConfig>(r#"{"sed": 3}"#).is_err());
        let c: CliConfig = serde_json::from_str(r#"{"training": {"epochs": 2}}"#).unwrap();
        assert_eq!(c.training.epochs, 2);
        assert_eq!(c.training.batch_size, 32);
    }
}
