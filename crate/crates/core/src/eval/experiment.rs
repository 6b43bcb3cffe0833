use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{CorpusStore, DEFAULT_GENRE};
use super::metrics::{f1_for_class, macro_f1, ConfusionCounts};
use super::SCHEMA_VERSION;
use crate::corpus::{merge, sample_shots, to_sequences, Corpus, CorpusLanguage, Genre, Language, Split};
use crate::embeddings::SharedSpace;
use crate::error::{Error, Result};
use crate::tagger::{
    encode_sequences, train_encoded, BiLstmClassifier, ComplexityClassifier, ConstantClassifier, EchoGold, Prediction,
    TaggerModel, TrainingConfig,
};

/// Few-shot size used when none is configured.
pub const DEFAULT_FEW_SHOT: usize = 100;

/// Derives an independent seed for one stochastic component from the
/// top-level seed.
pub fn derive_seed(seed: u64, component: &str) -> u64 {
    // FNV-1a of the name, mixed with the seed through splitmix64.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in component.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Evaluation columns: English per genre, then the other languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Target {
    EnW,
    EnWn,
    EnN,
    De,
    Es,
    Fr,
}

impl Target {
    pub const ALL: [Target; 6] = [
        Target::EnW,
        Target::EnWn,
        Target::EnN,
        Target::De,
        Target::Es,
        Target::Fr,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Target::EnW => "EN-W",
            Target::EnWn => "EN-WN",
            Target::EnN => "EN-N",
            Target::De => "DE",
            Target::Es => "ES",
            Target::Fr => "FR",
        }
    }

    pub fn language(self) -> Language {
        match self {
            Target::EnW | Target::EnWn | Target::EnN => Language::En,
            Target::De => Language::De,
            Target::Es => Language::Es,
            Target::Fr => Language::Fr,
        }
    }

    pub fn genre(self) -> Genre {
        match self {
            Target::EnW => Genre::Wikipedia,
            Target::EnWn => Genre::WikiNews,
            Target::EnN => Genre::News,
            _ => DEFAULT_GENRE,
        }
    }

    pub fn has_dev(self) -> bool {
        self.language().has_training_data()
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Target::ALL
            .into_iter()
            .find(|t| t.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown target '{s}' (expected EN-W, EN-WN, EN-N, DE, ES or FR)"
                ))
            })
    }
}

impl From<Target> for String {
    fn from(t: Target) -> String {
        t.code().to_string()
    }
}

impl TryFrom<String> for Target {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// The seven non-empty subsets of {EN, DE, ES}, in table row order.
pub fn train_combinations() -> Vec<BTreeSet<Language>> {
    use Language::{De, En, Es};
    [
        vec![En],
        vec![De],
        vec![Es],
        vec![En, De],
        vec![En, Es],
        vec![De, Es],
        vec![En, De, Es],
    ]
    .into_iter()
    .map(|v| v.into_iter().collect())
    .collect()
}

/// "EN+DE" style label of a training combination.
pub fn combination_label(langs: &BTreeSet<Language>) -> String {
    let order = [Language::En, Language::De, Language::Es, Language::Fr];
    order
        .iter()
        .filter(|l| langs.contains(l))
        .map(|l| l.code())
        .collect::<Vec<_>>()
        .join("+")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    Bilstm,
    /// Returns the gold label; an upper bound for plumbing checks.
    EchoGold,
    /// Always predicts non-complex.
    ConstantZero,
}

impl ModelKind {
    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Bilstm => "bilstm",
            ModelKind::EchoGold => "echo-gold",
            ModelKind::ConstantZero => "constant-zero",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [ModelKind::Bilstm, ModelKind::EchoGold, ModelKind::ConstantZero]
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model '{s}'")))
    }
}

/// How much target-language data a cell sees in training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// The target language is one of the training languages.
    Monolingual,
    ZeroShot,
    OneShot,
    FewShot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub train_languages: BTreeSet<Language>,
    pub target: Target,
    #[serde(default)]
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelKind,
    /// Independent runs with seeds derived from `seed`; scores are averaged.
    #[serde(default = "one")]
    pub repeats: usize,
    /// Overrides the runner's training configuration for this cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingConfig>,
}

fn one() -> usize {
    1
}

impl ExperimentSpec {
    pub fn new(train_languages: impl IntoIterator<Item = Language>, target: Target, shots: usize, seed: u64) -> Self {
        ExperimentSpec {
            train_languages: train_languages.into_iter().collect(),
            target,
            shots,
            seed,
            model: ModelKind::Bilstm,
            repeats: 1,
            training: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_languages.is_empty() {
            return Err(Error::invalid("at least one training language is required"));
        }
        if let Some(l) = self.train_languages.iter().find(|l| !l.has_training_data()) {
            return Err(Error::invalid(format!("{l} has no training data")));
        }
        let tl = self.target.language();
        if self.shots > 0 && !tl.has_training_data() {
            return Err(Error::invalid(format!(
                "{} has no training data to draw shots from; use shots = 0",
                self.target
            )));
        }
        if self.shots > 0 && self.train_languages.contains(&tl) {
            return Err(Error::invalid(format!(
                "{} is already a training language; shots must be 0",
                tl
            )));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("repeats must be at least 1"));
        }
        if let Some(t) = &self.training {
            t.validate()?;
        }
        Ok(())
    }

    pub fn protocol(&self) -> Protocol {
        if self.train_languages.contains(&self.target.language()) {
            Protocol::Monolingual
        } else {
            match self.shots {
                0 => Protocol::ZeroShot,
                1 => Protocol::OneShot,
                _ => Protocol::FewShot,
            }
        }
    }

    /// Seed of the `run`-th repeat.
    pub fn run_seed(&self, run: usize) -> u64 {
        if run == 0 {
            self.seed
        } else {
            derive_seed(self.seed, &format!("repeat-{run}"))
        }
    }

    pub fn label(&self) -> String {
        format!(
            "{}->{} shots={} seed={}",
            combination_label(&self.train_languages),
            self.target,
            self.shots,
            self.seed
        )
    }
}

/// Scores of one classifier on one evaluation corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub train_languages: BTreeSet<Language>,
    pub shots: usize,
    pub target_language: Language,
    pub target_genre: Genre,
    pub split: Split,
    pub counts: ConfusionCounts,
    pub f1_complex: f64,
    pub f1_noncomplex: f64,
    pub macro_f1: f64,
    pub seed: u64,
    pub model_id: String,
}

impl EvalReport {
    pub fn from_counts(counts: ConfusionCounts, language: Language, genre: Genre, split: Split) -> Self {
        let f1_complex = f1_for_class(&counts, 1);
        let f1_noncomplex = f1_for_class(&counts, 0);
        EvalReport {
            schema_version: SCHEMA_VERSION,
            train_languages: BTreeSet::new(),
            shots: 0,
            target_language: language,
            target_genre: genre,
            split,
            counts,
            f1_complex,
            f1_noncomplex,
            macro_f1: macro_f1(&counts),
            seed: 0,
            model_id: String::new(),
        }
    }

    fn with_spec(mut self, spec: &ExperimentSpec, seed: u64) -> Self {
        self.train_languages = spec.train_languages.clone();
        self.shots = spec.shots;
        self.seed = seed;
        self.model_id = spec.model.id().to_string();
        self
    }
}

/// One prediction per corpus instance, in corpus order.
pub fn predict_corpus<C: ComplexityClassifier + ?Sized>(classifier: &C, corpus: &Corpus) -> Result<Vec<Prediction>> {
    let sequences = to_sequences(corpus)?;
    let per_seq: Vec<Result<Vec<(usize, Prediction)>>> = sequences
        .par_iter()
        .map(|seq| {
            classifier.predict_sequence(seq).map_err(|e| {
                let hit = seq
                    .instance_refs
                    .keys()
                    .next()
                    .map(|&i| corpus.instances[i].hit_id.clone())
                    .unwrap_or_default();
                Error::Validation {
                    hit_id: hit,
                    message: format!("prediction failed: {e}"),
                }
            })
        })
        .collect();
    let mut out: Vec<Option<Prediction>> = vec![None; corpus.len()];
    for preds in per_seq {
        for (i, p) in preds? {
            out[i] = Some(p);
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.ok_or_else(|| Error::Validation {
                hit_id: corpus.instances[i].hit_id.clone(),
                message: "no prediction produced".into(),
            })
        })
        .collect()
}

/// Scores `classifier` on a dev or test corpus.
pub fn evaluate<C: ComplexityClassifier + ?Sized>(classifier: &C, corpus: &Corpus) -> Result<EvalReport> {
    if corpus.split == Split::Train {
        return Err(Error::invalid("evaluation needs a dev or test corpus"));
    }
    let predictions = predict_corpus(classifier, corpus)?;
    let mut counts = ConfusionCounts::default();
    for (inst, p) in corpus.instances.iter().zip(&predictions) {
        counts.record(inst.binary_label, p.label)?;
    }
    let language = match corpus.language {
        CorpusLanguage::Single(l) => l,
        CorpusLanguage::Mixed => corpus
            .instances
            .first()
            .map(|i| i.provenance.language)
            .unwrap_or(Language::En),
    };
    Ok(EvalReport::from_counts(counts, language, corpus.genre, corpus.split))
}

/// Per-epoch training record kept in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub train_instances: usize,
    pub target_language_train_instances: usize,
    pub epochs: Vec<EpochRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev: Option<EvalReport>,
    pub test: EvalReport,
}

/// Everything produced for one grid cell. Serialized as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub spec: ExperimentSpec,
    pub protocol: Protocol,
    pub runs: Vec<RunReport>,
    /// Mean over runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_macro_f1: Option<f64>,
    pub test_macro_f1: f64,
}

/// Trained model and report of one cell.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    /// The model of each run, for BiLSTM cells.
    pub models: Vec<TaggerModel>,
}

/// Shared inputs of every cell.
pub struct ExperimentRunner<'a> {
    pub corpora: &'a CorpusStore,
    pub space: Option<&'a SharedSpace>,
    pub training: TrainingConfig,
}

impl<'a> ExperimentRunner<'a> {
    pub fn new(corpora: &'a CorpusStore, space: Option<&'a SharedSpace>, training: TrainingConfig) -> Self {
        ExperimentRunner {
            corpora,
            space,
            training,
        }
    }

    /// Merged training languages plus `shots` instances sampled from the
    /// target's own training split.
    pub fn training_corpus(&self, spec: &ExperimentSpec, seed: u64) -> Result<Corpus> {
        spec.validate()?;
        let mut parts = spec
            .train_languages
            .iter()
            .map(|&l| self.corpora.language_train(l))
            .collect::<Result<Vec<_>>>()?;
        if spec.shots > 0 {
            let pool = self
                .corpora
                .get((spec.target.language(), spec.target.genre(), Split::Train))?;
            parts.push(sample_shots(pool, spec.shots, derive_seed(seed, "shots"))?);
        }
        merge(&parts.iter().collect::<Vec<_>>())
    }

    pub fn run(&self, spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
        spec.validate()?;
        let target = spec.target;
        let test = self.corpora.get((target.language(), target.genre(), Split::Test))?;
        let dev = if target.has_dev() {
            Some(self.corpora.get((target.language(), target.genre(), Split::Dev))?)
        } else {
            None
        };
        let mut runs = Vec::with_capacity(spec.repeats);
        let mut models = Vec::new();
        for r in 0..spec.repeats {
            let seed = spec.run_seed(r);
            let (run, model) = self.run_once(spec, seed, dev, test)?;
            runs.push(run);
            models.extend(model);
        }
        let n = runs.len() as f64;
        let test_macro_f1 = runs.iter().map(|r| r.test.macro_f1).sum::<f64>() / n;
        let dev_macro_f1 = dev.map(|_| {
            runs.iter()
                .filter_map(|r| r.dev.as_ref())
                .map(|d| d.macro_f1)
                .sum::<f64>()
                / n
        });
        Ok(ExperimentOutcome {
            report: ExperimentReport {
                schema_version: SCHEMA_VERSION,
                spec: spec.clone(),
                protocol: spec.protocol(),
                runs,
                dev_macro_f1,
                test_macro_f1,
            },
            models,
        })
    }

    fn run_once(
        &self,
        spec: &ExperimentSpec,
        seed: u64,
        dev: Option<&Corpus>,
        test: &Corpus,
    ) -> Result<(RunReport, Option<TaggerModel>)> {
        let train = self.training_corpus(spec, seed)?;
        let target_language_train_instances = train
            .instances
            .iter()
            .filter(|i| i.provenance.language == spec.target.language())
            .count();
        let mut epochs = Vec::new();
        let score = |c: &dyn ComplexityClassifier, corpus: &Corpus| -> Result<EvalReport> {
            Ok(evaluate(c, corpus)?.with_spec(spec, seed))
        };
        let (dev_report, test_report, model) = match spec.model {
            ModelKind::EchoGold => {
                let d = dev.map(|c| score(&EchoGold { corpus: c }, c)).transpose()?;
                (d, score(&EchoGold { corpus: test }, test)?, None)
            }
            ModelKind::ConstantZero => {
                let c0 = ConstantClassifier {
                    probability: 0.0,
                    threshold: 0.5,
                };
                let d = dev.map(|c| score(&c0, c)).transpose()?;
                (d, score(&c0, test)?, None)
            }
            ModelKind::Bilstm => {
                let space = self
                    .space
                    .ok_or_else(|| Error::missing("aligned embeddings", "embeddings_root"))?;
                let mut cfg = spec.training.clone().unwrap_or_else(|| self.training.clone());
                cfg.seed = derive_seed(seed, "shuffle");
                let dim = space.dim().ok_or_else(|| Error::invalid("embedding space is empty"))?;
                let init = TaggerModel::init(dim, cfg.hidden_size, derive_seed(seed, "init"))?;
                let data = encode_sequences(&to_sequences(&train)?, space);
                let outcome = train_encoded(init, &data, &cfg, |epoch, model| {
                    let dev_macro_f1 = match dev {
                        Some(d) => Some(evaluate(&BiLstmClassifier::new(model, space), d)?.macro_f1),
                        None => None,
                    };
                    epochs.push(EpochRecord {
                        epoch,
                        mean_loss: f64::NAN,
                        dev_macro_f1,
                    });
                    Ok(())
                })?;
                for (rec, loss) in epochs.iter_mut().zip(&outcome.epoch_losses) {
                    rec.mean_loss = *loss;
                }
                let clf = BiLstmClassifier::new(&outcome.model, space);
                let d = dev.map(|c| score(&clf, c)).transpose()?;
                let t = score(&clf, test)?;
                (d, t, Some(outcome.model))
            }
        };
        Ok((
            RunReport {
                seed,
                train_instances: train.len(),
                target_language_train_instances,
                epochs,
                dev: dev_report,
                test: test_report,
            },
            model,
        ))
    }

    /// Runs independent cells in parallel; results come back in spec order.
    pub fn run_all(&self, specs: &[ExperimentSpec]) -> Vec<Result<ExperimentOutcome>> {
        specs.par_iter().map(|s| self.run(s)).collect()
    }
}

/// Specs for a full table: every training combination against every target.
///
/// With `shots > 0`, cells whose target language is among the training
/// languages stay monolingual, and FR stays zero-shot.
pub fn grid_specs(shots: usize, seed: u64, model: ModelKind) -> Vec<ExperimentSpec> {
    let mut out = Vec::new();
    for combo in train_combinations() {
        for target in Target::ALL {
            let tl = target.language();
            let cell_shots = if combo.contains(&tl) || !tl.has_training_data() {
                0
            } else {
                shots
            };
            let mut spec = ExperimentSpec::new(combo.iter().copied(), target, cell_shots, seed);
            spec.model = model;
            out.push(spec);
        }
    }
    out
}
