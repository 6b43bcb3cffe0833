//! CWI 2018 shared-task corpora: parsing, cleaning, merging, shot sampling and
//! the token-level view consumed by the tagger.

mod ops;
mod preprocess;
mod sequences;
mod tokenize;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ops::{merge, sample_shots, stats, CorpusStats};
pub use preprocess::{preprocess, PreprocessReport};
pub use sequences::{to_sequences, TokenSequence};
pub use tokenize::{tokenize, Token};

/// Number of tab-separated fields in a CWI 2018 record.
pub const FIELD_COUNT: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "EN")]
    En,
    #[serde(rename = "DE")]
    De,
    #[serde(rename = "ES")]
    Es,
    #[serde(rename = "FR")]
    Fr,
}

impl Language {
    pub const ALL: [Language; 4] = [Language::En, Language::De, Language::Es, Language::Fr];

    pub fn code(self) -> &'static str {
        match self {
            Language::En => "EN",
            Language::De => "DE",
            Language::Es => "ES",
            Language::Fr => "FR",
        }
    }

    /// Lowercase ISO code, as used in embedding and dictionary file names.
    pub fn iso(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::De => "de",
            Language::Es => "es",
            Language::Fr => "fr",
        }
    }

    /// Whether the shared task released train/dev data for this language.
    pub fn has_training_data(self) -> bool {
        self != Language::Fr
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "en" | "english" => Ok(Language::En),
            "de" | "german" => Ok(Language::De),
            "es" | "spanish" => Ok(Language::Es),
            "fr" | "french" => Ok(Language::Fr),
            _ => Err(Error::invalid(format!("unknown language '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Genre {
    Wikipedia,
    WikiNews,
    News,
    Mixed,
}

impl Genre {
    pub fn name(self) -> &'static str {
        match self {
            Genre::Wikipedia => "Wikipedia",
            Genre::WikiNews => "WikiNews",
            Genre::News => "News",
            Genre::Mixed => "Mixed",
        }
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Genre {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wikipedia" => Ok(Genre::Wikipedia),
            "wikinews" => Ok(Genre::WikiNews),
            "news" => Ok(Genre::News),
            "mixed" => Ok(Genre::Mixed),
            _ => Err(Error::invalid(format!("unknown genre '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            _ => Err(Error::invalid(format!("unknown split '{s}'"))),
        }
    }
}

/// Language tag of a whole corpus; merged corpora of several languages are `Mixed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum CorpusLanguage {
    Single(Language),
    Mixed,
}

impl CorpusLanguage {
    pub fn single(self) -> Option<Language> {
        match self {
            CorpusLanguage::Single(l) => Some(l),
            CorpusLanguage::Mixed => None,
        }
    }
}

impl fmt::Display for CorpusLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusLanguage::Single(l) => l.fmt(f),
            CorpusLanguage::Mixed => f.write_str("Mixed"),
        }
    }
}

impl From<CorpusLanguage> for String {
    fn from(l: CorpusLanguage) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for CorpusLanguage {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        if s.eq_ignore_ascii_case("mixed") {
            Ok(CorpusLanguage::Mixed)
        } else {
            s.parse().map(CorpusLanguage::Single)
        }
    }
}

/// Where an instance came from. Survives merging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub language: Language,
    pub genre: Genre,
}

/// One annotated target span inside a sentence.
///
/// `start`/`end` are byte offsets into `sentence`, end exclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub hit_id: String,
    pub sentence: String,
    pub start: usize,
    pub end: usize,
    pub target: String,
    pub n_native: u32,
    pub n_nonnative: u32,
    pub n_native_complex: u32,
    pub n_nonnative_complex: u32,
    pub binary_label: u8,
    pub prob_label: f64,
    pub provenance: Provenance,
}

impl Instance {
    pub fn is_complex(&self) -> bool {
        self.binary_label == 1
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| {
            Err(Error::Validation {
                hit_id: self.hit_id.clone(),
                message,
            })
        };
        if self.start >= self.end || self.end > self.sentence.len() {
            return fail(format!(
                "offsets {}..{} out of range for sentence of {} bytes",
                self.start,
                self.end,
                self.sentence.len()
            ));
        }
        match self.sentence.get(self.start..self.end) {
            Some(span) if span == self.target => {}
            Some(span) => {
                return fail(format!(
                    "span {}..{} is {:?}, target is {:?}",
                    self.start, self.end, span, self.target
                ))
            }
            None => return fail("offsets are not on character boundaries".into()),
        }
        if self.n_native_complex > self.n_native || self.n_nonnative_complex > self.n_nonnative {
            return fail("more complex votes than annotators".into());
        }
        if self.binary_label > 1 {
            return fail(format!("binary label {} not in {{0,1}}", self.binary_label));
        }
        if !(0.0..=1.0).contains(&self.prob_label) {
            return fail(format!("probabilistic label {} not in [0,1]", self.prob_label));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub language: CorpusLanguage,
    pub genre: Genre,
    pub split: Split,
    pub instances: Vec<Instance>,
}

impl Corpus {
    /// Builds a corpus, checking every instance and the FR-is-test-only rule.
    pub fn new(language: CorpusLanguage, genre: Genre, split: Split, instances: Vec<Instance>) -> Result<Self> {
        let corpus = Corpus {
            language,
            genre,
            split,
            instances,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn empty(language: CorpusLanguage, genre: Genre, split: Split) -> Self {
        Corpus {
            language,
            genre,
            split,
            instances: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.language == CorpusLanguage::Single(Language::Fr) && self.split != Split::Test {
            return Err(Error::invalid(format!(
                "French corpora are test-only, got split '{}'",
                self.split
            )));
        }
        for inst in &self.instances {
            inst.validate()?;
            if let CorpusLanguage::Single(lang) = self.language {
                if inst.provenance.language != lang {
                    return Err(Error::Validation {
                        hit_id: inst.hit_id.clone(),
                        message: format!("instance language {} inside {} corpus", inst.provenance.language, lang),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// Parses a CWI 2018 TSV stream (no header, 11 fields per line).
///
/// Offsets in the official release count characters, not bytes. Byte offsets
/// are tried first; when they do not select the target, character offsets are
/// converted to bytes. Records matching neither are rejected.
pub fn parse_tsv<R: BufRead>(reader: R, language: Language, genre: Genre, split: Split) -> Result<Corpus> {
    let provenance = Provenance { language, genre };
    let mut instances = Vec::new();
    let mut label_mismatches = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let inst = parse_record(line, lineno, provenance)?;
        let any_votes = inst.n_native_complex + inst.n_nonnative_complex > 0;
        if any_votes != inst.is_complex() {
            label_mismatches += 1;
        }
        instances.push(inst);
    }
    if label_mismatches > 0 {
        log::warn!(
            "{label_mismatches} {language} {genre} {split} records have a binary label that disagrees with annotator counts"
        );
    }
    Corpus::new(CorpusLanguage::Single(language), genre, split, instances)
}

fn parse_record(line: &str, lineno: usize, provenance: Provenance) -> Result<Instance> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != FIELD_COUNT {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected {FIELD_COUNT} fields, found {}", fields.len()),
        });
    }
    fn num<T: FromStr>(field: &str, name: &str, lineno: usize) -> Result<T> {
        field.trim().parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("field {name}: '{field}' is not a valid number"),
        })
    }
    let sentence = fields[1].to_string();
    let target = fields[4].to_string();
    let raw_start: usize = num(fields[2], "start", lineno)?;
    let raw_end: usize = num(fields[3], "end", lineno)?;
    let (start, end) = resolve_offsets(&sentence, &target, raw_start, raw_end);
    let label: u32 = num(fields[9], "binary_label", lineno)?;
    let inst = Instance {
        hit_id: fields[0].to_string(),
        sentence,
        start,
        end,
        target,
        n_native: num(fields[5], "n_native", lineno)?,
        n_nonnative: num(fields[6], "n_nonnative", lineno)?,
        n_native_complex: num(fields[7], "n_native_complex", lineno)?,
        n_nonnative_complex: num(fields[8], "n_nonnative_complex", lineno)?,
        binary_label: u8::try_from(label).unwrap_or(u8::MAX),
        prob_label: num(fields[10], "prob_label", lineno)?,
        provenance,
    };
    inst.validate()?;
    Ok(inst)
}

fn resolve_offsets(sentence: &str, target: &str, start: usize, end: usize) -> (usize, usize) {
    if sentence.get(start..end) == Some(target) {
        return (start, end);
    }
    let byte_of = |chars: usize| -> Option<usize> {
        sentence
            .char_indices()
            .map(|(b, _)| b)
            .chain(std::iter::once(sentence.len()))
            .nth(chars)
    };
    match (byte_of(start), byte_of(end)) {
        (Some(s), Some(e)) if s < e && sentence.get(s..e) == Some(target) => (s, e),
        _ => (start, end),
    }
}

/// Writes instances back in CWI 2018 TSV layout, byte offsets.
pub fn write_tsv<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    for inst in &corpus.instances {
        writeln!(out, "{}", format_record(inst)).map_err(|e| Error::io("<tsv output>", e))?;
    }
    Ok(())
}

pub fn format_record(inst: &Instance) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        inst.hit_id,
        inst.sentence,
        inst.start,
        inst.end,
        inst.target,
        inst.n_native,
        inst.n_nonnative,
        inst.n_native_complex,
        inst.n_nonnative_complex,
        inst.binary_label,
        inst.prob_label
    )
}
