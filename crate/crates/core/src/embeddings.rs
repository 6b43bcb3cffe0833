//! Word-vector tables in fastText `.vec` text format.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::Language;
use crate::error::{Error, Result};

/// Vocabulary cap applied when loading, matching common alignment practice.
pub const DEFAULT_MAX_VOCAB: usize = 200_000;

/// A language-tagged word -> vector map.
///
/// Row `i` belongs to the word of frequency rank `i`; fastText files are
/// frequency-sorted, so rank is load order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    language: Language,
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lookup<'a> {
    pub vector: Cow<'a, [f32]>,
    pub oov: bool,
}

impl EmbeddingTable {
    pub fn new(language: Language, dim: usize) -> Self {
        EmbeddingTable {
            language,
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    /// Builds a table from `(word, vector)` rows. Later duplicates are skipped.
    pub fn from_rows<I, S>(language: Language, dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut table = EmbeddingTable::new(language, dim);
        for (word, v) in rows {
            table.push(word, &v)?;
        }
        Ok(table)
    }

    /// Appends a word at the next rank. Returns false, storing nothing, if the
    /// word is already present.
    pub fn push(&mut self, word: impl Into<String>, vector: &[f32]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector of length {} in a table of dimension {}",
                vector.len(),
                self.dim
            )));
        }
        let word = word.into();
        if self.index.contains_key(&word) {
            return Ok(false);
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, rank: usize) -> &str {
        &self.words[rank]
    }

    pub fn rank(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn row(&self, rank: usize) -> &[f32] {
        &self.data[rank * self.dim..(rank + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.rank(word).map(|r| self.row(r))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.words
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim.max(1)))
    }

    /// Exact match, then lowercase match, then a zero vector flagged OOV.
    pub fn lookup(&self, token: &str) -> Lookup<'_> {
        if let Some(v) = self.get(token) {
            return Lookup {
                vector: Cow::Borrowed(v),
                oov: false,
            };
        }
        let lower = token.to_lowercase();
        if lower != token {
            if let Some(v) = self.get(&lower) {
                return Lookup {
                    vector: Cow::Borrowed(v),
                    oov: false,
                };
            }
        }
        Lookup {
            vector: Cow::Owned(vec![0.0; self.dim]),
            oov: true,
        }
    }

    /// Scales every row to unit L2 norm. Zero rows are left as they are and
    /// counted in the second return value.
    pub fn normalize(&self) -> (EmbeddingTable, usize) {
        let mut out = self.clone();
        let mut zero_rows = 0;
        for row in out.data.chunks_exact_mut(self.dim.max(1)) {
            let norm = row.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
            if norm == 0.0 {
                zero_rows += 1;
                continue;
            }
            for x in row.iter_mut() {
                *x = (f64::from(*x) / norm) as f32;
            }
        }
        if zero_rows > 0 {
            log::warn!("{zero_rows} zero vectors left unnormalized in {} table", self.language);
        }
        (out, zero_rows)
    }

    /// Returns a copy with every row replaced by `f(row)`; words and ranks kept.
    pub(crate) fn map_rows(&self, mut f: impl FnMut(&[f32]) -> Vec<f32>) -> EmbeddingTable {
        let mut out = self.clone();
        for (rank, chunk) in out.data.chunks_exact_mut(self.dim.max(1)).enumerate() {
            let mapped = f(&self.data[rank * self.dim..(rank + 1) * self.dim]);
            chunk.copy_from_slice(&mapped);
        }
        out
    }

    /// Loads the first `max_vocab` distinct words of a `.vec` stream.
    pub fn load_text_format<R: BufRead>(reader: R, language: Language, max_vocab: usize) -> Result<Self> {
        if max_vocab == 0 {
            return Err(Error::invalid("max_vocab must be positive"));
        }
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(line) => line.map_err(|e| Error::Embedding {
                line: 1,
                message: e.to_string(),
            })?,
            None => {
                return Err(Error::Embedding {
                    line: 1,
                    message: "missing header".into(),
                })
            }
        };
        let (declared, dim) = parse_header(&header)?;
        let mut table = EmbeddingTable::new(language, dim);
        let mut duplicates = 0usize;
        let mut values = Vec::with_capacity(dim);
        for (idx, line) in lines.enumerate() {
            if table.len() >= max_vocab {
                break;
            }
            let lineno = idx + 2;
            let line = line.map_err(|e| Error::Embedding {
                line: lineno,
                message: e.to_string(),
            })?;
            let line = line.trim_end_matches(['\r', '\n', ' ']);
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default();
            values.clear();
            for p in parts {
                let v: f32 = p.parse().map_err(|_| Error::Embedding {
                    line: lineno,
                    message: format!("'{p}' is not a number"),
                })?;
                values.push(v);
            }
            if values.len() != dim {
                return Err(Error::Embedding {
                    line: lineno,
                    message: format!("expected {dim} values, found {}", values.len()),
                });
            }
            if !table.push(word, &values)? {
                duplicates += 1;
            }
        }
        if duplicates > 0 {
            log::warn!("{duplicates} duplicate words skipped while loading {language} vectors");
        }
        if table.len() < declared.min(max_vocab) {
            log::warn!("{language} header declares {declared} words, loaded {}", table.len());
        }
        Ok(table)
    }

    pub fn load_path(path: &Path, language: Language, max_vocab: usize) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::load_text_format(BufReader::new(file), language, max_vocab)
    }

    /// Writes the table as `.vec` text. Values use the shortest decimal that
    /// round-trips, so output is reproducible byte for byte.
    pub fn write_text_format<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (word, row) in self.rows() {
            out.write_all(word.as_bytes())?;
            for v in row {
                write!(out, " {v}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn write_path(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_text_format(file).map_err(|e| Error::io(path, e))
    }
}

/// Per-language tables that share one vector space (after alignment).
#[derive(Debug, Clone, Default)]
pub struct SharedSpace {
    tables: BTreeMap<Language, EmbeddingTable>,
}

impl SharedSpace {
    pub fn new(tables: impl IntoIterator<Item = EmbeddingTable>) -> Result<Self> {
        let mut out = BTreeMap::new();
        let mut dim = None;
        for t in tables {
            if *dim.get_or_insert(t.dim()) != t.dim() {
                return Err(Error::invalid("shared-space tables differ in dimension"));
            }
            out.insert(t.language(), t);
        }
        Ok(SharedSpace { tables: out })
    }

    /// Loads `<dir>/<iso>.vec` for each language.
    pub fn load_dir(dir: &Path, languages: &[Language], max_vocab: usize) -> Result<Self> {
        let mut tables = Vec::new();
        for &lang in languages {
            let path = dir.join(format!("{}.vec", lang.iso()));
            if !path.is_file() {
                return Err(Error::missing(format!("{lang} embeddings"), path));
            }
            tables.push(EmbeddingTable::load_path(&path, lang, max_vocab)?);
        }
        Self::new(tables)
    }

    pub fn dim(&self) -> Option<usize> {
        self.tables.values().next().map(EmbeddingTable::dim)
    }

    pub fn table(&self, language: Language) -> Option<&EmbeddingTable> {
        self.tables.get(&language)
    }

    pub fn languages(&self) -> impl Iterator<Item = Language> + '_ {
        self.tables.keys().copied()
    }
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let bad = || Error::Embedding {
        line: 1,
        message: format!("malformed header '{line}', expected 'vocab_size dim'"),
    };
    let mut it = line.split_whitespace();
    let n = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let d: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    if it.next().is_some() || d == 0 {
        return Err(bad());
    }
    Ok((n, d))
}
