//! Locating and loading the CWI 2018 files under a data root.
//!
//! Files are recognised by name anywhere below the root, so both the
//! official `traindevset/<language>/` + `testset/<language>/` layout and a flat
//! directory work:
//!
//! ```text
//! News_Train.tsv  WikiNews_Dev.tsv  Wikipedia_Test.tsv     English
//! German_Train.tsv  Spanish_Dev.tsv  French_Test.tsv       other languages
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use crate::corpus::{self, merge, preprocess, Corpus, Genre, Language, Split};
use crate::error::{Error, Result};

pub type CorpusKey = (Language, Genre, Split);

/// Genre of the non-English sections, which come from Wikipedia.
pub const DEFAULT_GENRE: Genre = Genre::Wikipedia;

/// Maps a file name such as `WikiNews_Dev.tsv` to what it holds.
pub fn classify_file_name(name: &str) -> Option<CorpusKey> {
    let stem = name.strip_suffix(".tsv")?;
    let (prefix, split) = stem.rsplit_once('_')?;
    let split: Split = split.parse().ok()?;
    let (language, genre) = match prefix.to_ascii_lowercase().as_str() {
        "news" => (Language::En, Genre::News),
        "wikinews" => (Language::En, Genre::WikiNews),
        "wikipedia" => (Language::En, Genre::Wikipedia),
        "german" => (Language::De, DEFAULT_GENRE),
        "spanish" => (Language::Es, DEFAULT_GENRE),
        "french" => (Language::Fr, DEFAULT_GENRE),
        _ => return None,
    };
    Some((language, genre, split))
}

/// The file name a corpus is expected under.
pub fn expected_file_name((language, genre, split): CorpusKey) -> String {
    let prefix = match language {
        Language::En => genre.name(),
        Language::De => "German",
        Language::Es => "Spanish",
        Language::Fr => "French",
    };
    let split = match split {
        Split::Train => "Train",
        Split::Dev => "Dev",
        Split::Test => "Test",
    };
    format!("{prefix}_{split}.tsv")
}

/// Index of the corpus files found under a data root.
#[derive(Debug, Clone, Default)]
pub struct DataIndex {
    pub root: PathBuf,
    pub files: BTreeMap<CorpusKey, PathBuf>,
}

impl DataIndex {
    pub fn discover(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            return Err(Error::missing("data root directory", root));
        }
        let mut files = BTreeMap::new();
        for entry in WalkDir::new(root).max_depth(4).sort_by_file_name() {
            let entry = entry.map_err(|e| Error::invalid(format!("walking {}: {e}", root.display())))?;
            if !entry.file_type().is_file() {
                continue;
            }
            let Some(key) = entry.file_name().to_str().and_then(classify_file_name) else {
                continue;
            };
            if let Some(prev) = files.insert(key, entry.path().to_path_buf()) {
                return Err(Error::invalid(format!(
                    "two files for {} {} {}: {} and {}",
                    key.0,
                    key.1,
                    key.2,
                    prev.display(),
                    entry.path().display()
                )));
            }
        }
        Ok(DataIndex {
            root: root.to_path_buf(),
            files,
        })
    }

    pub fn path(&self, key: CorpusKey) -> Result<&Path> {
        self.files.get(&key).map(PathBuf::as_path).ok_or_else(|| {
            Error::missing(
                format!("{} {} {} corpus", key.0, key.1, key.2),
                self.root.join(expected_file_name(key)),
            )
        })
    }
}

/// Parses one TSV file. Errors carry the file name.
pub fn load_corpus(path: &Path, language: Language, genre: Genre, split: Split) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    corpus::parse_tsv(BufReader::new(file), language, genre, split).map_err(|e| e.in_file(path))
}

/// Preprocessed corpora, loaded once.
#[derive(Debug, Clone, Default)]
pub struct CorpusStore {
    pub root: PathBuf,
    corpora: BTreeMap<CorpusKey, Corpus>,
}

impl CorpusStore {
    pub fn load(index: &DataIndex) -> Result<Self> {
        let mut corpora = BTreeMap::new();
        for (&key, path) in &index.files {
            let raw = load_corpus(path, key.0, key.1, key.2)?;
            let (clean, report) = preprocess(&raw);
            if !report.dropped.is_empty() {
                log::warn!(
                    "{}: dropped {} instances during preprocessing",
                    path.display(),
                    report.dropped.len()
                );
            }
            corpora.insert(key, clean);
        }
        Ok(CorpusStore {
            root: index.root.clone(),
            corpora,
        })
    }

    pub fn from_corpora(corpora: impl IntoIterator<Item = Corpus>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for c in corpora {
            let lang = c
                .language
                .single()
                .ok_or_else(|| Error::invalid("store corpora must be single-language"))?;
            if map.insert((lang, c.genre, c.split), c).is_some() {
                return Err(Error::invalid("duplicate corpus in store"));
            }
        }
        Ok(CorpusStore {
            root: PathBuf::new(),
            corpora: map,
        })
    }

    pub fn get(&self, key: CorpusKey) -> Result<&Corpus> {
        self.corpora.get(&key).ok_or_else(|| {
            Error::missing(
                format!("{} {} {} corpus", key.0, key.1, key.2),
                self.root.join(expected_file_name(key)),
            )
        })
    }

    pub fn contains(&self, key: CorpusKey) -> bool {
        self.corpora.contains_key(&key)
    }

    /// All training data of a language; for English the three genres
    /// concatenated in News, WikiNews, Wikipedia order.
    pub fn language_train(&self, language: Language) -> Result<Corpus> {
        if language == Language::En {
            let parts = [Genre::News, Genre::WikiNews, Genre::Wikipedia]
                .into_iter()
                .map(|g| self.get((Language::En, g, Split::Train)))
                .collect::<Result<Vec<_>>>()?;
            merge(&parts)
        } else {
            Ok(self.get((language, DEFAULT_GENRE, Split::Train))?.clone())
        }
    }
}
