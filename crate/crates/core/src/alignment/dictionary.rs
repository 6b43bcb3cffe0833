use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::Language;
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};

/// Word-translation pairs used as alignment anchors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BilingualDictionary {
    pub source_language: Language,
    pub target_language: Language,
    pairs: Vec<(String, String)>,
}

/// Dictionary pairs resolved to table ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedPairs {
    pub pairs: Vec<(usize, usize)>,
    /// Pairs dropped because a word was missing from its table.
    pub filtered: usize,
}

impl BilingualDictionary {
    /// Builds a dictionary, dropping duplicate pairs (first occurrence kept).
    pub fn new(
        source_language: Language,
        target_language: Language,
        pairs: impl IntoIterator<Item = (String, String)>,
    ) -> Self {
        let mut seen = HashSet::new();
        let pairs = pairs.into_iter().filter(|p| seen.insert(p.clone())).collect();
        BilingualDictionary {
            source_language,
            target_language,
            pairs,
        }
    }

    /// Parses the two-words-per-line format. Lines with any other number of
    /// whitespace-separated fields are multi-word entries and are skipped.
    pub fn parse<R: BufRead>(reader: R, source_language: Language, target_language: Language) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut skipped = 0usize;
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                [s, t] => pairs.push((s.to_string(), t.to_string())),
                _ => skipped += 1,
            }
        }
        if skipped > 0 {
            log::info!("skipped {skipped} multi-word {source_language}-{target_language} entries");
        }
        Ok(Self::new(source_language, target_language, pairs))
    }

    pub fn load_path(path: &Path, source_language: Language, target_language: Language) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file), source_language, target_language)
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Swaps the direction: (s, t) becomes (t, s).
    pub fn reversed(&self) -> Self {
        BilingualDictionary {
            source_language: self.target_language,
            target_language: self.source_language,
            pairs: self.pairs.iter().map(|(s, t)| (t.clone(), s.clone())).collect(),
        }
    }

    /// Keeps the pairs whose words exist in both tables.
    pub fn resolve(&self, src: &EmbeddingTable, tgt: &EmbeddingTable) -> ResolvedPairs {
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for (s, t) in &self.pairs {
            if let (Some(i), Some(j)) = (src.rank(s), tgt.rank(t)) {
                pairs.push((i, j));
            }
        }
        ResolvedPairs {
            filtered: self.pairs.len() - pairs.len(),
            pairs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_dedups() {
        let text = "the der\nthe der\ncat Katze\nice cream Eis\n\nthe die\n";
        let d = BilingualDictionary::parse(text.as_bytes(), Language::En, Language::De).unwrap();
        assert_eq!(
            d.pairs(),
            &[
                ("the".to_string(), "der".to_string()),
                ("cat".into(), "Katze".into()),
                ("the".into(), "die".into())
            ]
        );
        let r = d.reversed();
        assert_eq!(r.source_language, Language::De);
        assert_eq!(r.pairs()[1], ("Katze".to_string(), "cat".to_string()));
    }

    #[test]
    fn resolve_counts_filtered() {
        let en = EmbeddingTable::from_rows(Language::En, 1, [("a", vec![1.0]), ("b", vec![1.0])]).unwrap();
        let de = EmbeddingTable::from_rows(Language::De, 1, [("x", vec![1.0])]).unwrap();
        let d = BilingualDictionary::new(
            Language::En,
            Language::De,
            [
                ("a".into(), "x".into()),
                ("b".into(), "y".into()),
                ("c".into(), "x".into()),
            ],
        );
        let r = d.resolve(&en, &de);
        assert_eq!(r.pairs, vec![(0, 0)]);
        assert_eq!(r.filtered, 2);
    }
}
