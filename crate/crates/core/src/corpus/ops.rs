use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusLanguage, Genre};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub complex: usize,
    pub noncomplex: usize,
    pub instances: usize,
}

impl std::ops::Add for CorpusStats {
    type Output = CorpusStats;

    fn add(self, rhs: CorpusStats) -> CorpusStats {
        CorpusStats {
            complex: self.complex + rhs.complex,
            noncomplex: self.noncomplex + rhs.noncomplex,
            instances: self.instances + rhs.instances,
        }
    }
}

pub fn stats(corpus: &Corpus) -> CorpusStats {
    let complex = corpus.instances.iter().filter(|i| i.is_complex()).count();
    CorpusStats {
        complex,
        noncomplex: corpus.instances.len() - complex,
        instances: corpus.instances.len(),
    }
}

/// Concatenates corpora of one split.
///
/// The result keeps a single language or genre tag only when every input
/// agrees on it; otherwise the tag is `Mixed`. Per-instance provenance is
/// untouched. An empty input list yields an empty mixed training corpus.
pub fn merge(corpora: &[&Corpus]) -> Result<Corpus> {
    let Some(first) = corpora.first() else {
        return Ok(Corpus::empty(CorpusLanguage::Mixed, Genre::Mixed, super::Split::Train));
    };
    if let Some(other) = corpora.iter().find(|c| c.split != first.split) {
        return Err(Error::invalid(format!(
            "cannot merge {} and {} splits",
            first.split, other.split
        )));
    }
    let language = if corpora.iter().all(|c| c.language == first.language) {
        first.language
    } else {
        CorpusLanguage::Mixed
    };
    let genre = if corpora.iter().all(|c| c.genre == first.genre) {
        first.genre
    } else {
        Genre::Mixed
    };
    let instances = corpora.iter().flat_map(|c| c.instances.iter().cloned()).collect();
    Ok(Corpus {
        language,
        genre,
        split: first.split,
        instances,
    })
}

/// Draws `k` distinct instances uniformly at random, seed-deterministic.
///
/// The selected instances keep their relative corpus order.
pub fn sample_shots(corpus: &Corpus, k: usize, seed: u64) -> Result<Corpus> {
    if k > corpus.len() {
        return Err(Error::invalid(format!(
            "cannot sample {k} shots from a corpus of {} instances",
            corpus.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, corpus.len(), k).into_vec();
    picked.sort_unstable();
    Ok(Corpus {
        language: corpus.language,
        genre: corpus.genre,
        split: corpus.split,
        instances: picked.into_iter().map(|i| corpus.instances[i].clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Instance, Language, Provenance, Split};

    fn synthetic(lang: Language, n: usize, split: Split) -> Corpus {
        let instances = (0..n)
            .map(|i| Instance {
                hit_id: format!("{lang}-{i}"),
                sentence: "The cat sat.".into(),
                start: 4,
                end: 7,
                target: "cat".into(),
                n_native: 10,
                n_nonnative: 10,
                n_native_complex: (i % 3 == 0) as u32,
                n_nonnative_complex: 0,
                binary_label: (i % 3 == 0) as u8,
                prob_label: if i % 3 == 0 { 0.05 } else { 0.0 },
                provenance: Provenance {
                    language: lang,
                    genre: Genre::Wikipedia,
                },
            })
            .collect();
        Corpus::new(CorpusLanguage::Single(lang), Genre::Wikipedia, split, instances).unwrap()
    }

    #[test]
    fn merge_counts_add_up() {
        // Training-set sizes of the English and German shared-task releases.
        let en = synthetic(Language::En, 27_299, Split::Train);
        let de = synthetic(Language::De, 6_151, Split::Train);
        let m = merge(&[&en, &de]).unwrap();
        assert_eq!(m.len(), 33_450);
        assert_eq!(m.language, CorpusLanguage::Mixed);
        assert_eq!(m.instances[27_299].provenance.language, Language::De);
        assert_eq!(stats(&m), stats(&en) + stats(&de));
    }

    #[test]
    fn merge_single_is_identity() {
        let en = synthetic(Language::En, 5, Split::Dev);
        assert_eq!(merge(&[&en]).unwrap(), en);
    }

    #[test]
    fn merge_empty() {
        assert!(merge(&[]).unwrap().is_empty());
    }

    #[test]
    fn merge_rejects_mixed_splits() {
        let a = synthetic(Language::En, 2, Split::Train);
        let b = synthetic(Language::En, 2, Split::Dev);
        assert!(merge(&[&a, &b]).is_err());
    }

    #[test]
    fn shots_are_deterministic_and_distinct() {
        let c = synthetic(Language::Es, 500, Split::Train);
        let a = sample_shots(&c, 100, 7).unwrap();
        let b = sample_shots(&c, 100, 7).unwrap();
        assert_eq!(a, b);
        let mut ids: Vec<_> = a.instances.iter().map(|i| i.hit_id.clone()).collect();
        ids.dedup();
        assert_eq!(ids.len(), 100);
        assert_eq!(sample_shots(&c, 1, 3).unwrap().len(), 1);
        assert!(sample_shots(&c, 0, 3).unwrap().is_empty());
        assert!(sample_shots(&c, 501, 3).is_err());
    }

    #[test]
    fn stats_of_empty() {
        let c = Corpus::empty(CorpusLanguage::Single(Language::De), Genre::Wikipedia, Split::Dev);
        assert_eq!(stats(&c), CorpusStats::default());
    }
}
