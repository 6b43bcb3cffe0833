use serde::{Deserialize, Serialize};

use super::{Corpus, Instance};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub kept: usize,
    /// Indices (into the input corpus) of instances whose target did not
    /// survive cleaning.
    pub dropped: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Keep,
    Space,
    Unknown,
}

fn classify(ch: char) -> CharClass {
    if ch == '\u{FFFD}' {
        CharClass::Unknown
    } else if ch.is_whitespace() {
        CharClass::Space
    } else if ch.is_control() {
        CharClass::Unknown
    } else {
        CharClass::Keep
    }
}

/// Result of cleaning one sentence: the text plus, for every kept character
/// of the original, its byte position in the cleaned text.
struct Cleaned {
    text: String,
    // (original byte offset, class, byte offset in `text` when kept)
    map: Vec<(usize, CharClass, Option<usize>)>,
}

fn clean(sentence: &str) -> Cleaned {
    let mut text = String::with_capacity(sentence.len());
    let mut map = Vec::with_capacity(sentence.len());
    let mut pending_space = false;
    for (pos, ch) in sentence.char_indices() {
        let class = classify(ch);
        match class {
            CharClass::Keep => {
                if pending_space && !text.is_empty() {
                    text.push(' ');
                }
                pending_space = false;
                map.push((pos, class, Some(text.len())));
                text.push(ch);
            }
            CharClass::Space => {
                pending_space = true;
                map.push((pos, class, None));
            }
            CharClass::Unknown => map.push((pos, class, None)),
        }
    }
    Cleaned { text, map }
}

/// Removes replacement and control characters, turns tab/newline into
/// spaces, collapses whitespace runs and trims the ends.
///
/// Offsets are remapped onto the cleaned sentence. An instance is dropped when
/// its span contained an unknown character or nothing printable.
pub fn preprocess(corpus: &Corpus) -> (Corpus, PreprocessReport) {
    let mut report = PreprocessReport::default();
    let mut instances = Vec::with_capacity(corpus.instances.len());
    let mut cleaned: Option<(String, Cleaned)> = None;

    for (idx, inst) in corpus.instances.iter().enumerate() {
        if cleaned.as_ref().is_none_or(|(s, _)| *s != inst.sentence) {
            cleaned = Some((inst.sentence.clone(), clean(&inst.sentence)));
        }
        let (_, cleaned) = cleaned.as_ref().expect("set above");
        match remap(inst, cleaned) {
            Some(i) => instances.push(i),
            None => report.dropped.push(idx),
        }
    }
    report.kept = instances.len();
    if !report.dropped.is_empty() {
        log::warn!(
            "preprocessing dropped {} of {} instances",
            report.dropped.len(),
            corpus.instances.len()
        );
    }
    let out = Corpus {
        language: corpus.language,
        genre: corpus.genre,
        split: corpus.split,
        instances,
    };
    (out, report)
}

fn remap(inst: &Instance, cleaned: &Cleaned) -> Option<Instance> {
    let inside = cleaned
        .map
        .iter()
        .filter(|(pos, _, _)| *pos >= inst.start && *pos < inst.end);
    let mut first: Option<usize> = None;
    let mut last_end = 0;
    for &(pos, class, new_pos) in inside {
        match class {
            CharClass::Unknown => return None,
            CharClass::Space => {}
            CharClass::Keep => {
                let np = new_pos.expect("kept characters have a position");
                first.get_or_insert(np);
                let ch_len = inst.sentence[pos..].chars().next().map_or(1, char::len_utf8);
                last_end = np + ch_len;
            }
        }
    }
    let start = first?;
    let mut out = inst.clone();
    out.sentence = cleaned.text.clone();
    out.start = start;
    out.end = last_end;
    out.target = cleaned.text[start..last_end].to_string();
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusLanguage, Genre, Language, Provenance, Split};

    fn inst(id: &str, sentence: &str, start: usize, end: usize) -> Instance {
        Instance {
            hit_id: id.into(),
            sentence: sentence.into(),
            start,
            end,
            target: sentence[start..end].into(),
            n_native: 10,
            n_nonnative: 10,
            n_native_complex: 0,
            n_nonnative_complex: 0,
            binary_label: 0,
            prob_label: 0.0,
            provenance: Provenance {
                language: Language::En,
                genre: Genre::News,
            },
        }
    }

    fn corpus(instances: Vec<Instance>) -> Corpus {
        Corpus::new(
            CorpusLanguage::Single(Language::En),
            Genre::News,
            Split::Train,
            instances,
        )
        .unwrap()
    }

    #[test]
    fn collapses_double_space() {
        let (c, r) = preprocess(&corpus(vec![inst("a", "a  b", 3, 4)]));
        let i = &c.instances[0];
        assert_eq!(i.sentence, "a b");
        assert_eq!((i.start, i.end), (2, 3));
        assert!(r.dropped.is_empty());
    }

    #[test]
    fn clean_sentence_is_identity() {
        let input = corpus(vec![inst("a", "The cat sat.", 4, 7), inst("b", "The cat sat.", 8, 11)]);
        let (c, r) = preprocess(&input);
        assert_eq!(c, input);
        assert_eq!(r.kept, 2);
    }

    #[test]
    fn replacement_char_in_target_drops_instance() {
        let s = "a b\u{FFFD}c d";
        let (c, r) = preprocess(&corpus(vec![inst("x", s, 2, s.len() - 2), inst("y", s, 0, 1)]));
        assert_eq!(r.dropped, vec![0]);
        assert_eq!(c.instances.len(), 1);
        assert_eq!(c.instances[0].sentence, "a bc d");
    }

    #[test]
    fn multiword_target_whitespace_is_normalized() {
        let s = "in the\tlong  run";
        let (c, _) = preprocess(&corpus(vec![inst("m", s, 7, s.len())]));
        let i = &c.instances[0];
        assert_eq!(i.sentence, "in the long run");
        assert_eq!(i.target, "long run");
    }
}
