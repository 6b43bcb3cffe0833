mod common;

use std::collections::BTreeMap;
use std::fs;

use cwi_transfer::corpus::{
    merge, parse_tsv, preprocess, stats, to_sequences, tokenize, write_tsv, Corpus, CorpusLanguage, Genre, Language,
    Split,
};
use cwi_transfer::eval::{classify_file_name, load_corpus};
use proptest::prelude::*;

use common::{fixtures, instance};

#[test]
fn fixture_counts_match_a_plain_recount() {
    let manifest: BTreeMap<String, BTreeMap<String, usize>> =
        serde_json::from_str(&fs::read_to_string(fixtures().join("counts.json")).unwrap()).unwrap();
    for (name, expected) in &manifest {
        let path = fixtures().join("data").join(name);
        let text = fs::read_to_string(&path).unwrap();
        let labels: Vec<&str> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split('\t').nth(9).unwrap())
            .collect();
        let complex = labels.iter().filter(|l| **l == "1").count();
        let (lang, genre, split) = classify_file_name(name).unwrap();
        let parsed = stats(&load_corpus(&path, lang, genre, split).unwrap());
        assert_eq!(parsed.complex, complex, "{name}");
        assert_eq!(parsed.noncomplex, labels.len() - complex, "{name}");
        assert_eq!(parsed.complex, expected["complex"], "{name}");
        assert_eq!(parsed.noncomplex, expected["noncomplex"], "{name}");
    }
}

#[test]
fn fixture_sequences_cover_every_instance() {
    let path = fixtures().join("data/German_Train.tsv");
    let corpus = load_corpus(&path, Language::De, Genre::Wikipedia, Split::Train).unwrap();
    let seqs = to_sequences(&corpus).unwrap();
    let covered: usize = seqs.iter().map(|s| s.instance_refs.len()).sum();
    assert_eq!(covered, corpus.len());
    for s in &seqs {
        assert_eq!(s.labels.len(), s.tokens.len());
        for (&i, toks) in &s.instance_refs {
            let complex = corpus.instances[i].is_complex();
            if complex {
                assert!(toks.iter().all(|&t| s.labels[t] == 1));
            }
        }
    }
}

#[test]
fn empty_file_parses_to_empty_corpus() {
    let c = parse_tsv("".as_bytes(), Language::En, Genre::News, Split::Train).unwrap();
    assert!(c.is_empty());
    assert_eq!(stats(&c).instances, 0);
}

fn junk() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            Just("\u{FFFD}"),
            Just("\u{0007}"),
            Just("  "),
            Just("\t"),
            Just(" \u{000B} ")
        ],
        0..3,
    )
    .prop_map(|v| v.concat())
}

/// Cleaning written independently of the library: drop U+FFFD and
/// controls, then collapse whitespace.
fn oracle_clean(s: &str) -> String {
    let kept: String = s
        .chars()
        .map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c })
        .filter(|&c| c != '\u{FFFD}' && !(c.is_control() && c != ' '))
        .collect();
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

proptest! {
    #[test]
    fn preprocessing_matches_sentinel_oracle(
        words in prop::collection::vec("[a-z]{1,6}", 2..8),
        pick in 0usize..8,
        junks in prop::collection::vec(junk(), 8),
    ) {
        let t = pick % words.len();
        let target = format!("TGT{}", words[t]);
        let mut sentence = String::new();
        for (i, w) in words.iter().enumerate() {
            sentence.push_str(&junks[i]);
            sentence.push(' ');
            if i == t { sentence.push_str(&target) } else { sentence.push_str(w) }
        }
        sentence.push_str(&junks[7]);
        let inst = instance(Language::En, "H", &sentence, &target, 1);
        let corpus = Corpus::new(CorpusLanguage::Single(Language::En), Genre::News, Split::Train, vec![inst]).unwrap();
        let (clean, report) = preprocess(&corpus);
        prop_assert_eq!(report.kept, 1);
        let out = &clean.instances[0];
        prop_assert_eq!(&out.sentence, &oracle_clean(&sentence));
        prop_assert_eq!(&out.sentence[out.start..out.end], target.as_str());
        prop_assert_eq!(&out.target, &target);
    }

    #[test]
    fn tsv_round_trip(
        rows in prop::collection::vec(("[a-z]{1,5}", "[a-z]{1,5}", "[a-z]{1,5}", 0u8..2, 0u32..5), 1..12),
    ) {
        let instances: Vec<_> = rows
            .iter()
            .enumerate()
            .map(|(i, (a, b, c, label, votes))| {
                let sentence = format!("{a} {b} {c}.");
                let mut inst = instance(Language::Es, &format!("H{i}"), &sentence, b, *label);
                inst.n_native_complex = *votes;
                inst.prob_label = f64::from(*votes) / 20.0;
                inst
            })
            .collect();
        let corpus = Corpus::new(CorpusLanguage::Single(Language::Es), Genre::Wikipedia, Split::Dev, instances).unwrap();
        let mut buf = Vec::new();
        write_tsv(&corpus, &mut buf).unwrap();
        let back = parse_tsv(buf.as_slice(), Language::Es, Genre::Wikipedia, Split::Dev).unwrap();
        prop_assert_eq!(back, corpus);
    }

    #[test]
    fn stats_are_additive_under_merge(a in 0usize..30, b in 0usize..30, seed in 0u64..1000) {
        let mut rng = common::rng(seed);
        let x = common::random_corpus(&mut rng, Language::En, Split::Train, a);
        let y = common::random_corpus(&mut rng, Language::De, Split::Train, b);
        let merged = merge(&[&x, &y]).unwrap();
        prop_assert_eq!(stats(&merged), stats(&x) + stats(&y));
        prop_assert_eq!(merged.len(), a + b);
    }

    #[test]
    fn tokens_index_their_text(s in "[a-zA-Z ,.;!?-]{0,40}") {
        for t in tokenize(&s) {
            prop_assert_eq!(&s[t.start..t.end], t.text.as_str());
            prop_assert!(!t.text.trim().is_empty());
        }
    }
}
