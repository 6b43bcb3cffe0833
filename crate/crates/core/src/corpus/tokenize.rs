use serde::{Deserialize, Serialize};

/// A token with byte offsets into the sentence it was cut from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Whitespace tokenizer that detaches punctuation.
///
/// Every punctuation character becomes its own token, except a hyphen that
/// sits between two alphanumeric characters: `better-optimized` stays whole.
pub fn tokenize(sentence: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let chars: Vec<(usize, char)> = sentence.char_indices().collect();
    let mut word_start: Option<usize> = None;

    let flush = |tokens: &mut Vec<Token>, from: &mut Option<usize>, to: usize| {
        if let Some(s) = from.take() {
            tokens.push(Token {
                text: sentence[s..to].to_string(),
                start: s,
                end: to,
            });
        }
    };

    for (i, &(pos, ch)) in chars.iter().enumerate() {
        if ch.is_whitespace() {
            flush(&mut tokens, &mut word_start, pos);
        } else if is_punctuation(ch) && !is_inner_hyphen(&chars, i) {
            flush(&mut tokens, &mut word_start, pos);
            let end = pos + ch.len_utf8();
            tokens.push(Token {
                text: sentence[pos..end].to_string(),
                start: pos,
                end,
            });
        } else if word_start.is_none() {
            word_start = Some(pos);
        }
    }
    flush(&mut tokens, &mut word_start, sentence.len());
    tokens
}

fn is_punctuation(ch: char) -> bool {
    !ch.is_alphanumeric() && !ch.is_whitespace()
}

fn is_inner_hyphen(chars: &[(usize, char)], i: usize) -> bool {
    matches!(chars[i].1, '-' | '\u{2010}' | '\u{2011}')
        && i > 0
        && i + 1 < chars.len()
        && chars[i - 1].1.is_alphanumeric()
        && chars[i + 1].1.is_alphanumeric()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(s: &str) -> Vec<String> {
        tokenize(s).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn splits_final_period() {
        let toks = tokenize("The cat sat.");
        let got: Vec<_> = toks.iter().map(|t| (t.text.as_str(), t.start, t.end)).collect();
        assert_eq!(got, vec![("The", 0, 3), ("cat", 4, 7), ("sat", 8, 11), (".", 11, 12)]);
    }

    #[test]
    fn empty_sentence() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   ").is_empty());
    }

    // Expected outcomes enumerated by hand from the rule: split on whitespace,
    // detach punctuation, keep hyphens flanked by alphanumerics.
    #[test]
    fn hyphen_rule_fixture() {
        let cases: &[(&str, &[&str])] = &[
            ("better-optimized word", &["better-optimized", "word"]),
            ("an android-running phone.", &["an", "android-running", "phone", "."]),
            ("a - b", &["a", "-", "b"]),
            ("pre- and post-war", &["pre", "-", "and", "post-war"]),
            ("-leading", &["-", "leading"]),
            ("trailing-", &["trailing", "-"]),
            ("well--known", &["well", "-", "-", "known"]),
            ("state-of-the-art", &["state-of-the-art"]),
            ("(Hello), world!", &["(", "Hello", ")", ",", "world", "!"]),
            ("año-luz é", &["año-luz", "é"]),
            ("don't", &["don", "'", "t"]),
        ];
        for (input, expected) in cases {
            assert_eq!(surfaces(input), *expected, "input {input:?}");
        }
    }

    #[test]
    fn offsets_index_original_text() {
        let s = "Größe  der Straße, bitte.";
        for t in tokenize(s) {
            assert_eq!(&s[t.start..t.end], t.text);
        }
    }
}
