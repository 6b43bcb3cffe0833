use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{tokenize, Corpus, Language, Token};
use crate::error::{Error, Result};

/// Token-level view of one distinct sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub sentence_id: usize,
    pub language: Language,
    pub tokens: Vec<Token>,
    /// 1 when some complex instance overlaps the token.
    pub labels: Vec<u8>,
    /// Corpus instance index -> covered token indices (ascending).
    pub instance_refs: BTreeMap<usize, Vec<usize>>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Groups instances by sentence and labels the tokens each complex span touches.
///
/// Sequences come out in order of first appearance of their sentence.
pub fn to_sequences(corpus: &Corpus) -> Result<Vec<TokenSequence>> {
    let mut by_sentence: HashMap<(Language, &str), usize> = HashMap::new();
    let mut sequences: Vec<TokenSequence> = Vec::new();

    for (idx, inst) in corpus.instances.iter().enumerate() {
        let key = (inst.provenance.language, inst.sentence.as_str());
        let seq_idx = *by_sentence.entry(key).or_insert_with(|| {
            let tokens = tokenize(&inst.sentence);
            sequences.push(TokenSequence {
                sentence_id: sequences.len(),
                language: inst.provenance.language,
                labels: vec![0; tokens.len()],
                tokens,
                instance_refs: BTreeMap::new(),
            });
            sequences.len() - 1
        });
        let seq = &mut sequences[seq_idx];
        let covered: Vec<usize> = seq
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.start < inst.end && inst.start < t.end)
            .map(|(i, _)| i)
            .collect();
        if covered.is_empty() {
            return Err(Error::Validation {
                hit_id: inst.hit_id.clone(),
                message: format!("span {}..{} covers no token", inst.start, inst.end),
            });
        }
        if inst.is_complex() {
            for &t in &covered {
                seq.labels[t] = 1;
            }
        }
        seq.instance_refs.insert(idx, covered);
    }
    Ok(sequences)
}
