use serde::{Deserialize, Serialize};

use super::TaggerModel;
use crate::corpus::{Corpus, Language, TokenSequence};
use crate::embeddings::{EmbeddingTable, SharedSpace};
use crate::error::{Error, Result};

/// Turns tokens into model input vectors.
pub trait TokenEmbedder: Sync {
    fn dim(&self) -> usize;

    /// Appends the vector for `token` to `out`; returns true if it was OOV.
    fn embed_into(&self, language: Language, token: &str, out: &mut Vec<f64>) -> bool;

    fn embed_sequence(&self, seq: &TokenSequence) -> Vec<f64> {
        let mut out = Vec::with_capacity(seq.len() * self.dim());
        for t in &seq.tokens {
            self.embed_into(seq.language, &t.text, &mut out);
        }
        out
    }
}

impl TokenEmbedder for EmbeddingTable {
    fn dim(&self) -> usize {
        EmbeddingTable::dim(self)
    }

    fn embed_into(&self, _language: Language, token: &str, out: &mut Vec<f64>) -> bool {
        let l = self.lookup(token);
        out.extend(l.vector.iter().map(|&v| f64::from(v)));
        l.oov
    }
}

impl TokenEmbedder for SharedSpace {
    fn dim(&self) -> usize {
        SharedSpace::dim(self).unwrap_or(0)
    }

    /// Tokens of a language without a table are OOV.
    fn embed_into(&self, language: Language, token: &str, out: &mut Vec<f64>) -> bool {
        match self.table(language) {
            Some(t) => t.embed_into(language, token, out),
            None => {
                out.extend(std::iter::repeat_n(0.0, TokenEmbedder::dim(self)));
                true
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u8,
    pub probability: f64,
}

/// Averages token probabilities over a span; complex when the mean reaches
/// the threshold.
pub fn aggregate_span(token_probs: &[f64], tokens: &[usize], threshold: f64) -> Result<Prediction> {
    if tokens.is_empty() {
        return Err(Error::invalid("instance covers no tokens"));
    }
    let mut sum = 0.0;
    for &t in tokens {
        sum += *token_probs
            .get(t)
            .ok_or_else(|| Error::invalid(format!("token index {t} out of range")))?;
    }
    let probability = sum / tokens.len() as f64;
    Ok(Prediction {
        label: u8::from(probability >= threshold),
        probability,
    })
}

/// Anything that can score a target span in context. The BiLSTM is one
/// implementation; baselines and external models plug in here too.
pub trait ComplexityClassifier: Sync {
    fn predict_instance(&self, seq: &TokenSequence, instance: usize) -> Result<Prediction>;

    /// Predictions for every instance of `seq`, in instance order.
    fn predict_sequence(&self, seq: &TokenSequence) -> Result<Vec<(usize, Prediction)>> {
        seq.instance_refs
            .keys()
            .map(|&i| Ok((i, self.predict_instance(seq, i)?)))
            .collect()
    }
}

/// The BiLSTM tagger paired with the embeddings it reads.
pub struct BiLstmClassifier<'a, E: TokenEmbedder + ?Sized> {
    pub model: &'a TaggerModel,
    pub embedder: &'a E,
}

impl<'a, E: TokenEmbedder + ?Sized> BiLstmClassifier<'a, E> {
    pub fn new(model: &'a TaggerModel, embedder: &'a E) -> Self {
        BiLstmClassifier { model, embedder }
    }

    fn token_probs(&self, seq: &TokenSequence) -> Result<Vec<f64>> {
        let inputs = self.embedder.embed_sequence(seq);
        Ok(self.model.forward(&inputs)?.probs().to_vec())
    }
}

fn span_of(seq: &TokenSequence, instance: usize) -> Result<&[usize]> {
    seq.instance_refs
        .get(&instance)
        .map(Vec::as_slice)
        .ok_or_else(|| Error::invalid(format!("instance {instance} is not in sentence {}", seq.sentence_id)))
}

impl<E: TokenEmbedder + ?Sized> ComplexityClassifier for BiLstmClassifier<'_, E> {
    fn predict_instance(&self, seq: &TokenSequence, instance: usize) -> Result<Prediction> {
        let probs = self.token_probs(seq)?;
        aggregate_span(&probs, span_of(seq, instance)?, self.model.threshold())
    }

    fn predict_sequence(&self, seq: &TokenSequence) -> Result<Vec<(usize, Prediction)>> {
        let probs = self.token_probs(seq)?;
        seq.instance_refs
            .iter()
            .map(|(&i, toks)| Ok((i, aggregate_span(&probs, toks, self.model.threshold())?)))
            .collect()
    }
}

/// Answers with the gold label of the corpus the sequences were built from.
pub struct EchoGold<'a> {
    pub corpus: &'a Corpus,
}

impl ComplexityClassifier for EchoGold<'_> {
    fn predict_instance(&self, seq: &TokenSequence, instance: usize) -> Result<Prediction> {
        span_of(seq, instance)?;
        let inst = self
            .corpus
            .instances
            .get(instance)
            .ok_or_else(|| Error::invalid(format!("instance {instance} not in corpus")))?;
        Ok(Prediction {
            label: inst.binary_label,
            probability: f64::from(inst.binary_label),
        })
    }
}

/// Predicts the same probability for everything.
pub struct ConstantClassifier {
    pub probability: f64,
    pub threshold: f64,
}

impl ComplexityClassifier for ConstantClassifier {
    fn predict_instance(&self, seq: &TokenSequence, instance: usize) -> Result<Prediction> {
        span_of(seq, instance)?;
        Ok(Prediction {
            label: u8::from(self.probability >= self.threshold),
            probability: self.probability,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_mean_and_threshold() {
        let probs = [0.7, 0.6, 0.3, 0.5];
        assert_eq!(aggregate_span(&probs, &[0], 0.5).unwrap().label, 1);
        let two = aggregate_span(&probs, &[1, 2], 0.5).unwrap();
        assert!((two.probability - 0.45).abs() < 1e-15);
        assert_eq!(two.label, 0);
        assert_eq!(aggregate_span(&probs, &[3], 0.5).unwrap().label, 1);
        assert!(aggregate_span(&probs, &[], 0.5).is_err());
        assert!(aggregate_span(&probs, &[9], 0.5).is_err());
    }
}
