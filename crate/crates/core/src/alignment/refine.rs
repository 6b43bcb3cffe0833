use serde::{Deserialize, Serialize};

use super::csls::{best_csls_match, knn_mean_similarity, mapped_rows, unit_rows_prefix};
use super::procrustes::fit_pairs;
use super::{AlignmentMap, BilingualDictionary};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefinementConfig {
    pub iterations: usize,
    pub k_csls: usize,
    /// Only the this many most frequent words of each space are anchor candidates.
    pub anchor_top_n: usize,
    /// Keep only pairs that are each other's CSLS nearest neighbour; otherwise
    /// take every source word's best target.
    pub mutual_nn_only: bool,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            iterations: 5,
            k_csls: 10,
            anchor_top_n: 10_000,
            mutual_nn_only: true,
        }
    }
}

impl RefinementConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_csls == 0 {
            return Err(Error::invalid("k_csls must be at least 1"));
        }
        if self.anchor_top_n == 0 {
            return Err(Error::invalid("anchor_top_n must be at least 1"));
        }
        Ok(())
    }
}

/// Induces anchor pairs (source rank, target rank) from CSLS nearest
/// neighbours among the most frequent words of each space.
pub(crate) fn induce_pairs(
    map: &AlignmentMap,
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    config: &RefinementConfig,
) -> Result<Vec<(usize, usize)>> {
    config.validate()?;
    let ns = config.anchor_top_n.min(src.len());
    let nt = config.anchor_top_n.min(tgt.len());
    let k = config.k_csls;
    if k > ns || k > nt {
        return Err(Error::invalid(format!(
            "k_csls {k} exceeds candidate pool ({ns} source, {nt} target words)"
        )));
    }
    let s = mapped_rows(&map.w, src, ns);
    let t = unit_rows_prefix(tgt, nt);
    let r_for_src = knn_mean_similarity(&s, &t, k);
    let r_for_tgt = knn_mean_similarity(&t, &s, k);
    let s2t = best_csls_match(&s, &t, &r_for_tgt);
    let pairs = if config.mutual_nn_only {
        let t2s = best_csls_match(&t, &s, &r_for_src);
        s2t.iter()
            .enumerate()
            .filter(|&(i, &j)| t2s[j] == i)
            .map(|(i, &j)| (i, j))
            .collect()
    } else {
        s2t.into_iter().enumerate().collect()
    };
    Ok(pairs)
}

/// The dictionary `refine` would fit against in its next iteration.
pub fn induce_dictionary(
    map: &AlignmentMap,
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    config: &RefinementConfig,
) -> Result<BilingualDictionary> {
    let pairs = induce_pairs(map, src, tgt, config)?;
    Ok(BilingualDictionary::new(
        src.language(),
        tgt.language(),
        pairs
            .into_iter()
            .map(|(i, j)| (src.word(i).to_string(), tgt.word(j).to_string())),
    ))
}

/// Alternates dictionary induction and Procrustes refitting.
///
/// Stops early, keeping the last good map and setting
/// `fit_report.stopped_early`, if an induced dictionary has fewer pairs than
/// the embedding dimension.
pub fn refine(
    map: &AlignmentMap,
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    config: &RefinementConfig,
) -> Result<AlignmentMap> {
    config.validate()?;
    let mut current = map.clone();
    for iteration in 0..config.iterations {
        let pairs = induce_pairs(&current, src, tgt, config)?;
        if pairs.len() < src.dim() {
            log::warn!(
                "refinement iteration {iteration}: induced {} anchors for dimension {}, stopping",
                pairs.len(),
                src.dim()
            );
            current.fit_report.stopped_early = true;
            break;
        }
        let mut next = fit_pairs(src, tgt, &pairs, 0)?;
        let mut report = std::mem::take(&mut current.fit_report);
        report.anchor_count = next.fit_report.anchor_count;
        report.filtered_pairs = 0;
        report.mean_cosine_after_fit = next.fit_report.mean_cosine_after_fit;
        report.smallest_singular_value = next.fit_report.smallest_singular_value;
        report.refinement_iterations += 1;
        report.iteration_anchor_counts.push(pairs.len());
        report
            .iteration_mean_cosines
            .push(next.fit_report.mean_cosine_after_fit);
        next.fit_report = report;
        current = next;
    }
    Ok(current)
}
