//! Cross-domain similarity local scaling.
//!
//! `csls(x, y) = 2 cos(x, y) - r_tgt(x) - r_src(y)` where `r_tgt(x)` is the
//! mean cosine of `x` to its `k` nearest neighbours in the target space and
//! `r_src(y)` the same for `y` in the (mapped) source space. Points sitting
//! in dense hub regions get their similarities discounted.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::procrustes::stack_rows;
use super::{map_vector_f64, AlignmentMap, BilingualDictionary};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};

const BLOCK_ROWS: usize = 256;

/// Mean similarity of every candidate to its `k` nearest neighbours in the
/// query space.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodCache {
    k: usize,
    r: Vec<f64>,
}

impl NeighborhoodCache {
    /// `query_space` holds the vectors queries are drawn from, already in the
    /// candidates' space (for a source language, the output of `apply`).
    pub fn build(candidates: &EmbeddingTable, query_space: &EmbeddingTable, k: usize) -> Result<Self> {
        check_k(k, query_space.len())?;
        let c = unit_rows(candidates);
        let q = unit_rows(query_space);
        Ok(NeighborhoodCache {
            k,
            r: knn_mean_similarity(&c, &q, k),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub rank: usize,
    pub word: String,
    pub score: f64,
}

fn check_k(k: usize, vocab: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("CSLS neighbour count must be at least 1"));
    }
    if k > vocab {
        return Err(Error::invalid(format!(
            "CSLS neighbour count {k} exceeds vocabulary of {vocab}"
        )));
    }
    Ok(())
}

/// Ranks every candidate for `query` by CSLS, best first.
///
/// Ties are broken by frequency rank, then by word.
pub fn csls_scores(
    query: &[f32],
    candidates: &EmbeddingTable,
    k: usize,
    cache: &NeighborhoodCache,
) -> Result<Vec<ScoredCandidate>> {
    check_k(k, candidates.len())?;
    if cache.k != k || cache.r.len() != candidates.len() {
        return Err(Error::invalid(
            "neighbourhood cache was built for a different candidate set or k",
        ));
    }
    if query.len() != candidates.dim() {
        return Err(Error::invalid("query dimension does not match candidates"));
    }
    let cos: Vec<f64> = candidates
        .rows()
        .map(|(_, row)| super::procrustes::cosine(query, row))
        .collect();
    let r_query = top_k_mean(cos.clone(), k);
    let mut scored: Vec<ScoredCandidate> = cos
        .iter()
        .enumerate()
        .map(|(rank, &c)| ScoredCandidate {
            rank,
            word: candidates.word(rank).to_string(),
            score: 2.0 * c - r_query - cache.r[rank],
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then(a.rank.cmp(&b.rank))
            .then_with(|| a.word.cmp(&b.word))
    });
    Ok(scored)
}

/// Rows of the table as an f64 matrix, each scaled to unit norm.
pub(crate) fn unit_rows(table: &EmbeddingTable) -> DMatrix<f64> {
    unit_rows_prefix(table, table.len())
}

/// The first `n` rows (most frequent words), unit-normalized.
pub(crate) fn unit_rows_prefix(table: &EmbeddingTable, n: usize) -> DMatrix<f64> {
    let mut m = stack_rows(table, 0..n);
    normalize_rows(&mut m);
    m
}

pub(crate) fn normalize_rows(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= n;
        }
    }
}

fn top_k_mean(mut values: Vec<f64>, k: usize) -> f64 {
    let k = k.min(values.len());
    if k == 0 {
        return 0.0;
    }
    if k < values.len() {
        values.select_nth_unstable_by(k - 1, |a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    }
    let mut top = values[..k].to_vec();
    top.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    top.iter().sum::<f64>() / k as f64
}

/// For every row of `queries`, the mean of its `k` largest dot products with
/// rows of `space`. Rows are expected to be unit length.
pub(crate) fn knn_mean_similarity(queries: &DMatrix<f64>, space: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let space_t = space.transpose();
    let starts: Vec<usize> = (0..queries.nrows()).step_by(BLOCK_ROWS).collect();
    starts
        .par_iter()
        .map(|&start| {
            let len = BLOCK_ROWS.min(queries.nrows() - start);
            let block = queries.rows(start, len) * &space_t;
            (0..len)
                .map(|i| top_k_mean(block.row(i).iter().copied().collect(), k))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

/// For every row `i` of `queries`, the column `j` maximizing
/// `2 q_i . s_j - r_space[j]`. Ties resolve to the smaller `j`.
pub(crate) fn best_csls_match(queries: &DMatrix<f64>, space: &DMatrix<f64>, r_space: &[f64]) -> Vec<usize> {
    let space_t = space.transpose();
    let starts: Vec<usize> = (0..queries.nrows()).step_by(BLOCK_ROWS).collect();
    starts
        .par_iter()
        .map(|&start| {
            let len = BLOCK_ROWS.min(queries.nrows() - start);
            let block = queries.rows(start, len) * &space_t;
            (0..len)
                .map(|i| {
                    let mut best = 0;
                    let mut best_score = f64::NEG_INFINITY;
                    for (j, &s) in block.row(i).iter().enumerate() {
                        let score = 2.0 * s - r_space[j];
                        if score > best_score {
                            best_score = score;
                            best = j;
                        }
                    }
                    best
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

/// Maps the first `n` source rows with `w`, unit-normalized.
pub(crate) fn mapped_rows(w: &DMatrix<f64>, src: &EmbeddingTable, n: usize) -> DMatrix<f64> {
    let mut data = Vec::with_capacity(n * src.dim());
    for r in 0..n {
        data.extend(map_vector_f64(w, src.row(r)));
    }
    DMatrix::from_row_slice(n, src.dim(), &data)
}

/// Fraction of evaluation source words whose `top_k` CSLS neighbours in the
/// target table contain a reference translation.
pub fn induction_precision(
    map: &AlignmentMap,
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    eval_dict: &BilingualDictionary,
    top_k: usize,
    k_csls: usize,
) -> Result<f64> {
    if top_k == 0 {
        return Err(Error::invalid("precision@k needs k >= 1"));
    }
    check_k(k_csls, tgt.len())?;
    check_k(k_csls, src.len())?;
    let resolved = eval_dict.resolve(src, tgt);
    let mut gold: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (s, t) in resolved.pairs {
        gold.entry(s).or_default().insert(t);
    }
    if gold.is_empty() {
        return Err(Error::invalid("no evaluation pair has both words in the vocabularies"));
    }

    let mapped_src = mapped_rows(&map.w, src, src.len());
    let tgt_m = unit_rows(tgt);
    let r_tgt_words = knn_mean_similarity(&tgt_m, &mapped_src, k_csls);

    let sources: Vec<usize> = gold.keys().copied().collect();
    let queries = DMatrix::from_fn(sources.len(), src.dim(), |i, j| mapped_src[(sources[i], j)]);
    let r_queries = knn_mean_similarity(&queries, &tgt_m, k_csls);
    let sims = &queries * tgt_m.transpose();

    let hits = sources
        .iter()
        .enumerate()
        .filter(|&(qi, s)| {
            let mut order: Vec<(usize, f64)> = (0..tgt.len())
                .map(|j| (j, 2.0 * sims[(qi, j)] - r_queries[qi] - r_tgt_words[j]))
                .collect();
            order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
            order.iter().take(top_k).any(|(j, _)| gold[s].contains(j))
        })
        .count();
    Ok(hits as f64 / sources.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Language;

    fn table(lang: Language, rows: &[(&str, [f32; 2])]) -> EmbeddingTable {
        EmbeddingTable::from_rows(lang, 2, rows.iter().map(|(w, v)| (w.to_string(), v.to_vec()))).unwrap()
    }

    #[test]
    fn self_ranks_first_with_k1() {
        let cands = table(Language::De, &[("o", [0.0, 1.0]), ("q", [1.0, 0.0])]);
        let cache = NeighborhoodCache::build(&cands, &cands, 1).unwrap();
        let ranked = csls_scores(&[1.0, 0.0], &cands, 1, &cache).unwrap();
        assert_eq!(ranked[0].word, "q");
    }

    #[test]
    fn two_point_score_by_hand() {
        // Query space {x=(1,0)}, candidates {y=(1,0), z=(0,1)}, k=1.
        // r(x) = max cos to candidates = 1; r(y) = 1; r(z) = 0.
        // csls(x,y) = 2 - 1 - 1 = 0; csls(x,z) = 0 - 1 - 0 = -1.
        let queries = table(Language::En, &[("x", [1.0, 0.0])]);
        let cands = table(Language::De, &[("y", [1.0, 0.0]), ("z", [0.0, 1.0])]);
        let cache = NeighborhoodCache::build(&cands, &queries, 1).unwrap();
        assert_eq!(cache.values(), &[1.0, 0.0]);
        let ranked = csls_scores(&[1.0, 0.0], &cands, 1, &cache).unwrap();
        assert_eq!(ranked[0].word, "y");
        assert!((ranked[0].score - 0.0).abs() < 1e-12);
        assert!((ranked[1].score + 1.0).abs() < 1e-12);
    }

    #[test]
    fn hub_is_penalized() {
        // Query q at 45 degrees; candidates a and b both at cos 0.8 from q,
        // mirrored about q. Three source points crowd around a only.
        let ang = |deg: f32| {
            let r = deg.to_radians();
            [r.cos(), r.sin()]
        };
        let q = 45.0;
        let off = 0.8f32.acos().to_degrees();
        let cands = table(Language::De, &[("a", ang(q - off)), ("b", ang(q + off))]);
        let sources = table(
            Language::En,
            &[
                ("s1", ang(q - off)),
                ("s2", ang(q - off + 2.0)),
                ("s3", ang(q - off - 2.0)),
            ],
        );
        let cache = NeighborhoodCache::build(&cands, &sources, 2).unwrap();
        let ranked = csls_scores(&ang(q), &cands, 2, &cache).unwrap();
        assert_eq!(ranked[0].word, "b");
        // r(a): two best of cos(0), cos(2), cos(2) -> (1 + cos 2deg)/2
        let c2 = f64::from(2.0f32.to_radians().cos());
        assert!((cache.values()[0] - (1.0 + c2) / 2.0).abs() < 1e-6);
    }

    #[test]
    fn equal_scores_tie_break_on_rank() {
        let cands = table(Language::De, &[("b", [0.0, 1.0]), ("a", [0.0, -1.0])]);
        let cache = NeighborhoodCache::build(&cands, &cands, 1).unwrap();
        let ranked = csls_scores(&[1.0, 0.0], &cands, 1, &cache).unwrap();
        assert_eq!(ranked[0].score, ranked[1].score);
        assert_eq!(ranked[0].word, "b");
    }

    #[test]
    fn k_larger_than_vocab() {
        let cands = table(Language::De, &[("a", [1.0, 0.0])]);
        assert!(NeighborhoodCache::build(&cands, &cands, 2).is_err());
        let cache = NeighborhoodCache::build(&cands, &cands, 1).unwrap();
        assert!(csls_scores(&[1.0, 0.0], &cands, 2, &cache).is_err());
    }
}
