use nalgebra::DMatrix;

use super::{map_vector, AlignmentMap, BilingualDictionary, FitReport};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};

/// Solves `min ||X W - Y||_F` over orthogonal `W` (rows of `X`, `Y` are paired
/// vectors).
///
/// With `X^T Y = U S V^T`, the minimizer is `W = U V^T`. Returns `W` and the
/// smallest singular value of `X^T Y`; a zero value means the minimizer is
/// not unique.
pub fn orthogonal_procrustes(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if x.shape() != y.shape() {
        return Err(Error::invalid(format!(
            "anchor matrices differ in shape: {:?} vs {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let m = x.transpose() * y;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite cross-covariance".into()));
    }
    let svd = m.svd(true, true);
    let smallest = svd.singular_values.min();
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Numerical("SVD did not produce singular vectors".into()));
    };
    Ok((u * v_t, smallest))
}

/// Stacks the given table rows into an `n x dim` matrix.
pub(crate) fn stack_rows(table: &EmbeddingTable, ranks: impl Iterator<Item = usize>) -> DMatrix<f64> {
    let mut data = Vec::new();
    let mut n = 0;
    for r in ranks {
        data.extend(table.row(r).iter().map(|&v| f64::from(v)));
        n += 1;
    }
    DMatrix::from_row_slice(n, table.dim(), &data)
}

/// Fits the orthogonal map from pairs already resolved to ranks.
pub(crate) fn fit_pairs(
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    pairs: &[(usize, usize)],
    filtered: usize,
) -> Result<AlignmentMap> {
    let d = src.dim();
    if tgt.dim() != d {
        return Err(Error::invalid(format!(
            "embedding dimensions differ: {} vs {}",
            d,
            tgt.dim()
        )));
    }
    if pairs.len() < d {
        return Err(Error::UnderDetermined {
            usable: pairs.len(),
            required: d,
        });
    }
    let x = stack_rows(src, pairs.iter().map(|p| p.0));
    let y = stack_rows(tgt, pairs.iter().map(|p| p.1));
    let (w, smallest) = orthogonal_procrustes(&x, &y)?;
    if smallest <= 1e-12 {
        log::warn!(
            "rank-deficient anchor cross-covariance for {}->{} (smallest singular value {smallest:e})",
            src.language(),
            tgt.language()
        );
    }
    let mean_cosine = mean_anchor_cosine(&w, src, tgt, pairs);
    Ok(AlignmentMap {
        w,
        source_language: src.language(),
        target_language: tgt.language(),
        fit_report: FitReport {
            anchor_count: pairs.len(),
            filtered_pairs: filtered,
            mean_cosine_after_fit: mean_cosine,
            refinement_iterations: 0,
            iteration_anchor_counts: Vec::new(),
            iteration_mean_cosines: Vec::new(),
            smallest_singular_value: smallest,
            stopped_early: false,
        },
    })
}

/// Orthogonal Procrustes over the dictionary pairs present in both tables.
pub fn procrustes_fit(src: &EmbeddingTable, tgt: &EmbeddingTable, dict: &BilingualDictionary) -> Result<AlignmentMap> {
    let resolved = dict.resolve(src, tgt);
    fit_pairs(src, tgt, &resolved.pairs, resolved.filtered)
}

/// Mean cosine between mapped source anchors (as `apply` would store them)
/// and their target partners.
pub(crate) fn mean_anchor_cosine(
    w: &DMatrix<f64>,
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    pairs: &[(usize, usize)],
) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let total: f64 = pairs
        .iter()
        .map(|&(i, j)| cosine(&map_vector(w, src.row(i)), tgt.row(j)))
        .sum();
    total / pairs.len() as f64
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}
