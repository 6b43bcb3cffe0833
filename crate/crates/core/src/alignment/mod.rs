//! Mapping monolingual embedding spaces into one shared space.
//!
//! Maps are orthogonal, fitted in closed form over anchor pairs and refined
//! by re-inducing anchors from CSLS mutual nearest neighbours. Vectors are
//! rows and a map acts as `v W`.

mod csls;
mod dictionary;
mod pivot;
mod procrustes;
mod refine;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::Language;

pub use csls::{csls_scores, induction_precision, NeighborhoodCache, ScoredCandidate};
pub use dictionary::{BilingualDictionary, ResolvedPairs};
pub use pivot::{apply, chain_to_pivot, PivotSpace, PIVOT};
pub use procrustes::{cosine, orthogonal_procrustes, procrustes_fit};
pub use refine::{induce_dictionary, refine, RefinementConfig};

/// Version stamped into every JSON document the alignment stage writes.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub anchor_count: usize,
    /// Dictionary pairs skipped because a word was missing from a table.
    pub filtered_pairs: usize,
    pub mean_cosine_after_fit: f64,
    pub refinement_iterations: usize,
    pub iteration_anchor_counts: Vec<usize>,
    pub iteration_mean_cosines: Vec<f64>,
    pub smallest_singular_value: f64,
    pub stopped_early: bool,
}

/// Orthogonal map from `source_language` into `target_language`'s space.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMap {
    pub w: DMatrix<f64>,
    pub source_language: Language,
    pub target_language: Language,
    pub fit_report: FitReport,
}

/// Serialized fit summary, one per language pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub schema_version: u32,
    pub pair: String,
    pub anchors_used: usize,
    pub mean_cosine: f64,
    pub iterations: usize,
    pub smallest_singular_value: f64,
    pub iteration_anchor_counts: Vec<usize>,
    pub stopped_early: bool,
}

impl AlignmentMap {
    pub fn identity(dim: usize, source_language: Language, target_language: Language) -> Self {
        AlignmentMap {
            w: DMatrix::identity(dim, dim),
            source_language,
            target_language,
            fit_report: FitReport::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    /// `max |W^T W - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let d = self.dim();
        (self.w.transpose() * &self.w - DMatrix::<f64>::identity(d, d)).amax()
    }

    pub fn record(&self) -> FitRecord {
        FitRecord {
            schema_version: REPORT_SCHEMA_VERSION,
            pair: format!("{}-{}", self.source_language, self.target_language),
            anchors_used: self.fit_report.anchor_count,
            mean_cosine: self.fit_report.mean_cosine_after_fit,
            iterations: self.fit_report.refinement_iterations,
            smallest_singular_value: self.fit_report.smallest_singular_value,
            iteration_anchor_counts: self.fit_report.iteration_anchor_counts.clone(),
            stopped_early: self.fit_report.stopped_early,
        }
    }
}

/// `v W`, unit-normalized, in f64. Zero vectors stay zero.
pub(crate) fn map_vector_f64(w: &DMatrix<f64>, v: &[f32]) -> Vec<f64> {
    let d = w.ncols();
    let mut out = vec![0.0f64; d];
    for (i, &x) in v.iter().enumerate() {
        let x = f64::from(x);
        if x == 0.0 {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += x * w[(i, j)];
        }
    }
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        out.iter_mut().for_each(|x| *x /= norm);
    }
    out
}

/// `map_vector_f64` rounded to storage precision; what `apply` writes.
pub(crate) fn map_vector(w: &DMatrix<f64>, v: &[f32]) -> Vec<f32> {
    map_vector_f64(w, v).into_iter().map(|x| x as f32).collect()
}
