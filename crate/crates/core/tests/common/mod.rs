#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use cwi_transfer::corpus::{Corpus, CorpusLanguage, Genre, Instance, Language, Provenance, Split};
use cwi_transfer::embeddings::EmbeddingTable;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian with sign fix).
pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let qr = gaussian(rng, d, d).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Table whose rows are the rows of `m`, words `{prefix}{i}`.
pub fn table_from(lang: Language, prefix: &str, m: &DMatrix<f64>) -> EmbeddingTable {
    let rows: Vec<(String, Vec<f32>)> = (0..m.nrows())
        .map(|i| (format!("{prefix}{i}"), m.row(i).iter().map(|&x| x as f32).collect()))
        .collect();
    EmbeddingTable::from_rows(lang, m.ncols(), rows).expect("valid table")
}

pub fn instance(lang: Language, hit: &str, sentence: &str, target: &str, label: u8) -> Instance {
    let start = sentence.find(target).expect("target in sentence");
    Instance {
        hit_id: hit.to_string(),
        sentence: sentence.to_string(),
        start,
        end: start + target.len(),
        target: target.to_string(),
        n_native: 10,
        n_nonnative: 10,
        n_native_complex: if label == 1 { 3 } else { 0 },
        n_nonnative_complex: 0,
        binary_label: label,
        prob_label: if label == 1 { 0.15 } else { 0.0 },
        provenance: Provenance {
            language: lang,
            genre: Genre::Wikipedia,
        },
    }
}

/// A corpus of `n` one-sentence instances with random labels.
pub fn random_corpus(rng: &mut ChaCha8Rng, lang: Language, split: Split, n: usize) -> Corpus {
    let instances = (0..n)
        .map(|i| {
            let label = rng.random_range(0..2u8);
            let s = format!("word{i} target{i} end.");
            instance(lang, &format!("H{i}"), &s, &format!("target{i}"), label)
        })
        .collect();
    Corpus::new(CorpusLanguage::Single(lang), Genre::Wikipedia, split, instances).expect("valid corpus")
}

/// Reference LSTM + head forward pass written with plain index loops,
/// with no sharing of code or layout helpers with the library.
pub fn reference_forward(params: &cwi_transfer::tagger::TaggerParams, x: &[Vec<f64>], h: usize) -> Vec<f64> {
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    let run = |p: &cwi_transfer::tagger::LstmDirectionParams, order: Vec<usize>| -> Vec<Vec<f64>> {
        let d = x.first().map_or(0, Vec::len);
        let mut hs = vec![vec![0.0; h]; x.len()];
        let mut hp = vec![0.0; h];
        let mut cp = vec![0.0; h];
        for t in order {
            let mut pre = vec![0.0; 4 * h];
            for (r, v) in pre.iter_mut().enumerate() {
                let mut s = p.b[r];
                for j in 0..d {
                    s += p.w[r * d + j] * x[t][j];
                }
                for j in 0..h {
                    s += p.u[r * h + j] * hp[j];
                }
                *v = s;
            }
            let mut hn = vec![0.0; h];
            let mut cn = vec![0.0; h];
            for k in 0..h {
                let i = sig(pre[k]);
                let f = sig(pre[h + k]);
                let g = pre[2 * h + k].tanh();
                let o = sig(pre[3 * h + k]);
                cn[k] = f * cp[k] + i * g;
                hn[k] = o * cn[k].tanh();
            }
            hs[t] = hn.clone();
            hp = hn;
            cp = cn;
        }
        hs
    };
    let n = x.len();
    let fwd = run(&params.forward, (0..n).collect());
    let bwd = run(&params.backward, (0..n).rev().collect());
    (0..n)
        .map(|t| {
            let mut z = params.head_b;
            for k in 0..h {
                z += params.head_w[k] * fwd[t][k] + params.head_w[h + k] * bwd[t][k];
            }
            sig(z)
        })
        .collect()
}

/// Per-class F1 counted directly from label lists.
pub fn brute_force_macro_f1(gold: &[u8], pred: &[u8]) -> f64 {
    let mut sum = 0.0;
    for class in [0u8, 1] {
        let tp = gold
            .iter()
            .zip(pred)
            .filter(|(g, p)| **g == class && **p == class)
            .count() as f64;
        let predicted = pred.iter().filter(|p| **p == class).count() as f64;
        let actual = gold.iter().filter(|g| **g == class).count() as f64;
        let precision = if predicted == 0.0 { 0.0 } else { tp / predicted };
        let recall = if actual == 0.0 { 0.0 } else { tp / actual };
        sum += if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
    }
    sum / 2.0
}
