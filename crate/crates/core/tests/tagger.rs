mod common;

use cwi_transfer::tagger::{
    batch_gradients, checkpoint, loss, train_encoded, EncodedSequence, TaggerModel, TaggerParams, TrainingConfig,
};
use rand::Rng;

use common::{reference_forward, rng};

fn random_sequence(r: &mut rand_chacha::ChaCha8Rng, len: usize, d: usize) -> EncodedSequence {
    EncodedSequence {
        inputs: (0..len * d).map(|_| r.random_range(-1.0..1.0)).collect(),
        labels: (0..len).map(|_| r.random_range(0..2u8)).collect(),
    }
}

fn rows(inputs: &[f64], d: usize) -> Vec<Vec<f64>> {
    inputs.chunks(d).map(<[f64]>::to_vec).collect()
}

#[test]
fn forward_matches_reference_implementation() {
    for seed in 0..5 {
        let mut r = rng(100 + seed);
        let model = TaggerModel::init(7, 5, seed).unwrap();
        let seq = random_sequence(&mut r, 9, 7);
        let got = model.forward(&seq.inputs).unwrap();
        let want = reference_forward(model.params(), &rows(&seq.inputs, 7), 5);
        for (a, b) in got.probs().iter().zip(&want) {
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn reversing_the_input_swaps_directions() {
    let mut model = TaggerModel::init(3, 4, 1).unwrap();
    let p = model.params().clone();
    let swapped = {
        let mut s = p.clone();
        std::mem::swap(&mut s.forward, &mut s.backward);
        let (a, b) = s.head_w.split_at(4);
        s.head_w = [b, a].concat();
        s
    };
    let mut r = rng(4);
    let seq = random_sequence(&mut r, 6, 3);
    let orig = model.forward(&seq.inputs).unwrap().probs().to_vec();
    *model.params_mut() = swapped;
    let reversed: Vec<f64> = seq.inputs.chunks(3).rev().flatten().copied().collect();
    let out = model.forward(&reversed).unwrap().probs().to_vec();
    for (a, b) in orig.iter().zip(out.iter().rev()) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn gradients_match_finite_differences() {
    let (d, h, len, step) = (5, 4, 6, 1e-5);
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        let mut r = rng(seed);
        let mut model = TaggerModel::init(d, h, seed).unwrap();
        let seq = random_sequence(&mut r, len, d);
        let cache = model.forward(&seq.inputs).unwrap();
        let analytic = model.backward(&cache, &seq.labels).unwrap();
        let flat: Vec<f64> = analytic.tensors().iter().flat_map(|t| t.iter().copied()).collect();
        let mut idx = 0;
        for t in 0..8 {
            let n = model.params().tensors()[t].len();
            for k in 0..n {
                let orig = model.params().tensors()[t][k];
                model.params_mut().tensors_mut()[t][k] = orig + step;
                let up = loss(model.forward(&seq.inputs).unwrap().probs(), &seq.labels).unwrap();
                model.params_mut().tensors_mut()[t][k] = orig - step;
                let down = loss(model.forward(&seq.inputs).unwrap().probs(), &seq.labels).unwrap();
                model.params_mut().tensors_mut()[t][k] = orig;
                let numeric = (up - down) / (2.0 * step);
                let a = flat[idx];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
                idx += 1;
            }
        }
    }
    assert!(worst <= 1e-4, "worst relative error {worst}");
}

#[test]
fn duplicated_batch_doubles_the_summed_gradient() {
    let mut r = rng(12);
    let model = TaggerModel::init(4, 3, 2).unwrap();
    let seqs: Vec<EncodedSequence> = (0..11).map(|i| random_sequence(&mut r, 2 + i % 5, 4)).collect();
    let once: Vec<&EncodedSequence> = seqs.iter().collect();
    let twice: Vec<&EncodedSequence> = seqs.iter().chain(seqs.iter()).collect();
    let g1 = batch_gradients(&model, &once).unwrap();
    let g2 = batch_gradients(&model, &twice).unwrap();
    assert_eq!(g2.tokens, 2 * g1.tokens);
    for (a, b) in g1.grads.tensors().iter().zip(g2.grads.tensors()) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((2.0 * x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn batch_gradient_is_sum_of_sequence_gradients() {
    let mut r = rng(13);
    let model = TaggerModel::init(4, 3, 5).unwrap();
    let seqs: Vec<EncodedSequence> = (0..5).map(|_| random_sequence(&mut r, 4, 4)).collect();
    let batch = batch_gradients(&model, &seqs.iter().collect::<Vec<_>>()).unwrap();
    let mut manual = TaggerParams::zeros(4, 3);
    for s in &seqs {
        let mut g = model.backward(&model.forward(&s.inputs).unwrap(), &s.labels).unwrap();
        g.scale(s.len() as f64);
        manual.add_assign(&g);
    }
    for (a, b) in manual.tensors().iter().zip(batch.grads.tensors()) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}

fn small_config(lr: f64) -> TrainingConfig {
    TrainingConfig {
        learning_rate: lr,
        epochs: 2,
        batch_size: 3,
        hidden_size: 3,
        ..TrainingConfig::default()
    }
}

#[test]
fn zero_learning_rate_leaves_parameters_alone() {
    let mut r = rng(14);
    let data: Vec<EncodedSequence> = (0..7).map(|_| random_sequence(&mut r, 5, 4)).collect();
    let model = TaggerModel::init(4, 3, 9).unwrap();
    let out = train_encoded(model.clone(), &data, &small_config(0.0), |_, _| Ok(())).unwrap();
    assert_eq!(out.model.params(), model.params());
}

#[test]
fn training_is_deterministic_to_the_byte() {
    let mut r = rng(15);
    let data: Vec<EncodedSequence> = (0..20).map(|i| random_sequence(&mut r, 3 + i % 4, 4)).collect();
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for run in 0..2 {
        let model = TaggerModel::init(4, 3, 9).unwrap();
        let out = train_encoded(model, &data, &small_config(1e-2), |_, _| Ok(())).unwrap();
        let p = dir.path().join(format!("m{run}.json"));
        checkpoint::save(&out.model, &p).unwrap();
        files.push(std::fs::read(&p).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn divergence_is_a_numerical_error() {
    let data = vec![EncodedSequence {
        inputs: vec![f64::NAN; 4],
        labels: vec![1],
    }];
    let model = TaggerModel::init(4, 3, 9).unwrap();
    let err = train_encoded(model, &data, &small_config(1e-2), |_, _| Ok(())).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("epoch 1"));
}
