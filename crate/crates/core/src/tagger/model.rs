//! BiLSTM parameters, forward pass and backpropagation through time.
//!
//! Each direction is a standard LSTM cell with gates stacked in the order
//! input, forget, cell candidate, output:
//!
//! ```text
//! a_t = W x_t + U h_{t-1} + b
//! i = sig(a_i)  f = sig(a_f)  g = tanh(a_g)  o = sig(a_o)
//! c_t = f * c_{t-1} + i * g
//! h_t = o * tanh(c_t)
//! ```
//!
//! The per-token head reads `[h_fwd_t ; h_bwd_t]` and applies a sigmoid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside the loss.
pub const PROB_CLAMP: f64 = 1e-7;

/// Weights of one LSTM direction, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmDirectionParams {
    /// `4h x d` input weights.
    pub w: Vec<f64>,
    /// `4h x h` recurrent weights.
    pub u: Vec<f64>,
    /// `4h` biases.
    pub b: Vec<f64>,
}

impl LstmDirectionParams {
    fn zeros(d: usize, h: usize) -> Self {
        LstmDirectionParams {
            w: vec![0.0; 4 * h * d],
            u: vec![0.0; 4 * h * h],
            b: vec![0.0; 4 * h],
        }
    }
}

/// All trainable tensors of the tagger. Also the shape of its gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerParams {
    pub forward: LstmDirectionParams,
    pub backward: LstmDirectionParams,
    /// `2h` head weights over the concatenated hidden states.
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

impl TaggerParams {
    pub fn zeros(d: usize, h: usize) -> Self {
        TaggerParams {
            forward: LstmDirectionParams::zeros(d, h),
            backward: LstmDirectionParams::zeros(d, h),
            head_w: vec![0.0; 2 * h],
            head_b: 0.0,
        }
    }

    pub const TENSOR_NAMES: [&'static str; 8] = [
        "forward.w",
        "forward.u",
        "forward.b",
        "backward.w",
        "backward.u",
        "backward.b",
        "head.w",
        "head.b",
    ];

    pub fn tensors(&self) -> [&[f64]; 8] {
        [
            &self.forward.w,
            &self.forward.u,
            &self.forward.b,
            &self.backward.w,
            &self.backward.u,
            &self.backward.b,
            &self.head_w,
            std::slice::from_ref(&self.head_b),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 8] {
        [
            &mut self.forward.w,
            &mut self.forward.u,
            &mut self.forward.b,
            &mut self.backward.w,
            &mut self.backward.u,
            &mut self.backward.b,
            &mut self.head_w,
            std::slice::from_mut(&mut self.head_b),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn add_assign(&mut self, other: &TaggerParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

/// A BiLSTM per-token binary classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    params: TaggerParams,
    input_dim: usize,
    hidden: usize,
    threshold: f64,
    // bumped on every parameter mutation; lets `backward` reject stale caches
    generation: u64,
}

impl TaggerModel {
    /// Uniform(-s, s) weights with `s = 1/sqrt(h)`, zero biases except the
    /// forget gate (1.0), zero head bias. Threshold 0.5.
    pub fn init(input_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::invalid("input and hidden sizes must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = 1.0 / (hidden as f64).sqrt();
        let mut params = TaggerParams::zeros(input_dim, hidden);
        for dir in [&mut params.forward, &mut params.backward] {
            dir.w.iter_mut().for_each(|x| *x = rng.random_range(-s..s));
            dir.u.iter_mut().for_each(|x| *x = rng.random_range(-s..s));
            dir.b[hidden..2 * hidden].iter_mut().for_each(|x| *x = 1.0);
        }
        params.head_w.iter_mut().for_each(|x| *x = rng.random_range(-s..s));
        Ok(TaggerModel {
            params,
            input_dim,
            hidden,
            threshold: 0.5,
            generation: 0,
        })
    }

    pub fn from_params(params: TaggerParams, input_dim: usize, hidden: usize, threshold: f64) -> Result<Self> {
        let expected = TaggerParams::zeros(input_dim, hidden);
        for ((name, got), want) in TaggerParams::TENSOR_NAMES
            .iter()
            .zip(params.tensors())
            .zip(expected.tensors())
        {
            if got.len() != want.len() {
                return Err(Error::invalid(format!(
                    "tensor {name} has {} values, expected {}",
                    got.len(),
                    want.len()
                )));
            }
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::invalid(format!("threshold {threshold} not in (0,1)")));
        }
        if !params.all_finite() {
            return Err(Error::invalid("non-finite parameter values"));
        }
        Ok(TaggerModel {
            params,
            input_dim,
            hidden,
            threshold,
            generation: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: f64) -> Result<()> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::invalid(format!("threshold {threshold} not in (0,1)")));
        }
        self.threshold = threshold;
        Ok(())
    }

    pub fn params(&self) -> &TaggerParams {
        &self.params
    }

    /// Mutable access; invalidates outstanding activation caches.
    pub fn params_mut(&mut self) -> &mut TaggerParams {
        self.generation += 1;
        &mut self.params
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Runs both directions over `inputs` (`T x d`, row-major).
    pub fn forward(&self, inputs: &[f64]) -> Result<ForwardCache> {
        let d = self.input_dim;
        if !inputs.len().is_multiple_of(d) {
            return Err(Error::invalid(format!(
                "input of {} values is not a whole number of {d}-vectors",
                inputs.len()
            )));
        }
        let steps = inputs.len() / d;
        let fwd = run_direction(&self.params.forward, inputs, d, self.hidden, (0..steps).collect());
        let bwd = run_direction(
            &self.params.backward,
            inputs,
            d,
            self.hidden,
            (0..steps).rev().collect(),
        );
        let h = self.hidden;
        let mut probs = vec![0.0; steps];
        for (t, p) in probs.iter_mut().enumerate() {
            let hf = fwd.h_at(t, h);
            let hb = bwd.h_at(steps - 1 - t, h);
            let z = dot(&self.params.head_w[..h], hf) + dot(&self.params.head_w[h..], hb) + self.params.head_b;
            *p = sigmoid(z);
        }
        Ok(ForwardCache {
            generation: self.generation,
            steps,
            inputs: inputs.to_vec(),
            fwd,
            bwd,
            probs,
        })
    }

    /// Gradient of the mean per-token loss of one sequence.
    pub fn backward(&self, cache: &ForwardCache, labels: &[u8]) -> Result<TaggerParams> {
        let mut grads = TaggerParams::zeros(self.input_dim, self.hidden);
        if cache.steps > 0 {
            self.accumulate_gradients(cache, labels, 1.0 / cache.steps as f64, &mut grads)?;
        } else {
            self.check_cache(cache, labels)?;
        }
        Ok(grads)
    }

    fn check_cache(&self, cache: &ForwardCache, labels: &[u8]) -> Result<()> {
        if cache.generation != self.generation {
            return Err(Error::StaleCache {
                cached: cache.generation,
                current: self.generation,
            });
        }
        if labels.len() != cache.steps {
            return Err(Error::invalid(format!(
                "{} labels for a sequence of {} tokens",
                labels.len(),
                cache.steps
            )));
        }
        Ok(())
    }

    /// Adds `scale * d(sum of token losses)/d(params)` into `grads`.
    pub(crate) fn accumulate_gradients(
        &self,
        cache: &ForwardCache,
        labels: &[u8],
        scale: f64,
        grads: &mut TaggerParams,
    ) -> Result<()> {
        self.check_cache(cache, labels)?;
        let h = self.hidden;
        let steps = cache.steps;
        // d loss / d hidden state, per direction, indexed by processing step
        let mut dh_fwd = vec![0.0; steps * h];
        let mut dh_bwd = vec![0.0; steps * h];
        for t in 0..steps {
            let p = cache.probs[t];
            let y = f64::from(labels[t]);
            // clamped region has zero slope
            let dz = if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
                0.0
            } else {
                scale * (p - y)
            };
            if dz == 0.0 {
                continue;
            }
            let hf = cache.fwd.h_at(t, h);
            let hb = cache.bwd.h_at(steps - 1 - t, h);
            for k in 0..h {
                grads.head_w[k] += dz * hf[k];
                grads.head_w[h + k] += dz * hb[k];
                dh_fwd[t * h + k] += dz * self.params.head_w[k];
                dh_bwd[(steps - 1 - t) * h + k] += dz * self.params.head_w[h + k];
            }
            grads.head_b += dz;
        }
        backprop_direction(
            &self.params.forward,
            &cache.fwd,
            &cache.inputs,
            self.input_dim,
            h,
            &dh_fwd,
            &mut grads.forward,
        );
        backprop_direction(
            &self.params.backward,
            &cache.bwd,
            &cache.inputs,
            self.input_dim,
            h,
            &dh_bwd,
            &mut grads.backward,
        );
        Ok(())
    }
}

/// Activations saved by `forward` for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    steps: usize,
    inputs: Vec<f64>,
    fwd: DirectionCache,
    bwd: DirectionCache,
    probs: Vec<f64>,
}

impl ForwardCache {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps == 0
    }
}

/// Per processing step: input position, gate activations, cell and hidden state.
#[derive(Debug, Clone)]
struct DirectionCache {
    order: Vec<usize>,
    // each `steps * h`, gates already passed through their nonlinearity
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

impl DirectionCache {
    fn h_at(&self, step: usize, h: usize) -> &[f64] {
        &self.h[step * h..(step + 1) * h]
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn run_direction(p: &LstmDirectionParams, inputs: &[f64], d: usize, h: usize, order: Vec<usize>) -> DirectionCache {
    let steps = order.len();
    let mut cache = DirectionCache {
        i: vec![0.0; steps * h],
        f: vec![0.0; steps * h],
        g: vec![0.0; steps * h],
        o: vec![0.0; steps * h],
        c: vec![0.0; steps * h],
        tanh_c: vec![0.0; steps * h],
        h: vec![0.0; steps * h],
        order,
    };
    let zeros = vec![0.0; h];
    let mut a = vec![0.0; 4 * h];
    for s in 0..steps {
        let x = &inputs[cache.order[s] * d..(cache.order[s] + 1) * d];
        let h_prev = if s == 0 {
            zeros.as_slice()
        } else {
            &cache.h[(s - 1) * h..s * h]
        };
        for (r, ar) in a.iter_mut().enumerate() {
            *ar = dot(&p.w[r * d..(r + 1) * d], x) + dot(&p.u[r * h..(r + 1) * h], h_prev) + p.b[r];
        }
        let base = s * h;
        for k in 0..h {
            let i = sigmoid(a[k]);
            let f = sigmoid(a[h + k]);
            let g = a[2 * h + k].tanh();
            let o = sigmoid(a[3 * h + k]);
            let c_prev = if s == 0 { 0.0 } else { cache.c[base - h + k] };
            let c = f * c_prev + i * g;
            let tc = c.tanh();
            cache.i[base + k] = i;
            cache.f[base + k] = f;
            cache.g[base + k] = g;
            cache.o[base + k] = o;
            cache.c[base + k] = c;
            cache.tanh_c[base + k] = tc;
            cache.h[base + k] = o * tc;
        }
    }
    cache
}

fn backprop_direction(
    p: &LstmDirectionParams,
    cache: &DirectionCache,
    inputs: &[f64],
    d: usize,
    h: usize,
    dh_ext: &[f64],
    grads: &mut LstmDirectionParams,
) {
    let steps = cache.order.len();
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut da = vec![0.0; 4 * h];
    for s in (0..steps).rev() {
        let base = s * h;
        for k in 0..h {
            let dh = dh_ext[base + k] + dh_next[k];
            let (i, f, g, o) = (
                cache.i[base + k],
                cache.f[base + k],
                cache.g[base + k],
                cache.o[base + k],
            );
            let tc = cache.tanh_c[base + k];
            let c_prev = if s == 0 { 0.0 } else { cache.c[base - h + k] };
            let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
            da[k] = dc * g * i * (1.0 - i);
            da[h + k] = dc * c_prev * f * (1.0 - f);
            da[2 * h + k] = dc * i * (1.0 - g * g);
            da[3 * h + k] = dh * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        let x = &inputs[cache.order[s] * d..(cache.order[s] + 1) * d];
        let h_prev: &[f64] = if s == 0 { &[] } else { &cache.h[base - h..base] };
        for (r, &dar) in da.iter().enumerate() {
            if dar == 0.0 {
                continue;
            }
            for (gw, &xv) in grads.w[r * d..(r + 1) * d].iter_mut().zip(x) {
                *gw += dar * xv;
            }
            for (gu, &hv) in grads.u[r * h..(r + 1) * h].iter_mut().zip(h_prev) {
                *gu += dar * hv;
            }
            grads.b[r] += dar;
        }
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        if s > 0 {
            for (r, &dar) in da.iter().enumerate() {
                for (dn, &uv) in dh_next.iter_mut().zip(&p.u[r * h..(r + 1) * h]) {
                    *dn += dar * uv;
                }
            }
        }
    }
}

/// Mean binary cross-entropy over tokens, probabilities clamped to
/// `[1e-7, 1 - 1e-7]`. An empty sequence has zero loss.
pub fn loss(probs: &[f64], labels: &[u8]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} probabilities for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Ok(0.0);
    }
    Ok(loss_sum(probs, labels) / probs.len() as f64)
}

pub(crate) fn loss_sum(probs: &[f64], labels: &[u8]) -> f64 {
    probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic() {
        let a = TaggerModel::init(7, 5, 42).unwrap();
        let b = TaggerModel::init(7, 5, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, TaggerModel::init(7, 5, 43).unwrap());
    }

    #[test]
    fn init_ranges_and_forget_bias() {
        let m = TaggerModel::init(6, 9, 1).unwrap();
        let s = 1.0 / 3.0;
        for dir in [&m.params.forward, &m.params.backward] {
            assert!(dir.w.iter().chain(&dir.u).all(|x| x.abs() < s));
            assert!(dir.b[9..18].iter().all(|&x| x == 1.0));
            assert!(dir.b[..9].iter().chain(&dir.b[18..]).all(|&x| x == 0.0));
        }
        assert!(m.params.head_w.iter().all(|x| x.abs() < s));
        assert!(TaggerModel::init(0, 3, 1).is_err());
    }

    #[test]
    fn zero_model_outputs_half() {
        let m = TaggerModel::from_params(TaggerParams::zeros(3, 2), 3, 2, 0.5).unwrap();
        let out = m.forward(&[1.0, -2.0, 0.5, 3.0, 3.0, 3.0]).unwrap();
        assert_eq!(out.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn single_and_empty_sequences() {
        let m = TaggerModel::init(3, 2, 5).unwrap();
        let one = m.forward(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one.probs()[0] > 0.0 && one.probs()[0] < 1.0);
        let empty = m.forward(&[]).unwrap();
        assert!(empty.is_empty());
        let g = m.backward(&empty, &[]).unwrap();
        assert_eq!(g.l2_norm(), 0.0);
        assert!(m.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn loss_values() {
        assert!(loss(&[1.0, 0.0], &[1, 0]).unwrap() <= 1e-6);
        assert!((loss(&[0.5; 4], &[1, 0, 1, 0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let hand = -(0.9f64.ln() + 0.8f64.ln()) / 2.0;
        assert!((loss(&[0.9, 0.2], &[1, 0]).unwrap() - hand).abs() < 1e-15);
        assert!(loss(&[0.5], &[1, 0]).is_err());
    }

    #[test]
    fn stale_cache_rejected() {
        let mut m = TaggerModel::init(2, 2, 5).unwrap();
        let cache = m.forward(&[0.1, 0.2]).unwrap();
        m.params_mut().head_b += 0.1;
        assert!(matches!(m.backward(&cache, &[1]), Err(Error::StaleCache { .. })));
    }
}
