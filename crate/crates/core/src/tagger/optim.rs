//! RMSprop.

use serde::{Deserialize, Serialize};

use super::{TaggerModel, TaggerParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
}

/// One RMSprop update over a flat tensor:
///
/// ```text
/// s <- rho * s + (1 - rho) * g^2
/// p <- p - lr * g / (sqrt(s) + eps)
/// ```
pub fn rmsprop_step(params: &mut [f64], grads: &[f64], sq_avg: &mut [f64], config: &RmsPropConfig) -> Result<()> {
    if params.len() != grads.len() || params.len() != sq_avg.len() {
        return Err(Error::invalid("RMSprop tensors differ in length"));
    }
    if let Some(pos) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numerical(format!("non-finite gradient at index {pos}")));
    }
    let RmsPropConfig {
        learning_rate: lr,
        rho,
        epsilon: eps,
    } = *config;
    for ((p, &g), s) in params.iter_mut().zip(grads).zip(sq_avg.iter_mut()) {
        *s = rho * *s + (1.0 - rho) * g * g;
        *p -= lr * g / (s.sqrt() + eps);
    }
    Ok(())
}

/// RMSprop with its squared-gradient averages for a whole tagger.
#[derive(Debug, Clone)]
pub struct RmsProp {
    config: RmsPropConfig,
    sq_avg: Option<TaggerParams>,
}

impl RmsProp {
    pub fn new(config: RmsPropConfig) -> Self {
        RmsProp { config, sq_avg: None }
    }

    pub fn state(&self) -> Option<&TaggerParams> {
        self.sq_avg.as_ref()
    }

    pub fn step(&mut self, model: &mut TaggerModel, grads: &TaggerParams) -> Result<()> {
        if !grads.all_finite() {
            return Err(Error::Numerical("non-finite gradient".into()));
        }
        let (d, h) = (model.input_dim(), model.hidden());
        let state = self.sq_avg.get_or_insert_with(|| TaggerParams::zeros(d, h));
        for ((p, g), s) in model
            .params_mut()
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(state.tensors_mut())
        {
            rmsprop_step(p, g, s, &self.config)?;
        }
        Ok(())
    }
}
