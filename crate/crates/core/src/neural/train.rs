//! Mini-batch training with early stopping on validation loss.

use ndarray::{s, Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::optim::{adam_step, loss_eq1, AdamState};
use super::{Network, NeuralModel};
use crate::error::{Error, Result};
use crate::features::WindowSet;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub max_epochs: usize,
    /// `None` trains exactly `max_epochs` and keeps the final parameters.
    pub patience: Option<usize>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::config("batch_size and max_epochs must be positive"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainCurves {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

/// Mean loss over a whole set, evaluated in chunks.
pub(crate) fn evaluate_loss(net: &Network, params: &[f64], set: &WindowSet) -> Result<f64> {
    const CHUNK: usize = 2048;
    let mut total = 0.0;
    let mut start = 0;
    while start < set.len() {
        let end = (start + CHUNK).min(set.len());
        let yhat = net.predict(params, &set.x.slice(s![start..end, ..]))?;
        let y = set.y.slice(s![start..end, ..]).to_owned();
        total += loss_eq1(&y, &yhat)?.0 * (end - start) as f64;
        start = end;
    }
    Ok(total / set.len() as f64)
}

/// Train `net` on already-normalized windows. Shuffling, dropout and
/// initialization draw from separate sub-streams of `config.seed`.
pub fn train(net: Network, train_set: &WindowSet, val_set: &WindowSet, config: &TrainConfig) -> Result<NeuralModel> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Insufficient(
            "training and validation sets must be non-empty".into(),
        ));
    }
    for set in [train_set, val_set] {
        if set.y.ncols() != net.output_dim() {
            return Err(Error::Dimension {
                expected: net.output_dim(),
                got: set.y.ncols(),
            });
        }
    }
    let mut shuffle = rng::sub_rng(config.seed, 0);
    let mut drop = rng::sub_rng(config.seed, 1);
    let mut params = net.init_params(rng::derive_seed(config.seed, 2));
    let mut adam = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut curves = TrainCurves::default();
    let mut best = (f64::INFINITY, params.clone());

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let x = train_set.x.select(Axis(0), batch);
            let y: Array2<f64> = train_set.y.select(Axis(0), batch);
            let (yhat, cache) = net.forward(&params, &x.view(), Some(&mut drop))?;
            let (loss, dy) = loss_eq1(&y, &yhat)?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!("non-finite training loss at epoch {epoch}")));
            }
            let grads = net.backward(&params, &cache, &dy);
            adam_step(&mut params, &grads, &mut adam, config.lr);
            epoch_loss += loss * batch.len() as f64;
        }
        let val = evaluate_loss(&net, &params, val_set)?;
        if !val.is_finite() {
            return Err(Error::Numerical(format!("non-finite validation loss at epoch {epoch}")));
        }
        curves.train_loss.push(epoch_loss / train_set.len() as f64);
        curves.val_loss.push(val);
        match config.patience {
            None => {
                curves.best_epoch = epoch;
                best.0 = val;
            }
            Some(patience) => {
                if val < best.0 {
                    best = (val, params.clone());
                    curves.best_epoch = epoch;
                }
                if epoch - curves.best_epoch >= patience {
                    break;
                }
            }
        }
    }
    let params = if config.patience.is_some() { best.1 } else { params };
    Ok(NeuralModel {
        network: net,
        params,
        scaler: None,
        curves,
    })
}
