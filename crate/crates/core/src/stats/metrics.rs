//! Error metrics and the constant-mean reference predictor.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn same_shape(y: &Array2<f64>, yhat: &Array2<f64>) -> Result<()> {
    if y.dim() == yhat.dim() {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: y.len(),
            got: yhat.len(),
        })
    }
}

/// Mean absolute error over every element.
pub fn mae(y: &Array2<f64>, yhat: &Array2<f64>) -> Result<f64> {
    same_shape(y, yhat)?;
    if y.is_empty() {
        return Err(Error::Insufficient("no samples to score".into()));
    }
    Ok((y - yhat).mapv(f64::abs).mean().expect("non-empty"))
}

/// Mean absolute error of each column.
pub fn per_channel_mae(y: &Array2<f64>, yhat: &Array2<f64>) -> Result<Vec<f64>> {
    same_shape(y, yhat)?;
    if y.nrows() == 0 {
        return Err(Error::Insufficient("no samples to score".into()));
    }
    Ok((y - yhat).mapv(f64::abs).mean_axis(Axis(0)).expect("rows").to_vec())
}

/// Mean absolute error of z-scored values over the listed columns.
pub fn normalized_mae(y_norm: &Array2<f64>, yhat_norm: &Array2<f64>, channels: &[usize]) -> Result<f64> {
    if channels.is_empty() {
        return Err(Error::config("empty channel subset"));
    }
    if let Some(&c) = channels.iter().find(|&&c| c >= y_norm.ncols()) {
        return Err(Error::config(format!("channel {c} out of range")));
    }
    let per = per_channel_mae(y_norm, yhat_norm)?;
    Ok(channels.iter().map(|&c| per[c]).sum::<f64>() / channels.len() as f64)
}

/// Predicts each channel's training mean regardless of input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveBaseline {
    pub mean: Vec<f64>,
}

impl NaiveBaseline {
    pub fn predict(&self, n_rows: usize) -> Array2<f64> {
        let row = ndarray::ArrayView1::from(&self.mean);
        row.broadcast((n_rows, self.mean.len())).expect("broadcast").to_owned()
    }
}

pub fn naive_baseline(train_targets: &Array2<f64>) -> Result<NaiveBaseline> {
    let mean = train_targets
        .mean_axis(Axis(0))
        .ok_or_else(|| Error::Insufficient("no training targets".into()))?;
    Ok(NaiveBaseline { mean: mean.to_vec() })
}
