//! Evaluating a temperature-input model with its temperature clamped.

use serde::{Deserialize, Serialize};

use super::experiment::FittedFold;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub grid: Vec<f64>,
    /// Normalized MAE over the model channels at each grid temperature.
    pub nmae: Vec<f64>,
    /// Normalized MAE with each window's own temperature.
    pub true_nmae: f64,
}

impl SweepCurve {
    /// Grid temperature with the lowest error, and that error.
    pub fn best(&self) -> (f64, f64) {
        self.grid
            .iter()
            .zip(&self.nmae)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(&t, &e)| (t, e))
            .unwrap_or((f64::NAN, f64::NAN))
    }
}

/// `n` evenly spaced points over `[min, max]` of `values`.
pub fn temperature_grid(values: &[f64], n: usize) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match n {
        0 => Vec::new(),
        1 => vec![(lo + hi) / 2.0],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Score `fitted` on its test windows with the raw temperature input set to
/// each grid value in turn.
pub fn fixed_temperature_sweep(fitted: &FittedFold, grid: &[f64]) -> Result<SweepCurve> {
    if fitted.artifact.window.temperature_index().is_none() {
        return Err(Error::config("model has no temperature input"));
    }
    let true_nmae = fitted.evaluate()?.nmae_all;
    let nmae = grid
        .iter()
        .map(|&t| Ok(fitted.evaluate_fixed_temperature(t)?.nmae_all))
        .collect::<Result<_>>()?;
    Ok(SweepCurve {
        grid: grid.to_vec(),
        nmae,
        true_nmae,
    })
}
