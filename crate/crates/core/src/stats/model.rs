//! A uniform handle over the regressor families and their model files.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::metrics::NaiveBaseline;
use crate::error::{Error, Result};
use crate::features::{Scaler, WindowSpec};
use crate::gbt::GbtModel;
use crate::neural::{self, NeuralModel};

/// Maps normalized input windows to normalized outputs.
pub trait Regressor: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn predict_one(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn predict_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>>;
}

impl Regressor for GbtModel {
    fn input_dim(&self) -> usize {
        self.n_features
    }
    fn output_dim(&self) -> usize {
        self.channels.len()
    }
    fn predict_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.predict(x)
    }
    fn predict_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.predict_matrix(x)
    }
}

impl Regressor for NeuralModel {
    fn input_dim(&self) -> usize {
        self.network.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.network.output_dim()
    }
    fn predict_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.predict(x)
    }
    fn predict_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.predict_matrix(x)
    }
}

/// The naive predictor together with the input width it ignores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveModel {
    pub baseline: NaiveBaseline,
    pub n_features: usize,
}

impl Regressor for NaiveModel {
    fn input_dim(&self) -> usize {
        self.n_features
    }
    fn output_dim(&self) -> usize {
        self.baseline.mean.len()
    }
    fn predict_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_width(self.n_features, x.len())?;
        Ok(self.baseline.mean.clone())
    }
    fn predict_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        check_width(self.n_features, x.ncols())?;
        Ok(self.baseline.predict(x.nrows()))
    }
}

fn check_width(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrainedModel {
    Naive(NaiveModel),
    Gbt(GbtModel),
    Neural(NeuralModel),
}

impl TrainedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::Naive(_) => "naive",
            TrainedModel::Gbt(_) => "gbt",
            TrainedModel::Neural(m) => m.network.spec().kind(),
        }
    }

    pub fn regressor(&self) -> &dyn Regressor {
        match self {
            TrainedModel::Naive(m) => m,
            TrainedModel::Gbt(m) => m,
            TrainedModel::Neural(m) => m,
        }
    }
}

/// On-disk form of the non-neural models.
#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum JsonModel {
    Naive {
        model: NaiveModel,
        scaler: Scaler,
        window: WindowSpec,
    },
    Gbt {
        model: GbtModel,
        scaler: Scaler,
        window: WindowSpec,
    },
}

/// A model with everything needed to score raw windows.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelArtifact {
    pub model: TrainedModel,
    pub scaler: Scaler,
    pub window: WindowSpec,
}

impl ModelArtifact {
    /// Predictions on the original scale for raw input windows.
    pub fn predict_raw(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        let xn = self.scaler.input.apply_matrix(&x.to_owned());
        let yn = self.model.regressor().predict_batch(&xn)?;
        Ok(self.scaler.output.invert_matrix(&yn))
    }

    /// Neural models use the binary checkpoint format, the rest JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = match &self.model {
            TrainedModel::Neural(m) => {
                let mut m = m.clone();
                m.scaler = Some(self.scaler.clone());
                return neural::save_model(&m, path);
            }
            TrainedModel::Naive(m) => JsonModel::Naive {
                model: m.clone(),
                scaler: self.scaler.clone(),
                window: self.window,
            },
            TrainedModel::Gbt(m) => JsonModel::Gbt {
                model: m.clone(),
                scaler: self.scaler.clone(),
                window: self.window,
            },
        };
        fs::write(path, serde_json::to_vec(&json)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(neural::MAGIC) {
            let m = neural::load_model(path)?;
            let scaler = m
                .scaler
                .clone()
                .ok_or_else(|| Error::config(format!("{}: checkpoint has no scaler", path.display())))?;
            let window = *m.network.window();
            return Ok(ModelArtifact {
                model: TrainedModel::Neural(m),
                scaler,
                window,
            });
        }
        Ok(match serde_json::from_slice(&bytes)? {
            JsonModel::Naive { model, scaler, window } => ModelArtifact {
                model: TrainedModel::Naive(model),
                scaler,
                window,
            },
            JsonModel::Gbt { model, scaler, window } => ModelArtifact {
                model: TrainedModel::Gbt(model),
                scaler,
                window,
            },
        })
    }

    /// File extension matching [`ModelArtifact::save`].
    pub fn extension(&self) -> &'static str {
        match self.model {
            TrainedModel::Neural(_) => "tsnn",
            _ => "json",
        }
    }
}
