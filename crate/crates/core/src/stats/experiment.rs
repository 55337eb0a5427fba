//! Chunked cross-validation: fit a scaler and a model per fold, score the
//! held-out chunks on the model output channels.

use ndarray::{s, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{naive_baseline, per_channel_mae};
use super::model::{ModelArtifact, NaiveModel, TrainedModel};
use crate::dataio::FoldPlan;
use crate::error::{Error, Result};
use crate::features::{assemble, fit_scaler, input_size, WindowSet, WindowSpec, MAX_CONTEXT};
use crate::gbt::{fit_all, GbtParams};
use crate::neural::{train, NetSpec, Network, TrainConfig};
use crate::rng;
use crate::sensor::{ChannelSet, SensorFrame, N_ELECTRODES};

/// Optimizer settings for a network; the seed comes from the experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuralTraining {
    pub batch_size: usize,
    pub lr: f64,
    pub max_epochs: usize,
    /// `None` trains all `max_epochs` and keeps the last parameters.
    #[serde(default)]
    pub patience: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelConfig {
    Naive,
    Gbt { params: GbtParams },
    Neural { spec: NetSpec, training: NeuralTraining },
}

impl ModelConfig {
    /// Whether the model regresses the two extra baseline channels.
    fn extended_targets(&self) -> Result<bool> {
        match self {
            ModelConfig::Neural { spec, .. } => match spec.output_dim() {
                ChannelSet::LEN => Ok(false),
                n if n == ChannelSet::LEN + 2 => Ok(true),
                n => Err(Error::config(format!(
                    "network output_dim must be {} or {}, got {n}",
                    ChannelSet::LEN,
                    ChannelSet::LEN + 2
                ))),
            },
            _ => Ok(false),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelConfig::Naive => "naive",
            ModelConfig::Gbt { .. } => "gbt",
            ModelConfig::Neural { spec, .. } => spec.kind(),
        }
    }
}

/// Scores of one model on one fold's test chunks. Channel vectors follow
/// [`ChannelSet`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub kind: String,
    pub combo: u8,
    pub temperature: bool,
    pub n_train: usize,
    pub n_test: usize,
    pub nmae_all: f64,
    pub nmae_electrodes: f64,
    pub mae_all: f64,
    pub mae_electrodes: f64,
    pub channel_nmae: Vec<f64>,
    pub channel_mae: Vec<f64>,
}

/// A fold's trained model and its raw held-out windows.
pub struct FittedFold {
    pub fold: usize,
    pub artifact: ModelArtifact,
    /// Raw test windows (original scale).
    pub test: WindowSet,
    pub n_train: usize,
}

fn chunks(plan: &FoldPlan, ids: &[usize]) -> Vec<std::ops::Range<usize>> {
    ids.iter().map(|&c| plan.chunk_range(c)).collect()
}

fn normalized(set: &WindowSet, scaler: &crate::features::Scaler) -> WindowSet {
    WindowSet {
        x: scaler.input.apply_matrix(&set.x),
        y: scaler.output.apply_matrix(&set.y),
        ticks: set.ticks.clone(),
    }
}

/// Train `config` on fold `fold` of `plan`. Every window keeps
/// [`MAX_CONTEXT`] ticks from its chunk edges so all combinations score the
/// same ticks.
pub fn fit_fold(
    frames: &[SensorFrame],
    plan: &FoldPlan,
    fold: usize,
    config: &ModelConfig,
    window: &WindowSpec,
    seed: u64,
) -> Result<FittedFold> {
    let assignment = plan
        .folds
        .get(fold)
        .ok_or_else(|| Error::config(format!("fold {fold} not in plan of {}", plan.folds.len())))?;
    if plan.n_chunks * plan.chunk_size > frames.len() {
        return Err(Error::config(format!(
            "fold plan covers {} ticks but the dataset has {}",
            plan.n_chunks * plan.chunk_size,
            frames.len()
        )));
    }
    let extended = config.extended_targets()?;
    let build = |ids: &[usize]| assemble(frames, &chunks(plan, ids), window, MAX_CONTEXT, extended);
    let (train_raw, val_raw, test) = (
        build(&assignment.train),
        build(&assignment.validation),
        build(&assignment.test),
    );
    if train_raw.is_empty() || test.is_empty() {
        return Err(Error::Insufficient(format!("fold {fold} has no train or test windows")));
    }
    let scaler = fit_scaler(&train_raw);
    let tr = normalized(&train_raw, &scaler);
    let fold_seed = rng::derive_seed(seed, fold as u64);
    let model = match config {
        ModelConfig::Naive => TrainedModel::Naive(NaiveModel {
            baseline: naive_baseline(&tr.y)?,
            n_features: input_size(window),
        }),
        ModelConfig::Gbt { params } => TrainedModel::Gbt(fit_all(&tr.x, &tr.y, params, fold_seed)?),
        ModelConfig::Neural { spec, training } => {
            let net = Network::new(spec.clone(), *window)?;
            let cfg = TrainConfig {
                batch_size: training.batch_size,
                lr: training.lr,
                max_epochs: training.max_epochs,
                patience: training.patience,
                seed: fold_seed,
            };
            let va = normalized(&val_raw, &scaler);
            let mut m = train(net, &tr, &va, &cfg)?;
            m.scaler = Some(scaler.clone());
            TrainedModel::Neural(m)
        }
    };
    Ok(FittedFold {
        fold,
        artifact: ModelArtifact {
            model,
            scaler,
            window: *window,
        },
        test,
        n_train: train_raw.len(),
    })
}

impl FittedFold {
    /// Normalized predictions for raw inputs `x`.
    pub fn predict_normalized(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let xn = self.artifact.scaler.input.apply_matrix(x);
        self.artifact.model.regressor().predict_batch(&xn)
    }

    /// Score normalized predictions for the test windows.
    pub fn score(&self, yhat_norm: &Array2<f64>) -> Result<FoldResult> {
        let out = &self.artifact.scaler.output;
        let y_norm = out.apply_matrix(&self.test.y);
        let cols = s![.., ..ChannelSet::LEN];
        let channel_nmae = per_channel_mae(&y_norm.slice(cols).to_owned(), &yhat_norm.slice(cols).to_owned())?;
        let yhat = out.invert_matrix(yhat_norm);
        let channel_mae = per_channel_mae(&self.test.y.slice(cols).to_owned(), &yhat.slice(cols).to_owned())?;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        Ok(FoldResult {
            fold: self.fold,
            kind: self.artifact.model.kind().to_string(),
            combo: self.artifact.window.combo,
            temperature: self.artifact.window.include_temperature,
            n_train: self.n_train,
            n_test: self.test.len(),
            nmae_all: mean(&channel_nmae),
            nmae_electrodes: mean(&channel_nmae[..N_ELECTRODES]),
            mae_all: mean(&channel_mae),
            mae_electrodes: mean(&channel_mae[..N_ELECTRODES]),
            channel_nmae,
            channel_mae,
        })
    }

    /// Score the model on its own test windows.
    pub fn evaluate(&self) -> Result<FoldResult> {
        self.score(&self.predict_normalized(&self.test.x)?)
    }

    /// Score with the raw temperature input of every test window set to
    /// `tdc`. Errors if the model takes no temperature.
    pub fn evaluate_fixed_temperature(&self, tdc: f64) -> Result<FoldResult> {
        let idx = self
            .artifact
            .window
            .temperature_index()
            .ok_or_else(|| Error::config("model has no temperature input"))?;
        let mut x = self.test.x.clone();
        x.column_mut(idx).fill(tdc);
        self.score(&self.predict_normalized(&x)?)
    }
}

/// Fit and score every fold of `plan`. Folds run in parallel; each has its
/// own seed derived from `seed`, so results do not depend on scheduling.
pub fn run_experiment(
    frames: &[SensorFrame],
    plan: &FoldPlan,
    config: &ModelConfig,
    window: &WindowSpec,
    seed: u64,
) -> Result<Vec<FoldResult>> {
    fit_folds(frames, plan, config, window, seed)?
        .iter()
        .map(FittedFold::evaluate)
        .collect()
}

/// The fitted models behind [`run_experiment`].
pub fn fit_folds(
    frames: &[SensorFrame],
    plan: &FoldPlan,
    config: &ModelConfig,
    window: &WindowSpec,
    seed: u64,
) -> Result<Vec<FittedFold>> {
    window.validate()?;
    (0..plan.folds.len())
        .into_par_iter()
        .map(|f| fit_fold(frames, plan, f, config, window, seed))
        .collect()
}

/// Per-fold differences `a − b` of `nmae_all`, paired by fold index.
pub fn paired_differences(a: &[FoldResult], b: &[FoldResult]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::config(format!("{} folds vs {} folds", a.len(), b.len())));
    }
    let mut b_sorted: Vec<&FoldResult> = b.iter().collect();
    b_sorted.sort_by_key(|r| r.fold);
    let mut a_sorted: Vec<&FoldResult> = a.iter().collect();
    a_sorted.sort_by_key(|r| r.fold);
    a_sorted
        .iter()
        .zip(&b_sorted)
        .map(|(x, y)| {
            if x.fold == y.fold {
                Ok(x.nmae_all - y.nmae_all)
            } else {
                Err(Error::config(format!("fold {} has no partner", x.fold)))
            }
        })
        .collect()
}

/// Mean per-fold train and test window counts, for the t-test correction.
pub fn mean_sizes(results: &[FoldResult]) -> (f64, f64) {
    let n = results.len().max(1) as f64;
    (
        results.iter().map(|r| r.n_train as f64).sum::<f64>() / n,
        results.iter().map(|r| r.n_test as f64).sum::<f64>() / n,
    )
}
