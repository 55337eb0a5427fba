//! Experiment files: which dataset, how to split it, which model.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tacsim::dataio::{make_fold_plan, FoldPlan};
use tacsim::features::WindowSpec;
use tacsim::presets;
use tacsim::stats::{ModelConfig, NeuralTraining};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldSettings {
    pub n_folds: usize,
    pub chunk_size: usize,
    pub chunks_per_split: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Naive,
    Gbt,
    FeedForward,
    Transformer,
    NetworkB,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelChoice {
    /// A published configuration for the experiment's combo.
    Preset {
        preset: PresetName,
        #[serde(default)]
        max_epochs: Option<usize>,
        #[serde(default)]
        patience: Option<usize>,
    },
    Explicit(ModelConfig),
}

/// Temperature fed to a temperature-input model at evaluation time.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EvalTemperature {
    /// `"dataset_mean"`: mean tdc over the whole dataset.
    Named(String),
    Counts(f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub folds: FoldSettings,
    pub model: ModelChoice,
    pub combo: u8,
    #[serde(default)]
    pub temperature: bool,
    #[serde(default)]
    pub eval_temperature: Option<EvalTemperature>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Load and resolve relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig = crate::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.dataset.is_relative() {
            cfg.dataset = base.join(&cfg.dataset);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        if !cfg.dataset.exists() {
            return Err(CliError::NotFound(cfg.dataset.clone()));
        }
        self_check(&cfg)?;
        Ok(cfg)
    }

    pub fn window(&self) -> Result<WindowSpec, CliError> {
        let w = WindowSpec::new(self.combo)?;
        Ok(if self.temperature { w.with_temperature() } else { w })
    }

    pub fn fold_plan(&self, len: usize) -> Result<FoldPlan, CliError> {
        let f = &self.folds;
        Ok(make_fold_plan(
            len,
            f.n_folds,
            f.chunk_size,
            f.chunks_per_split,
            f.seed,
        )?)
    }

    pub fn model_config(&self) -> Result<ModelConfig, CliError> {
        let (preset, max_epochs, patience) = match &self.model {
            ModelChoice::Explicit(m) => return Ok(m.clone()),
            ModelChoice::Preset {
                preset,
                max_epochs,
                patience,
            } => (*preset, *max_epochs, *patience),
        };
        let neural = |p: presets::NeuralPreset, epochs: usize, patience: Option<usize>| ModelConfig::Neural {
            spec: p.spec,
            training: NeuralTraining {
                batch_size: p.batch_size,
                lr: p.lr,
                max_epochs: epochs,
                patience,
            },
        };
        Ok(match preset {
            PresetName::Naive => ModelConfig::Naive,
            PresetName::Gbt => ModelConfig::Gbt {
                params: presets::gbt(self.combo)?,
            },
            PresetName::FeedForward => neural(
                presets::feed_forward(self.combo)?,
                max_epochs.unwrap_or(100),
                patience.or(Some(10)),
            ),
            PresetName::Transformer => neural(
                presets::transformer(self.combo)?,
                max_epochs.unwrap_or(100),
                patience.or(Some(10)),
            ),
            PresetName::NetworkB => neural(
                presets::network_b(),
                max_epochs.unwrap_or(presets::NETWORK_B_EPOCHS),
                patience,
            ),
        })
    }
}

fn self_check(cfg: &ExperimentConfig) -> Result<(), CliError> {
    cfg.window()?;
    if let ModelChoice::Preset {
        preset: PresetName::NetworkB,
        ..
    } = cfg.model
    {
        if !cfg.temperature {
            return Err(CliError::Usage(
                "the network_b preset expects \"temperature\": true".into(),
            ));
        }
    }
    match &cfg.eval_temperature {
        Some(EvalTemperature::Named(n)) if n != "dataset_mean" => Err(CliError::Usage(format!(
            "eval_temperature must be \"dataset_mean\" or a number, got {n:?}"
        ))),
        Some(_) if !cfg.temperature => Err(CliError::Usage(
            "eval_temperature needs a model with \"temperature\": true".into(),
        )),
        _ => Ok(()),
    }
}
