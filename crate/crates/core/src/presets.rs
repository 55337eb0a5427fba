//! Selected hyperparameters per window combination, plus the baseline
//! column network sized to its published parameter count.
//!
//! Feed-forward presets list L widths and activations per combination; the
//! first L−1 become hidden layers and the last layer is the linear output.

use crate::error::{Error, Result};
use crate::gbt::{GbtParams, Objective};
use crate::neural::{Activation, FeedForwardSpec, NetSpec, NetworkBSpec, TransformerSpec};
use crate::sensor::ChannelSet;

/// Published parameter counts, combos 1..=8 (documentation only).
pub const PUBLISHED_PARAMS_NETWORK_B: [usize; 8] =
    [806_000, 805_000, 804_000, 807_000, 819_000, 812_000, 809_000, 822_000];
pub const PUBLISHED_PARAMS_FEED_FORWARD: [usize; 8] = [
    2_233_000, 2_881_000, 1_701_000, 1_478_000, 2_554_000, 1_124_000, 1_794_000, 2_490_000,
];
pub const PUBLISHED_PARAMS_TRANSFORMER: [usize; 8] =
    [599_000, 203_000, 598_000, 401_000, 237_000, 114_000, 701_000, 103_000];

/// Published combo-1 normalized MAE reference points (documentation only).
pub const PUBLISHED_NMAE_COMBO1_BASELINE: f64 = 0.228;
pub const PUBLISHED_NMAE_COMBO1_GBT: f64 = 0.150;
pub const PUBLISHED_NMAE_COMBO1_TRANSFORMER: f64 = 0.156;
pub const PUBLISHED_NMAE_COMBO1_FEED_FORWARD: f64 = 0.168;

/// Epochs the baseline is trained for, without early stopping.
pub const NETWORK_B_EPOCHS: usize = 50;

/// Network architecture with its optimizer settings.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralPreset {
    pub spec: NetSpec,
    pub batch_size: usize,
    pub lr: f64,
}

fn index(combo: u8) -> Result<usize> {
    if (1..=8).contains(&combo) {
        Ok(combo as usize - 1)
    } else {
        Err(Error::config(format!("combo must be in 1..=8, got {combo}")))
    }
}

pub fn gbt(combo: u8) -> Result<GbtParams> {
    const ETA: [f64; 8] = [0.0431, 0.06818, 0.04942, 0.04457, 0.07178, 0.06647, 0.04901, 0.04798];
    const GAMMA: [f64; 8] = [1.0, 7.0, 2.0, 1.0, 7.0, 3.0, 3.0, 2.0];
    const N_ESTIMATORS: [usize; 8] = [972, 155, 932, 880, 230, 913, 715, 949];
    const MIN_CHILD_WEIGHT: [f64; 8] = [95.0, 6.0, 87.0, 67.0, 59.0, 83.0, 84.0, 84.0];
    const MAX_DELTA_STEP: [f64; 8] = [7.0, 10.0, 0.0, 1.0, 5.0, 3.0, 10.0, 1.0];
    const SUBSAMPLE: [f64; 8] = [0.647, 0.9632, 0.5042, 0.5068, 0.6114, 0.5486, 0.507, 0.5038];
    const BYTREE: [f64; 8] = [0.9825, 0.9517, 0.8671, 0.868, 0.7449, 0.8242, 0.9927, 0.7814];
    const BYLEVEL: [f64; 8] = [0.9819, 0.9223, 0.8572, 0.839, 0.9264, 0.7642, 0.9479, 0.8407];
    const BYNODE: [f64; 8] = [0.8042, 0.9155, 0.6173, 0.7416, 0.9802, 0.924, 0.8621, 0.9989];
    let i = index(combo)?;
    Ok(GbtParams {
        eta: ETA[i],
        gamma: GAMMA[i],
        n_estimators: N_ESTIMATORS[i],
        max_depth: 10,
        min_child_weight: MIN_CHILD_WEIGHT[i],
        max_delta_step: MAX_DELTA_STEP[i],
        subsample: SUBSAMPLE[i],
        colsample_bytree: BYTREE[i],
        colsample_bylevel: BYLEVEL[i],
        colsample_bynode: BYNODE[i],
        reg_lambda: 1.0,
        objective: Objective::AbsoluteError,
    })
}

pub fn feed_forward(combo: u8) -> Result<NeuralPreset> {
    use Activation::{Elu as E, Hardtanh as H, Relu as R, Sigmoid as S, Tanh as T};
    const L: Activation = Activation::LeakyRelu(0.0);
    let table: [(usize, f64, &[usize], &[Activation], f64); 8] = [
        (
            256,
            0.0003,
            &[860, 670, 160, 580, 900, 1000, 440],
            &[H, T, E, R, L, R, L],
            0.5,
        ),
        (
            512,
            0.0002,
            &[590, 300, 820, 520, 90, 670, 850, 120, 330, 570],
            &[E, R, H, E, L, R, E, E, E, L],
            0.7,
        ),
        (
            256,
            0.0005,
            &[620, 470, 120, 620, 830, 890, 350],
            &[T, E, E, L, L, E, L],
            0.4,
        ),
        (
            512,
            0.0006,
            &[730, 390, 120, 630, 770, 720, 380],
            &[T, T, E, H, S, L, L],
            0.2,
        ),
        (
            512,
            0.0003,
            &[820, 740, 190, 740, 1000, 850, 430],
            &[T, R, E, L, E, R, L],
            0.1,
        ),
        (
            512,
            0.0006,
            &[580, 710, 600, 170, 270, 350, 70, 780, 690],
            &[T, R, L, E, L, L, L, H, L],
            0.4,
        ),
        (
            512,
            0.0004,
            &[580, 580, 160, 450, 920, 920, 380],
            &[T, R, L, H, S, R, L],
            0.3,
        ),
        (
            512,
            0.0005,
            &[470, 600, 440, 830, 790, 900, 190, 270],
            &[T, R, E, L, H, L, E, L],
            0.6,
        ),
    ];
    let (batch_size, lr, widths, acts, slope) = table[index(combo)?];
    let hidden = widths.len() - 1;
    let activations = acts[..hidden]
        .iter()
        .map(|&a| match a {
            Activation::LeakyRelu(_) => Activation::LeakyRelu(slope),
            other => other,
        })
        .collect();
    Ok(NeuralPreset {
        spec: NetSpec::FeedForward(FeedForwardSpec {
            widths: widths[..hidden].to_vec(),
            activations,
            output_dim: ChannelSet::LEN,
        }),
        batch_size,
        lr,
    })
}

pub fn transformer(combo: u8) -> Result<NeuralPreset> {
    const BATCH: [usize; 8] = [512, 512, 512, 256, 512, 256, 512, 256];
    const LR: [f64; 8] = [0.00009, 0.00004, 0.00009, 0.0004, 0.004, 0.0003, 0.00004, 0.002];
    const LAYERS: [usize; 8] = [3, 8, 3, 2, 7, 4, 7, 2];
    const HEADS: [usize; 8] = [4, 8, 4, 8, 1, 4, 1, 8];
    const EMBED: [usize; 8] = [128, 128, 128, 128, 64, 32, 128, 64];
    const HIDDEN: [usize; 8] = [512, 512, 512, 512, 128, 256, 128, 256];
    let i = index(combo)?;
    Ok(NeuralPreset {
        spec: NetSpec::Transformer(TransformerSpec {
            n_layers: LAYERS[i],
            n_heads: HEADS[i],
            embed_dim: EMBED[i],
            hidden_dim: HIDDEN[i],
            dropout: 0.0,
            output_dim: ChannelSet::LEN,
        }),
        batch_size: BATCH[i],
        lr: LR[i],
    })
}

/// Baseline column network with 23 outputs (pac1 and tac included).
pub fn network_b() -> NeuralPreset {
    NeuralPreset {
        spec: NetSpec::NetworkB(NetworkBSpec {
            position_widths: vec![256, 256],
            force_widths: vec![256, 256],
            temperature_widths: vec![256, 256],
            trunk_widths: vec![512, 394],
            activation: Activation::Relu,
            output_dim: ChannelSet::LEN + 2,
        }),
        batch_size: 256,
        lr: 1e-3,
    }
}
