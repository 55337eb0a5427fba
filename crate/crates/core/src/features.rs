//! Windowed input encodings and z-score scaling.
//!
//! Feature order is positions first, then forces, each in ascending timestep
//! and each as an (x, y, z) triple; the temperature reading, when included,
//! comes last.

use std::ops::Range;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensor::SensorFrame;

/// Widest context any combination needs on either side of T.
pub const MAX_CONTEXT: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub combo: u8,
    #[serde(default)]
    pub include_temperature: bool,
}

impl WindowSpec {
    pub fn new(combo: u8) -> Result<Self> {
        let s = WindowSpec {
            combo,
            include_temperature: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_temperature(mut self) -> Self {
        self.include_temperature = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if (1..=8).contains(&self.combo) {
            Ok(())
        } else {
            Err(Error::config(format!("combo must be in 1..=8, got {}", self.combo)))
        }
    }

    /// Tick offsets of the position samples.
    pub fn position_offsets(&self) -> Vec<i64> {
        match self.combo {
            7 | 8 => vec![-10, 0, 10],
            _ => vec![0],
        }
    }

    /// Tick offsets of the force samples.
    pub fn force_offsets(&self) -> Vec<i64> {
        match self.combo {
            1 | 7 => vec![-10, 0, 10],
            2 => vec![-10, 0],
            3 => vec![0],
            4 => vec![-10, -5, 0, 5, 10],
            5 | 8 => (-10..=10).collect(),
            6 => (-10..=0).collect(),
            _ => Vec::new(),
        }
    }

    pub fn lookback(&self) -> usize {
        self.offsets().first().map_or(0, |&o| (-o).max(0) as usize)
    }

    pub fn lookahead(&self) -> usize {
        self.offsets().last().map_or(0, |&o| o.max(0) as usize)
    }

    /// All distinct timesteps touched, ascending.
    pub fn offsets(&self) -> Vec<i64> {
        let mut all = self.position_offsets();
        all.extend(self.force_offsets());
        all.sort_unstable();
        all.dedup();
        all
    }

    /// Index of the temperature feature, if present.
    pub fn temperature_index(&self) -> Option<usize> {
        self.include_temperature.then(|| input_size(self) - 1)
    }
}

pub fn input_size(spec: &WindowSpec) -> usize {
    3 * (spec.position_offsets().len() + spec.force_offsets().len()) + usize::from(spec.include_temperature)
}

/// Assemble the input at index `t` of `frames`. `None` if any required tick
/// falls outside the slice; pass a single chunk to keep windows inside it.
pub fn build_window(frames: &[SensorFrame], t: usize, spec: &WindowSpec) -> Option<Vec<f64>> {
    if t < spec.lookback() || t + spec.lookahead() >= frames.len() {
        return None;
    }
    let at = |o: i64| &frames[(t as i64 + o) as usize];
    let mut v = Vec::with_capacity(input_size(spec));
    for o in spec.position_offsets() {
        v.extend_from_slice(&at(o).position_mm);
    }
    for o in spec.force_offsets() {
        v.extend_from_slice(&at(o).force_n);
    }
    if spec.include_temperature {
        v.push(frames[t].tdc);
    }
    Some(v)
}

/// One transformer token per timestep: where its position and force triples
/// sit in the flat feature vector, and whether it carries the temperature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSlot {
    pub position: Option<usize>,
    pub force: Option<usize>,
    pub temperature: Option<usize>,
}

pub fn token_layout(spec: &WindowSpec) -> Vec<TokenSlot> {
    let pos = spec.position_offsets();
    let force = spec.force_offsets();
    let n_pos = pos.len();
    spec.offsets()
        .into_iter()
        .map(|o| TokenSlot {
            position: pos.iter().position(|&p| p == o).map(|i| 3 * i),
            force: force.iter().position(|&f| f == o).map(|i| 3 * (n_pos + i)),
            temperature: if o == 0 { spec.temperature_index() } else { None },
        })
        .collect()
}

/// Inputs, targets and the frame indices they were taken at.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSet {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub ticks: Vec<usize>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }
}

/// Windows at every tick of the given chunks that lies at least `margin`
/// ticks from the chunk edges. Targets are the 21 model channels, or the 23
/// extended ones when `extended_targets` is set.
pub fn assemble(
    frames: &[SensorFrame],
    chunks: &[Range<usize>],
    spec: &WindowSpec,
    margin: usize,
    extended_targets: bool,
) -> WindowSet {
    let margin = margin.max(spec.lookback()).max(spec.lookahead());
    let n_in = input_size(spec);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ticks = Vec::new();
    for r in chunks {
        let chunk = &frames[r.clone()];
        if chunk.len() <= 2 * margin {
            continue;
        }
        for t in margin..chunk.len() - margin {
            if let Some(x) = build_window(chunk, t, spec) {
                xs.extend(x);
                let f = &chunk[t];
                if extended_targets {
                    ys.extend(f.extended_targets());
                } else {
                    ys.extend(f.targets());
                }
                ticks.push(r.start + t);
            }
        }
    }
    let n_out = if extended_targets { 23 } else { 21 };
    let n = ticks.len();
    WindowSet {
        x: Array2::from_shape_vec((n, n_in), xs).expect("window width"),
        y: Array2::from_shape_vec((n, n_out), ys).expect("target width"),
        ticks,
    }
}

/// Per-column mean and population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &Array2<f64>) -> Self {
        let n = data.nrows().max(1) as f64;
        let mut mean = Vec::with_capacity(data.ncols());
        let mut std = Vec::with_capacity(data.ncols());
        for col in data.axis_iter(Axis(1)) {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            // Constant (or numerically constant) columns keep unit scale.
            let s = if s <= 1e-12 * m.abs().max(1.0) { 1.0 } else { s };
            mean.push(m);
            std.push(s);
        }
        Standardizer { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn invert(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| x * s + m)
            .collect()
    }

    pub fn apply_matrix(&self, data: &Array2<f64>) -> Array2<f64> {
        let mut out = data.clone();
        for mut row in out.axis_iter_mut(Axis(0)) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        out
    }

    pub fn invert_matrix(&self, data: &Array2<f64>) -> Array2<f64> {
        let mut out = data.clone();
        for mut row in out.axis_iter_mut(Axis(0)) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = *v * self.std[j] + self.mean[j];
            }
        }
        out
    }

    pub fn apply_row(&self, row: ArrayView1<f64>) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| (v - self.mean[j]) / self.std[j])
            .collect()
    }
}

/// Input and output standardizers, fitted on training windows only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub input: Standardizer,
    pub output: Standardizer,
}

pub fn fit_scaler(train: &WindowSet) -> Scaler {
    Scaler {
        input: Standardizer::fit(&train.x),
        output: Standardizer::fit(&train.y),
    }
}
