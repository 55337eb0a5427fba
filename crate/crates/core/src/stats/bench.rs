//! Single-call inference latency.

use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::model::Regressor;
use crate::error::{Error, Result};
use crate::rng;

const WARMUP: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub n_inputs: usize,
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

/// Time one `predict_one` call per seeded standard-normal input, after
/// `WARMUP` untimed calls. Runs on the calling thread only.
pub fn bench_latency(model: &dyn Regressor, input_size: usize, n_inputs: usize, seed: u64) -> Result<LatencyReport> {
    if n_inputs == 0 {
        return Err(Error::config("empty benchmark"));
    }
    if input_size != model.input_dim() {
        return Err(Error::Dimension {
            expected: model.input_dim(),
            got: input_size,
        });
    }
    let mut r = rng::rng(seed);
    let inputs: Vec<Vec<f64>> = (0..n_inputs)
        .map(|_| (0..input_size).map(|_| StandardNormal.sample(&mut r)).collect())
        .collect();
    for x in inputs.iter().cycle().take(WARMUP) {
        std::hint::black_box(model.predict_one(x)?);
    }
    let mut times = Vec::with_capacity(n_inputs);
    for x in &inputs {
        let start = Instant::now();
        std::hint::black_box(model.predict_one(std::hint::black_box(x))?);
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(LatencyReport {
        n_inputs,
        mean_ms: times.iter().sum::<f64>() / n_inputs as f64,
        min_ms: times.iter().copied().fold(f64::INFINITY, f64::min),
        max_ms: times.iter().copied().fold(0.0, f64::max),
    })
}
