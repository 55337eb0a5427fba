//! Dense and attention regressors with hand-written backpropagation.
//!
//! A [`Network`] is the parameter layout derived from a [`NetSpec`] and the
//! input [`WindowSpec`]; its weights live in one flat `Vec<f64>` so that the
//! optimizer, checkpoints and gradient checks all treat parameters uniformly.

mod ffn;
mod io;
mod layers;
mod network_b;
mod optim;
mod train;
mod transformer;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{input_size, Scaler, WindowSpec};
use crate::rng;

pub use ffn::FeedForwardSpec;
pub use io::{load_model, save_model, MAGIC};
pub use layers::{Activation, Dense, LayerNorm};
pub use network_b::NetworkBSpec;
pub use optim::{adam_step, loss_eq1, AdamState};
pub use train::{train, TrainConfig, TrainCurves};
pub use transformer::TransformerSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetSpec {
    NetworkB(NetworkBSpec),
    FeedForward(FeedForwardSpec),
    Transformer(TransformerSpec),
}

impl NetSpec {
    pub fn output_dim(&self) -> usize {
        match self {
            NetSpec::NetworkB(s) => s.output_dim,
            NetSpec::FeedForward(s) => s.output_dim,
            NetSpec::Transformer(s) => s.output_dim,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NetSpec::NetworkB(_) => "network_b",
            NetSpec::FeedForward(_) => "feed_forward",
            NetSpec::Transformer(_) => "transformer",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = match self {
            NetSpec::NetworkB(s) => s.validate(),
            NetSpec::FeedForward(s) => s.validate(),
            NetSpec::Transformer(s) => s.validate(),
        };
        r.map_err(Error::Config)
    }
}

/// How a parameter block is initialized.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Init {
    /// Uniform in ±√(6/(fan_in + fan_out)).
    Glorot {
        fan_in: usize,
        fan_out: usize,
    },
    Zeros,
    Ones,
    Normal(f64),
}

#[derive(Clone, Debug, PartialEq)]
struct Block {
    offset: usize,
    len: usize,
    init: Init,
}

/// Sequential allocator of parameter blocks.
#[derive(Default)]
struct Alloc {
    blocks: Vec<Block>,
    n: usize,
}

impl Alloc {
    fn block(&mut self, len: usize, init: Init) -> usize {
        let offset = self.n;
        self.blocks.push(Block { offset, len, init });
        self.n += len;
        offset
    }

    fn dense(&mut self, n_in: usize, n_out: usize) -> Dense {
        let w = self.block(
            n_in * n_out,
            Init::Glorot {
                fan_in: n_in,
                fan_out: n_out,
            },
        );
        let b = self.block(n_out, Init::Zeros);
        Dense { w, b, n_in, n_out }
    }

    fn layer_norm(&mut self, dim: usize) -> LayerNorm {
        let gamma = self.block(dim, Init::Ones);
        let beta = self.block(dim, Init::Zeros);
        LayerNorm { gamma, beta, dim }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Arch {
    FeedForward(ffn::Ffn),
    NetworkB(network_b::NetB),
    Transformer(transformer::Transformer),
}

/// Forward-pass intermediates kept for the backward pass.
pub struct Cache(CacheInner);

enum CacheInner {
    FeedForward(ffn::FfnCache),
    NetworkB(network_b::NetBCache),
    Transformer(Box<transformer::TfCache>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDef", into = "NetworkDef")]
pub struct Network {
    spec: NetSpec,
    window: WindowSpec,
    arch: Arch,
    blocks: Vec<Block>,
    n_params: usize,
}

#[derive(Clone, Serialize, Deserialize)]
struct NetworkDef {
    spec: NetSpec,
    window: WindowSpec,
}

impl TryFrom<NetworkDef> for Network {
    type Error = Error;
    fn try_from(d: NetworkDef) -> Result<Self> {
        Network::new(d.spec, d.window)
    }
}

impl From<Network> for NetworkDef {
    fn from(n: Network) -> Self {
        NetworkDef {
            spec: n.spec,
            window: n.window,
        }
    }
}

impl Network {
    pub fn new(spec: NetSpec, window: WindowSpec) -> Result<Self> {
        spec.validate()?;
        window.validate()?;
        let mut alloc = Alloc::default();
        let arch = match &spec {
            NetSpec::FeedForward(s) => Arch::FeedForward(ffn::Ffn::build(s, input_size(&window), &mut alloc)),
            NetSpec::NetworkB(s) => Arch::NetworkB(network_b::NetB::build(s, &window, &mut alloc)),
            NetSpec::Transformer(s) => Arch::Transformer(transformer::Transformer::build(s, &window, &mut alloc)),
        };
        Ok(Network {
            spec,
            window,
            arch,
            n_params: alloc.n,
            blocks: alloc.blocks,
        })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn window(&self) -> &WindowSpec {
        &self.window
    }

    pub fn input_dim(&self) -> usize {
        input_size(&self.window)
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.n_params
    }

    /// Operations for one forward pass; see each architecture for what is counted.
    pub fn flops(&self) -> usize {
        match &self.arch {
            Arch::FeedForward(a) => a.flops(),
            Arch::NetworkB(a) => a.flops(),
            Arch::Transformer(a) => a.flops(),
        }
    }

    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut r = rng::rng(seed);
        let mut p = vec![0.0; self.n_params];
        for b in &self.blocks {
            let dst = &mut p[b.offset..b.offset + b.len];
            match b.init {
                Init::Glorot { fan_in, fan_out } => {
                    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    dst.iter_mut().for_each(|v| *v = r.random_range(-a..=a));
                }
                Init::Zeros => dst.fill(0.0),
                Init::Ones => dst.fill(1.0),
                Init::Normal(std) => {
                    let n = Normal::new(0.0, std).expect("finite std");
                    dst.iter_mut().for_each(|v| *v = n.sample(&mut r));
                }
            }
        }
        p
    }

    fn check_input(&self, params: &[f64], x: &ArrayView2<f64>) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::Dimension {
                expected: self.n_params,
                got: params.len(),
            });
        }
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    /// Batch forward pass. `dropout` is `Some(rng)` only while training.
    pub fn forward(
        &self,
        params: &[f64],
        x: &ArrayView2<f64>,
        dropout: Option<&mut rng::Rng>,
    ) -> Result<(Array2<f64>, Cache)> {
        self.check_input(params, x)?;
        Ok(match &self.arch {
            Arch::FeedForward(a) => {
                let (y, c) = a.forward(params, x);
                (y, Cache(CacheInner::FeedForward(c)))
            }
            Arch::NetworkB(a) => {
                let (y, c) = a.forward(params, x);
                (y, Cache(CacheInner::NetworkB(c)))
            }
            Arch::Transformer(a) => {
                let (y, c) = a.forward(params, x, dropout);
                (y, Cache(CacheInner::Transformer(Box::new(c))))
            }
        })
    }

    /// Eval-mode prediction without keeping intermediates.
    pub fn predict(&self, params: &[f64], x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward(params, x, None)?.0)
    }

    /// Gradient of the loss with respect to every parameter, given `dy`.
    pub fn backward(&self, params: &[f64], cache: &Cache, dy: &Array2<f64>) -> Vec<f64> {
        let mut g = vec![0.0; self.n_params];
        match (&self.arch, &cache.0) {
            (Arch::FeedForward(a), CacheInner::FeedForward(c)) => a.backward(params, c, dy, &mut g),
            (Arch::NetworkB(a), CacheInner::NetworkB(c)) => a.backward(params, c, dy, &mut g),
            (Arch::Transformer(a), CacheInner::Transformer(c)) => a.backward(params, c, dy, &mut g),
            _ => unreachable!("cache from a different architecture"),
        }
        g
    }
}

/// A trained network with its weights, scaler and training curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuralModel {
    pub network: Network,
    #[serde(skip)]
    pub params: Vec<f64>,
    #[serde(default)]
    pub scaler: Option<Scaler>,
    #[serde(default)]
    pub curves: TrainCurves,
}

impl NeuralModel {
    pub fn untrained(network: Network, seed: u64) -> Self {
        let params = network.init_params(seed);
        NeuralModel {
            network,
            params,
            scaler: None,
            curves: TrainCurves::default(),
        }
    }

    /// One normalized input vector to one normalized output vector.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row");
        Ok(self.network.predict(&self.params, &view)?.row(0).to_vec())
    }

    pub fn predict_matrix(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        // Chunked so memory stays bounded on large evaluation sets.
        const CHUNK: usize = 1024;
        let mut out = Array2::zeros((x.nrows(), self.network.output_dim()));
        let mut start = 0;
        while start < x.nrows() {
            let end = (start + CHUNK).min(x.nrows());
            let y = self
                .network
                .predict(&self.params, &x.slice(ndarray::s![start..end, ..]))?;
            out.slice_mut(ndarray::s![start..end, ..]).assign(&y);
            start = end;
        }
        Ok(out)
    }

    pub fn param_count(&self) -> usize {
        self.network.param_count()
    }

    pub fn flops_count(&self) -> usize {
        self.network.flops()
    }
}

pub fn param_count(model: &NeuralModel) -> usize {
    model.param_count()
}

pub fn flops_count(model: &NeuralModel) -> usize {
    model.flops_count()
}
