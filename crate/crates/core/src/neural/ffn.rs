//! Plain multilayer perceptron with a linear output layer.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::layers::{Activation, Dense};
use super::Alloc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedForwardSpec {
    /// Hidden layer widths, input side first.
    pub widths: Vec<usize>,
    /// One activation per hidden layer.
    pub activations: Vec<Activation>,
    pub output_dim: usize,
}

impl FeedForwardSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.widths.len() != self.activations.len() {
            return Err(format!(
                "{} hidden widths but {} activations",
                self.widths.len(),
                self.activations.len()
            ));
        }
        if self.widths.contains(&0) || self.output_dim == 0 {
            return Err("layer widths must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(super) struct Ffn {
    layers: Vec<(Dense, Activation)>,
}

pub(super) struct FfnCache {
    /// Input to each layer; `inputs[0]` is the batch itself.
    inputs: Vec<Array2<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<Array2<f64>>,
}

impl Ffn {
    pub fn build(spec: &FeedForwardSpec, n_in: usize, alloc: &mut Alloc) -> Self {
        let mut layers = Vec::new();
        let mut width = n_in;
        for (&w, &a) in spec.widths.iter().zip(&spec.activations) {
            layers.push((alloc.dense(width, w), a));
            width = w;
        }
        layers.push((alloc.dense(width, spec.output_dim), Activation::Identity));
        Ffn { layers }
    }

    /// Dense-layer operations only; activations are not counted.
    pub fn flops(&self) -> usize {
        self.layers.iter().map(|(d, _)| d.flops()).sum()
    }

    pub fn forward(&self, p: &[f64], x: &ArrayView2<f64>) -> (Array2<f64>, FfnCache) {
        let mut inputs = vec![x.to_owned()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for (d, a) in &self.layers {
            let z = d.forward(p, &inputs.last().expect("input").view());
            inputs.push(a.forward(&z));
            pre.push(z);
        }
        let y = inputs.pop().expect("output");
        (y, FfnCache { inputs, pre })
    }

    pub fn backward(&self, p: &[f64], c: &FfnCache, dy: &Array2<f64>, g: &mut [f64]) {
        let mut d = dy.clone();
        for (i, (layer, act)) in self.layers.iter().enumerate().rev() {
            let dz = act.backward(&c.pre[i], &d);
            if i == 0 {
                layer.backward_params(&c.inputs[0].view(), &dz, g);
            } else {
                d = layer.backward(p, &c.inputs[i].view(), &dz, g);
            }
        }
    }
}
