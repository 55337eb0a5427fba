//! Column network: separate towers for position, force and temperature
//! features, concatenated into a shared trunk.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::layers::{Activation, Dense};
use super::Alloc;
use crate::features::WindowSpec;

fn relu() -> Activation {
    Activation::Relu
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkBSpec {
    pub position_widths: Vec<usize>,
    pub force_widths: Vec<usize>,
    /// Ignored when the window carries no temperature.
    pub temperature_widths: Vec<usize>,
    pub trunk_widths: Vec<usize>,
    #[serde(default = "relu")]
    pub activation: Activation,
    pub output_dim: usize,
}

impl NetworkBSpec {
    pub fn validate(&self) -> Result<(), String> {
        for (name, w) in [
            ("position", &self.position_widths),
            ("force", &self.force_widths),
            ("temperature", &self.temperature_widths),
        ] {
            if w.is_empty() || w.contains(&0) {
                return Err(format!("{name} column needs at least one positive width"));
            }
        }
        if self.trunk_widths.contains(&0) || self.output_dim == 0 {
            return Err("layer widths must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Column {
    /// Contiguous range of input features feeding this column.
    start: usize,
    end: usize,
    layers: Vec<Dense>,
}

#[derive(Clone, Debug, PartialEq)]
pub(super) struct NetB {
    columns: Vec<Column>,
    trunk: Vec<Dense>,
    out: Dense,
    act: Activation,
}

struct Tower {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

pub(super) struct NetBCache {
    columns: Vec<Tower>,
    trunk: Tower,
}

fn tower_forward(layers: &[Dense], act: Activation, p: &[f64], x: Array2<f64>) -> (Array2<f64>, Tower) {
    let mut inputs = vec![x];
    let mut pre = Vec::with_capacity(layers.len());
    for d in layers {
        let z = d.forward(p, &inputs.last().expect("input").view());
        inputs.push(act.forward(&z));
        pre.push(z);
    }
    let y = inputs.pop().expect("output");
    (y, Tower { inputs, pre })
}

/// Backpropagate through a tower; returns the gradient at its input unless
/// `need_input` is false.
fn tower_backward(
    layers: &[Dense],
    act: Activation,
    p: &[f64],
    t: &Tower,
    dy: Array2<f64>,
    g: &mut [f64],
    need_input: bool,
) -> Option<Array2<f64>> {
    let mut d = dy;
    for (i, layer) in layers.iter().enumerate().rev() {
        let dz = act.backward(&t.pre[i], &d);
        if i == 0 && !need_input {
            layer.backward_params(&t.inputs[0].view(), &dz, g);
            return None;
        }
        d = layer.backward(p, &t.inputs[i].view(), &dz, g);
    }
    Some(d)
}

impl NetB {
    pub fn build(spec: &NetworkBSpec, window: &WindowSpec, alloc: &mut Alloc) -> Self {
        let n_pos = 3 * window.position_offsets().len();
        let n_force = 3 * window.force_offsets().len();
        let mut ranges = vec![
            (0, n_pos, &spec.position_widths),
            (n_pos, n_pos + n_force, &spec.force_widths),
        ];
        if window.include_temperature {
            ranges.push((n_pos + n_force, n_pos + n_force + 1, &spec.temperature_widths));
        }
        let mut columns = Vec::new();
        let mut concat = 0;
        for (start, end, widths) in ranges {
            let mut width = end - start;
            let layers = widths
                .iter()
                .map(|&w| {
                    let d = alloc.dense(width, w);
                    width = w;
                    d
                })
                .collect();
            concat += width;
            columns.push(Column { start, end, layers });
        }
        let mut width = concat;
        let trunk = spec
            .trunk_widths
            .iter()
            .map(|&w| {
                let d = alloc.dense(width, w);
                width = w;
                d
            })
            .collect();
        let out = alloc.dense(width, spec.output_dim);
        NetB {
            columns,
            trunk,
            out,
            act: spec.activation,
        }
    }

    /// Dense-layer operations only; activations are not counted.
    pub fn flops(&self) -> usize {
        self.columns
            .iter()
            .flat_map(|c| &c.layers)
            .map(Dense::flops)
            .sum::<usize>()
            + self.trunk.iter().map(Dense::flops).sum::<usize>()
            + self.out.flops()
    }

    pub fn forward(&self, p: &[f64], x: &ArrayView2<f64>) -> (Array2<f64>, NetBCache) {
        let mut outs = Vec::with_capacity(self.columns.len());
        let mut towers = Vec::with_capacity(self.columns.len());
        for c in &self.columns {
            let (y, t) = tower_forward(&c.layers, self.act, p, x.slice(s![.., c.start..c.end]).to_owned());
            outs.push(y);
            towers.push(t);
        }
        let views: Vec<_> = outs.iter().map(|o| o.view()).collect();
        let joined = concatenate(Axis(1), &views).expect("same batch size");
        let (h, trunk) = tower_forward(&self.trunk, self.act, p, joined);
        let y = self.out.forward(p, &h.view());
        let mut trunk = trunk;
        trunk.inputs.push(h);
        (y, NetBCache { columns: towers, trunk })
    }

    pub fn backward(&self, p: &[f64], c: &NetBCache, dy: &Array2<f64>, g: &mut [f64]) {
        let h = c.trunk.inputs.last().expect("trunk output");
        let dh = self.out.backward(p, &h.view(), dy, g);
        let djoined = if self.trunk.is_empty() {
            dh
        } else {
            tower_backward(&self.trunk, self.act, p, &c.trunk, dh, g, true).expect("input gradient")
        };
        let mut at = 0;
        for (col, t) in self.columns.iter().zip(&c.columns) {
            let w = col.layers.last().expect("non-empty column").n_out;
            let d = djoined.slice(s![.., at..at + w]).to_owned();
            tower_backward(&col.layers, self.act, p, t, d, g, false);
            at += w;
        }
    }
}
