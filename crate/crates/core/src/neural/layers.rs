//! Batch layer primitives over a flat parameter vector.
//!
//! Every layer reads its weights from `params[offset..]` and accumulates its
//! gradients into the matching range of a gradient vector of the same length.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis, Zip};
use serde::{Deserialize, Serialize};

pub const LN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Sigmoid,
    Relu,
    Hardtanh,
    Tanh,
    LeakyRelu(f64),
    Elu,
    /// Tanh approximation; used inside transformer blocks.
    Gelu,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // √(2/π)
const GELU_K: f64 = 0.044_715;

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Relu => z.max(0.0),
            Activation::Hardtanh => z.clamp(-1.0, 1.0),
            Activation::Tanh => z.tanh(),
            Activation::LeakyRelu(s) => {
                if z > 0.0 {
                    z
                } else {
                    s * z
                }
            }
            Activation::Elu => {
                if z > 0.0 {
                    z
                } else {
                    z.exp_m1()
                }
            }
            Activation::Gelu => 0.5 * z * (1.0 + (GELU_C * (z + GELU_K * z * z * z)).tanh()),
        }
    }

    /// Derivative at pre-activation `z`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            Activation::Relu => f64::from(z > 0.0),
            Activation::Hardtanh => f64::from(z > -1.0 && z < 1.0),
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::LeakyRelu(s) => {
                if z > 0.0 {
                    1.0
                } else {
                    s
                }
            }
            Activation::Elu => {
                if z > 0.0 {
                    1.0
                } else {
                    z.exp()
                }
            }
            Activation::Gelu => {
                let t = (GELU_C * (z + GELU_K * z * z * z)).tanh();
                0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_K * z * z)
            }
        }
    }

    pub fn forward(self, z: &Array2<f64>) -> Array2<f64> {
        z.mapv(|v| self.apply(v))
    }

    /// `dz = dy ⊙ f'(z)`.
    pub fn backward(self, z: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
        let mut dz = dy.clone();
        Zip::from(&mut dz).and(z).for_each(|d, &v| *d *= self.derivative(v));
        dz
    }
}

pub fn view2(p: &[f64], offset: usize, rows: usize, cols: usize) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((rows, cols), &p[offset..offset + rows * cols]).expect("param block")
}

pub fn view1(p: &[f64], offset: usize, len: usize) -> ArrayView1<'_, f64> {
    ArrayView1::from(&p[offset..offset + len])
}

pub fn view2_mut(p: &mut [f64], offset: usize, rows: usize, cols: usize) -> ArrayViewMut2<'_, f64> {
    ArrayViewMut2::from_shape((rows, cols), &mut p[offset..offset + rows * cols]).expect("param block")
}

pub fn view1_mut(p: &mut [f64], offset: usize, len: usize) -> ArrayViewMut1<'_, f64> {
    ArrayViewMut1::from(&mut p[offset..offset + len])
}

/// `y = x·W + b` with `W` stored row-major as `n_in × n_out`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dense {
    pub w: usize,
    pub b: usize,
    pub n_in: usize,
    pub n_out: usize,
}

impl Dense {
    pub fn param_count(&self) -> usize {
        self.n_in * self.n_out + self.n_out
    }

    /// Multiply-adds counted as two operations, plus one per bias.
    pub fn flops(&self) -> usize {
        2 * self.n_in * self.n_out + self.n_out
    }

    pub fn forward(&self, p: &[f64], x: &ArrayView2<f64>) -> Array2<f64> {
        let mut y = x.dot(&view2(p, self.w, self.n_in, self.n_out));
        y += &view1(p, self.b, self.n_out);
        y
    }

    /// Accumulate parameter gradients and return `dx`.
    pub fn backward(&self, p: &[f64], x: &ArrayView2<f64>, dy: &Array2<f64>, g: &mut [f64]) -> Array2<f64> {
        {
            let mut gw = view2_mut(g, self.w, self.n_in, self.n_out);
            general_mat_mul(1.0, &x.t(), dy, 1.0, &mut gw);
        }
        {
            let mut gb = view1_mut(g, self.b, self.n_out);
            gb += &dy.sum_axis(Axis(0));
        }
        dy.dot(&view2(p, self.w, self.n_in, self.n_out).t())
    }

    /// Parameter gradients only, for layers whose input needs no gradient.
    pub fn backward_params(&self, x: &ArrayView2<f64>, dy: &Array2<f64>, g: &mut [f64]) {
        let mut gw = view2_mut(g, self.w, self.n_in, self.n_out);
        general_mat_mul(1.0, &x.t(), dy, 1.0, &mut gw);
        let mut gb = view1_mut(g, self.b, self.n_out);
        gb += &dy.sum_axis(Axis(0));
    }
}

/// Row-wise layer normalization with learned gain and shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerNorm {
    pub gamma: usize,
    pub beta: usize,
    pub dim: usize,
}

pub struct LnCache {
    pub xhat: Array2<f64>,
    pub rstd: Array1<f64>,
}

impl LayerNorm {
    pub fn param_count(&self) -> usize {
        2 * self.dim
    }

    pub fn forward(&self, p: &[f64], x: &ArrayView2<f64>) -> (Array2<f64>, LnCache) {
        let d = self.dim as f64;
        let mut xhat = x.to_owned();
        let mut rstd = Array1::zeros(x.nrows());
        for (mut row, r) in xhat.axis_iter_mut(Axis(0)).zip(rstd.iter_mut()) {
            let mean = row.sum() / d;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
            let s = 1.0 / (var + LN_EPS).sqrt();
            row.mapv_inplace(|v| (v - mean) * s);
            *r = s;
        }
        let gamma = view1(p, self.gamma, self.dim);
        let beta = view1(p, self.beta, self.dim);
        let y = &xhat * &gamma + beta;
        (y, LnCache { xhat, rstd })
    }

    pub fn backward(&self, p: &[f64], cache: &LnCache, dy: &Array2<f64>, g: &mut [f64]) -> Array2<f64> {
        let d = self.dim as f64;
        {
            let mut gg = view1_mut(g, self.gamma, self.dim);
            gg += &(dy * &cache.xhat).sum_axis(Axis(0));
        }
        {
            let mut gb = view1_mut(g, self.beta, self.dim);
            gb += &dy.sum_axis(Axis(0));
        }
        let gamma = view1(p, self.gamma, self.dim);
        let dxhat = dy * &gamma;
        let mut dx = Array2::zeros(dy.raw_dim());
        for (((mut out, dh), xh), &r) in dx
            .axis_iter_mut(Axis(0))
            .zip(dxhat.axis_iter(Axis(0)))
            .zip(cache.xhat.axis_iter(Axis(0)))
            .zip(cache.rstd.iter())
        {
            let mean_dh = dh.sum() / d;
            let mean_dh_xh = dh.iter().zip(xh.iter()).map(|(a, b)| a * b).sum::<f64>() / d;
            Zip::from(&mut out)
                .and(&dh)
                .and(&xh)
                .for_each(|o, &a, &b| *o = r * (a - mean_dh - b * mean_dh_xh));
        }
        dx
    }
}

/// Row-wise softmax in place.
pub fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.axis_iter_mut(Axis(0)) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
}

/// Gradient through a row-wise softmax with output `p`.
pub fn softmax_backward(p: &Array2<f64>, dp: &Array2<f64>) -> Array2<f64> {
    let mut ds = Array2::zeros(p.raw_dim());
    for ((mut out, pr), dr) in ds
        .axis_iter_mut(Axis(0))
        .zip(p.axis_iter(Axis(0)))
        .zip(dp.axis_iter(Axis(0)))
    {
        let dot: f64 = pr.iter().zip(dr.iter()).map(|(a, b)| a * b).sum();
        Zip::from(&mut out)
            .and(&pr)
            .and(&dr)
            .for_each(|o, &a, &b| *o = a * (b - dot));
    }
    ds
}
