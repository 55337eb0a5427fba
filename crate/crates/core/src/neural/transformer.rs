//! Pre-norm transformer encoder over per-timestep tokens with a class token
//! readout.
//!
//! Each distinct tick offset of the window becomes one token of width 6
//! (position triple then force triple, zero where the window has no sample)
//! plus one slot for temperature when present. A learned class token is
//! prepended and the regression head reads its final state.

use ndarray::{s, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{softmax_backward, softmax_rows, view1, view2, Activation, Dense, LayerNorm, LnCache};
use super::{Alloc, Init};
use crate::features::{token_layout, TokenSlot, WindowSpec};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformerSpec {
    pub n_layers: usize,
    pub n_heads: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    #[serde(default)]
    pub dropout: f64,
    pub output_dim: usize,
}

impl TransformerSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_layers == 0 || self.n_heads == 0 || self.hidden_dim == 0 || self.output_dim == 0 {
            return Err("transformer sizes must be positive".into());
        }
        if self.embed_dim == 0 || !self.embed_dim.is_multiple_of(self.n_heads) {
            return Err(format!(
                "embed_dim {} is not a positive multiple of n_heads {}",
                self.embed_dim, self.n_heads
            ));
        }
        if !(0.0..=0.5).contains(&self.dropout) {
            return Err(format!("dropout must be in [0, 0.5], got {}", self.dropout));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Layer {
    ln1: LayerNorm,
    q: Dense,
    k: Dense,
    v: Dense,
    o: Dense,
    ln2: LayerNorm,
    fc1: Dense,
    fc2: Dense,
}

#[derive(Clone, Debug, PartialEq)]
pub(super) struct Transformer {
    slots: Vec<TokenSlot>,
    token_width: usize,
    d: usize,
    heads: usize,
    dropout: f64,
    embed: Dense,
    cls: usize,
    pos: usize,
    layers: Vec<Layer>,
    ln_f: LayerNorm,
    head: Dense,
}

struct LayerCache {
    ln1: LnCache,
    a: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Attention weights per (batch row, head).
    probs: Vec<Array2<f64>>,
    o: Array2<f64>,
    mask1: Option<Array2<f64>>,
    ln2: LnCache,
    m_in: Array2<f64>,
    z: Array2<f64>,
    gz: Array2<f64>,
    mask2: Option<Array2<f64>>,
}

pub(super) struct TfCache {
    batch: usize,
    tokens: Array2<f64>,
    layers: Vec<LayerCache>,
    ln_f: LnCache,
    f: Array2<f64>,
}

fn dropout_mask(r: &mut rng::Rng, shape: (usize, usize), p: f64) -> Array2<f64> {
    let keep = 1.0 - p;
    Array2::from_shape_simple_fn(shape, || if r.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
}

/// Scaled dot-product attention over `nb` sequences of length `sl` stacked
/// row-wise, split into `heads` column groups.
fn attend(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    nb: usize,
    sl: usize,
    heads: usize,
) -> (Array2<f64>, Vec<Array2<f64>>) {
    let dh = q.ncols() / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut o = Array2::zeros(q.raw_dim());
    let mut probs = Vec::with_capacity(nb * heads);
    for b in 0..nb {
        let rows = b * sl..(b + 1) * sl;
        for hd in 0..heads {
            let cols = hd * dh..(hd + 1) * dh;
            let qs = q.slice(s![rows.clone(), cols.clone()]);
            let ks = k.slice(s![rows.clone(), cols.clone()]);
            let vs = v.slice(s![rows.clone(), cols.clone()]);
            let mut sc = qs.dot(&ks.t()) * scale;
            softmax_rows(&mut sc);
            o.slice_mut(s![rows.clone(), cols]).assign(&sc.dot(&vs));
            probs.push(sc);
        }
    }
    (o, probs)
}

impl Transformer {
    pub fn build(spec: &TransformerSpec, window: &WindowSpec, alloc: &mut Alloc) -> Self {
        let slots = token_layout(window);
        let token_width = 6 + usize::from(window.include_temperature);
        let (d, h) = (spec.embed_dim, spec.hidden_dim);
        let embed = alloc.dense(token_width, d);
        let cls = alloc.block(d, Init::Normal(0.02));
        let pos = alloc.block((slots.len() + 1) * d, Init::Normal(0.02));
        let layers = (0..spec.n_layers)
            .map(|_| Layer {
                ln1: alloc.layer_norm(d),
                q: alloc.dense(d, d),
                k: alloc.dense(d, d),
                v: alloc.dense(d, d),
                o: alloc.dense(d, d),
                ln2: alloc.layer_norm(d),
                fc1: alloc.dense(d, h),
                fc2: alloc.dense(h, d),
            })
            .collect();
        let ln_f = alloc.layer_norm(d);
        let head = alloc.dense(d, spec.output_dim);
        Transformer {
            slots,
            token_width,
            d,
            heads: spec.n_heads,
            dropout: spec.dropout,
            embed,
            cls,
            pos,
            layers,
            ln_f,
            head,
        }
    }

    /// Embedding, projections, attention products, MLPs and head; norms,
    /// softmax and activations are not counted.
    pub fn flops(&self) -> usize {
        let t = self.slots.len();
        let s = t + 1;
        let d = self.d;
        let embed = t * self.embed.flops();
        let per_layer: usize = self
            .layers
            .iter()
            .map(|l| 4 * s * l.q.flops() + 2 * (2 * s * s * d) + s * l.fc1.flops() + s * l.fc2.flops())
            .sum();
        embed + per_layer + self.head.flops()
    }

    fn tokens(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let t = self.slots.len();
        let mut u = Array2::zeros((x.nrows() * t, self.token_width));
        for (b, row) in x.rows().into_iter().enumerate() {
            for (k, slot) in self.slots.iter().enumerate() {
                let mut dst = u.row_mut(b * t + k);
                if let Some(p) = slot.position {
                    dst.slice_mut(s![0..3]).assign(&row.slice(s![p..p + 3]));
                }
                if let Some(f) = slot.force {
                    dst.slice_mut(s![3..6]).assign(&row.slice(s![f..f + 3]));
                }
                if let Some(i) = slot.temperature {
                    dst[6] = row[i];
                }
            }
        }
        u
    }

    pub fn forward(
        &self,
        p: &[f64],
        x: &ArrayView2<f64>,
        mut dropout: Option<&mut rng::Rng>,
    ) -> (Array2<f64>, TfCache) {
        let (nb, t, d) = (x.nrows(), self.slots.len(), self.d);
        let sl = t + 1;
        let train_drop = self.dropout > 0.0 && dropout.is_some();
        let tokens = self.tokens(x);
        let e = self.embed.forward(p, &tokens.view());
        let pos = view2(p, self.pos, sl, d);
        let cls = view1(p, self.cls, d);
        let mut h = Array2::zeros((nb * sl, d));
        for b in 0..nb {
            h.row_mut(b * sl).assign(&(&cls + &pos.row(0)));
            for k in 0..t {
                h.row_mut(b * sl + k + 1).assign(&(&e.row(b * t + k) + &pos.row(k + 1)));
            }
        }

        let mut caches = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let (a, ln1) = l.ln1.forward(p, &h.view());
            let q = l.q.forward(p, &a.view());
            let k = l.k.forward(p, &a.view());
            let v = l.v.forward(p, &a.view());
            let (o, probs) = attend(&q, &k, &v, nb, sl, self.heads);
            let mut att = l.o.forward(p, &o.view());
            let mask1 = train_drop.then(|| dropout_mask(dropout.as_deref_mut().expect("rng"), att.dim(), self.dropout));
            if let Some(m) = &mask1 {
                att *= m;
            }
            h += &att;
            let (m_in, ln2) = l.ln2.forward(p, &h.view());
            let z = l.fc1.forward(p, &m_in.view());
            let gz = Activation::Gelu.forward(&z);
            let mut m = l.fc2.forward(p, &gz.view());
            let mask2 = train_drop.then(|| dropout_mask(dropout.as_deref_mut().expect("rng"), m.dim(), self.dropout));
            if let Some(mk) = &mask2 {
                m *= mk;
            }
            h += &m;
            caches.push(LayerCache {
                ln1,
                a,
                q,
                k,
                v,
                probs,
                o,
                mask1,
                ln2,
                m_in,
                z,
                gz,
                mask2,
            });
        }

        let cls_rows: Vec<usize> = (0..nb).map(|b| b * sl).collect();
        let hc = h.select(Axis(0), &cls_rows);
        let (f, ln_f) = self.ln_f.forward(p, &hc.view());
        let y = self.head.forward(p, &f.view());
        (
            y,
            TfCache {
                batch: nb,
                tokens,
                layers: caches,
                ln_f,
                f,
            },
        )
    }

    pub fn backward(&self, p: &[f64], c: &TfCache, dy: &Array2<f64>, g: &mut [f64]) {
        let (nb, t, d) = (c.batch, self.slots.len(), self.d);
        let sl = t + 1;
        let df = self.head.backward(p, &c.f.view(), dy, g);
        let dhc = self.ln_f.backward(p, &c.ln_f, &df, g);
        let mut dh = Array2::zeros((nb * sl, d));
        for b in 0..nb {
            dh.row_mut(b * sl).assign(&dhc.row(b));
        }

        let dhd = d / self.heads;
        let scale = 1.0 / (dhd as f64).sqrt();
        for (l, lc) in self.layers.iter().zip(&c.layers).rev() {
            // MLP branch.
            let mut dm = dh.clone();
            if let Some(m) = &lc.mask2 {
                dm *= m;
            }
            let dgz = l.fc2.backward(p, &lc.gz.view(), &dm, g);
            let dz = Activation::Gelu.backward(&lc.z, &dgz);
            let dm_in = l.fc1.backward(p, &lc.m_in.view(), &dz, g);
            dh += &l.ln2.backward(p, &lc.ln2, &dm_in, g);

            // Attention branch.
            let mut datt = dh.clone();
            if let Some(m) = &lc.mask1 {
                datt *= m;
            }
            let d_o = l.o.backward(p, &lc.o.view(), &datt, g);
            let mut dq = Array2::zeros((nb * sl, d));
            let mut dk = Array2::zeros((nb * sl, d));
            let mut dv = Array2::zeros((nb * sl, d));
            for b in 0..nb {
                let rows = b * sl..(b + 1) * sl;
                for hd in 0..self.heads {
                    let cols = hd * dhd..(hd + 1) * dhd;
                    let pr = &lc.probs[b * self.heads + hd];
                    let dos = d_o.slice(s![rows.clone(), cols.clone()]);
                    let qs = lc.q.slice(s![rows.clone(), cols.clone()]);
                    let ks = lc.k.slice(s![rows.clone(), cols.clone()]);
                    let vs = lc.v.slice(s![rows.clone(), cols.clone()]);
                    dv.slice_mut(s![rows.clone(), cols.clone()]).assign(&pr.t().dot(&dos));
                    let dp = dos.dot(&vs.t());
                    let dsc = softmax_backward(pr, &dp) * scale;
                    dq.slice_mut(s![rows.clone(), cols.clone()]).assign(&dsc.dot(&ks));
                    dk.slice_mut(s![rows.clone(), cols]).assign(&dsc.t().dot(&qs));
                }
            }
            let mut da = l.q.backward(p, &lc.a.view(), &dq, g);
            da += &l.k.backward(p, &lc.a.view(), &dk, g);
            da += &l.v.backward(p, &lc.a.view(), &dv, g);
            dh += &l.ln1.backward(p, &lc.ln1, &da, g);
        }

        let mut de = Array2::zeros((nb * t, d));
        {
            let (gcls, rest) = g[self.cls..].split_at_mut(d);
            // Position embeddings follow the class token directly.
            debug_assert_eq!(self.pos, self.cls + d);
            for b in 0..nb {
                for k in 0..sl {
                    let src = dh.row(b * sl + k);
                    let gp = &mut rest[k * d..(k + 1) * d];
                    Zip::from(gp).and(&src).for_each(|a, &v| *a += v);
                    if k == 0 {
                        Zip::from(&mut *gcls).and(&src).for_each(|a, &v| *a += v);
                    } else {
                        de.row_mut(b * t + k - 1).assign(&src);
                    }
                }
            }
        }
        self.embed.backward_params(&c.tokens.view(), &de, g);
    }
}
