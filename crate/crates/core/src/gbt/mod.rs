//! Gradient-boosted regression trees, one ensemble per output channel.
//!
//! The default objective is absolute error: gradients are `sign(ŷ − y)` with
//! a unit hessian, so the second-order split gain reduces to a count-weighted
//! gradient imbalance and `min_child_weight` to a minimum leaf size. After a
//! tree's structure is fixed its leaves are reset to the median residual of
//! the rows they hold, which is the absolute-error optimum for that leaf.

mod tree;

use std::sync::OnceLock;

use ndarray::{Array2, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

use tree::FlatTrees;
use tree::{grow, nest, GrowParams};
pub use tree::{subsample_features, Presorted, TreeNode};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    AbsoluteError,
    SquaredError,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub eta: f64,
    pub gamma: f64,
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_child_weight: f64,
    /// 0 disables the cap.
    pub max_delta_step: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub colsample_bylevel: f64,
    pub colsample_bynode: f64,
    /// L2 penalty on leaf weights.
    #[serde(default = "one")]
    pub reg_lambda: f64,
    #[serde(default)]
    pub objective: Objective,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            eta: 0.3,
            gamma: 0.0,
            n_estimators: 100,
            max_depth: 6,
            min_child_weight: 1.0,
            max_delta_step: 0.0,
            subsample: 1.0,
            colsample_bytree: 1.0,
            colsample_bylevel: 1.0,
            colsample_bynode: 1.0,
            reg_lambda: 1.0,
            objective: Objective::AbsoluteError,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !unit(self.eta) {
            return Err(Error::config("eta must be in (0, 1]"));
        }
        if self.max_depth < 1 {
            return Err(Error::config("max_depth must be >= 1"));
        }
        for (name, v) in [
            ("subsample", self.subsample),
            ("colsample_bytree", self.colsample_bytree),
            ("colsample_bylevel", self.colsample_bylevel),
            ("colsample_bynode", self.colsample_bynode),
        ] {
            if !unit(v) {
                return Err(Error::config(format!("{name} must be in (0, 1]")));
            }
        }
        if self.gamma < 0.0 || self.min_child_weight < 0.0 || self.max_delta_step < 0.0 || self.reg_lambda < 0.0 {
            return Err(Error::config(
                "gamma, min_child_weight, max_delta_step and reg_lambda must be >= 0",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub base_score: f64,
    pub eta: f64,
    pub trees: Vec<TreeNode>,
}

impl Ensemble {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base_score + self.eta * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn node_count(&self) -> usize {
        self.trees.iter().map(TreeNode::node_count).sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GbtModel {
    pub params: GbtParams,
    pub n_features: usize,
    pub channels: Vec<Ensemble>,
    /// Flattened copy of `channels`, built on first prediction.
    #[serde(skip)]
    flat: OnceLock<Vec<FlatTrees>>,
}

impl PartialEq for GbtModel {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.n_features == other.n_features && self.channels == other.channels
    }
}

impl GbtModel {
    pub fn new(params: GbtParams, n_features: usize, channels: Vec<Ensemble>) -> Self {
        GbtModel {
            params,
            n_features,
            channels,
            flat: OnceLock::new(),
        }
    }

    fn flat(&self) -> &[FlatTrees] {
        self.flat
            .get_or_init(|| self.channels.iter().map(|e| FlatTrees::new(&e.trees)).collect())
    }

    fn predict_row<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.channels
            .iter()
            .zip(self.flat())
            .map(move |(e, f)| e.base_score + e.eta * f.sum(x))
    }

    /// One prediction per channel, on the normalized scale.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.predict_row(x).collect())
    }

    pub fn predict_matrix(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        let rows: Vec<f64> = (0..x.nrows())
            .into_par_iter()
            .flat_map_iter(|i| {
                let row = x.row(i).to_vec();
                self.predict_row(&row).collect::<Vec<_>>()
            })
            .collect();
        Ok(Array2::from_shape_vec((x.nrows(), self.channels.len()), rows).expect("prediction shape"))
    }

    /// Total nodes over all trees and channels; the model's parameter count.
    pub fn node_count(&self) -> usize {
        self.channels.iter().map(Ensemble::node_count).sum()
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn check_matrix(x: &Array2<f64>, n_targets: usize) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Insufficient("cannot fit trees on an empty matrix".into()));
    }
    if n_targets != x.nrows() {
        return Err(Error::Dimension {
            expected: x.nrows(),
            got: n_targets,
        });
    }
    Ok(())
}

pub fn presort(x: &Array2<f64>) -> Presorted {
    Presorted::new(x.axis_iter(Axis(1)).map(|c| c.to_vec()).collect())
}

/// Fit one channel. `y` is the (normalized) target column.
pub fn fit_channel(x: &Array2<f64>, y: &[f64], params: &GbtParams, seed: u64) -> Result<Ensemble> {
    check_matrix(x, y.len())?;
    params.validate()?;
    fit_presorted(&presort(x), y, params, seed)
}

fn fit_presorted(data: &Presorted, y: &[f64], params: &GbtParams, seed: u64) -> Result<Ensemble> {
    let n = data.n_rows();
    let mae = params.objective == Objective::AbsoluteError;
    let base_score = if mae {
        median(&mut y.to_vec())
    } else {
        y.iter().sum::<f64>() / n as f64
    };
    let grow_params = GrowParams {
        max_depth: params.max_depth,
        gamma: params.gamma,
        min_child_weight: params.min_child_weight,
        reg_lambda: params.reg_lambda,
        colsample_bylevel: params.colsample_bylevel,
        colsample_bynode: params.colsample_bynode,
    };
    let clip = |w: f64| {
        if params.max_delta_step > 0.0 {
            w.clamp(-params.max_delta_step, params.max_delta_step)
        } else {
            w
        }
    };

    let all_features: Vec<usize> = (0..data.n_features()).collect();
    let mut rng = rng::rng(seed);
    let mut pred = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let hess = vec![1.0; n];
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mut rows = Vec::with_capacity(n);

    for _ in 0..params.n_estimators {
        rows.clear();
        if params.subsample >= 1.0 {
            rows.extend(0..n);
        } else {
            rows.extend((0..n).filter(|_| rng.random::<f64>() < params.subsample));
        }
        let tree_features = subsample_features(&mut rng, &all_features, params.colsample_bytree);
        if rows.is_empty() {
            trees.push(TreeNode::Leaf { value: 0.0 });
            continue;
        }
        for &i in &rows {
            let d = pred[i] - y[i];
            grad[i] = if mae {
                if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            } else {
                d
            };
        }

        let (nodes, pos) = grow(data, &rows, &grad, &hess, &tree_features, &grow_params, &mut rng);

        let tree = if mae {
            let mut residuals: Vec<Vec<f64>> = vec![Vec::new(); nodes.len()];
            for &i in &rows {
                residuals[pos[i] as usize].push(y[i] - pred[i]);
            }
            let values: Vec<f64> = residuals
                .iter_mut()
                .map(|r| if r.is_empty() { 0.0 } else { clip(median(r)) })
                .collect();
            nest(&nodes, 0, &|id| values[id])
        } else {
            nest(&nodes, 0, &|id| clip(-nodes[id].g / (nodes[id].h + params.reg_lambda)))
        };

        for (i, p) in pred.iter_mut().enumerate() {
            *p += params.eta * tree.predict_with(|f| data.columns[f][i]);
        }
        trees.push(tree);
    }

    Ok(Ensemble {
        base_score,
        eta: params.eta,
        trees,
    })
}

/// Fit one ensemble per column of `y`, all with the same params and seed.
pub fn fit_all(x: &Array2<f64>, y: &Array2<f64>, params: &GbtParams, seed: u64) -> Result<GbtModel> {
    check_matrix(x, y.nrows())?;
    params.validate()?;
    let data = presort(x);
    let columns: Vec<Vec<f64>> = y.axis_iter(Axis(1)).map(|c| c.to_vec()).collect();
    let channels = columns
        .par_iter()
        .map(|col| fit_presorted(&data, col, params, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(GbtModel::new(params.clone(), x.ncols(), channels))
}
